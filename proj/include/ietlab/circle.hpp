#pragma once

// Circle-map dynamics of an angle map: rotation numbers, Birkhoff averages of
// the inter-event time and periodic orbits of phi^q.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ietlab/angle_map.hpp"
#include "ietlab/error.hpp"
#include "ietlab/iet.hpp"
#include "ietlab/parallel.hpp"

namespace ietlab {

struct Rational {
  long p = 0;
  long q = 1;
};

/// Best rational approximations of x from its continued fraction, returning the
/// first convergent (or semiconvergent) with q <= q_max within tol of x.
inline std::optional<Rational> rational_guess(double x, long q_max, double tol) {
  long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double rest = x;
  for (int iter = 0; iter < 64; ++iter) {
    const double a_real = std::floor(rest);
    if (std::abs(a_real) > 1e15) break;
    const long a = static_cast<long>(a_real);
    // Semiconvergents between the previous and the next convergent first.
    for (long m = (a + 1) / 2; m < a; ++m) {
      const long p = m * p1 + p0, q = m * q1 + q0;
      if (q > q_max) break;
      if (std::abs(x - static_cast<double>(p) / q) < tol) return Rational{p, q};
    }
    const long p2 = a * p1 + p0, q2 = a * q1 + q0;
    if (q2 > q_max) break;
    if (std::abs(x - static_cast<double>(p2) / q2) < tol) return Rational{p2, q2};
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    const double frac = rest - a_real;
    if (frac < 1e-15) break;
    rest = 1.0 / frac;
  }
  return std::nullopt;
}

struct RotationEstimate {
  double value = 0.0;          ///< in [0, 2pi)
  double lifted = 0.0;         ///< (Phi^N(theta0) - theta0) / N before reduction
  std::size_t iterations = 0;
  std::vector<std::pair<std::size_t, double>> history;  ///< partial estimates at n = 1, 2, 4, ...
  double accelerated = 0.0;    ///< least-squares slope of Phi^n(theta0) against n, in [0, 2pi)
  std::optional<Rational> guess;  ///< value / 2pi ~ p / q, q <= q_max
  double guess_residual = 0.0;    ///< in turns
  double second_seed_value = 0.0;
  double seed_gap = 0.0;
  bool seeds_agree = false;       ///< gap <= 2pi / N
  bool monotone_lift = true;
  std::vector<std::string> warnings;
  std::string confidence;
};

namespace detail {

inline double turns_gap(double a, double b) {
  return std::abs(std::remainder(a - b, kTwoPi));
}

}  // namespace detail

/// rho = (Phi^N(theta0) - theta0) / N reduced to [0, 2pi), with a rationality
/// guess p/q (q <= q_max, residual < 1/(2N) turns). A non-monotone lift only
/// attaches a warning.
template <AngleMapModel Model>
RotationEstimate rotation_number(const Model& model, double theta0, std::size_t n,
                                 std::optional<double> second_seed = std::nullopt) {
  if (n == 0) throw Error(ErrorKind::Config, "rotation number needs N >= 1");
  const NumericPolicy& pol = model.policy();
  RotationEstimate out;
  out.iterations = n;
  const double theta1 = second_seed ? *second_seed : theta0 + 0.5 * kPi;

  LiftTrace tr[2];
  parallel_for(2, [&](std::size_t i) {
    tr[i] = lift(model, i == 0 ? theta0 : theta1, n, -kPi, i == 0 ? 512 : 0);
  });
  const auto& values = tr[0].values;
  out.monotone_lift = tr[0].monotone;
  out.lifted = (values[n] - values[0]) / static_cast<double>(n);
  out.value = wrap_positive(out.lifted, kTwoPi);
  for (std::size_t m = 1; m <= n; m *= 2) out.history.emplace_back(m, (values[m] - values[0]) / static_cast<double>(m));
  if (out.history.back().first != n) out.history.emplace_back(n, out.lifted);

  // Slope by least squares of Phi^j(theta0) on j.
  const double nn = static_cast<double>(n + 1);
  double sj = 0, sv = 0, sjj = 0, sjv = 0;
  for (std::size_t j = 0; j <= n; ++j) {
    const double x = static_cast<double>(j), y = values[j] - values[0];
    sj += x; sv += y; sjj += x * x; sjv += x * y;
  }
  const double denom = nn * sjj - sj * sj;
  out.accelerated = wrap_positive(denom > 0.0 ? (nn * sjv - sj * sv) / denom : out.lifted, kTwoPi);

  const double turns = out.value / kTwoPi;
  const double tol = 1.0 / (2.0 * static_cast<double>(n));
  out.guess = rational_guess(turns, pol.rational_qmax, tol);
  if (out.guess) {
    out.guess->p %= out.guess->q;
    out.guess_residual = std::abs(std::remainder(turns - static_cast<double>(out.guess->p) / out.guess->q, 1.0));
  }

  const double v1 = (tr[1].values[n] - tr[1].values[0]) / static_cast<double>(n);
  out.second_seed_value = wrap_positive(v1, kTwoPi);
  out.seed_gap = detail::turns_gap(out.value, out.second_seed_value);
  out.seeds_agree = out.seed_gap <= kTwoPi / static_cast<double>(n);

  if (!out.monotone_lift) out.warnings.push_back("NonMonotoneLift");
  if (!out.seeds_agree) out.warnings.push_back("SeedDisagreement");
  if (out.guess) {
    out.confidence = "guess only: p/q with q <= " + std::to_string(pol.rational_qmax) +
                     " fits within 1/(2N); rationality cannot be decided from a finite orbit";
  } else {
    out.confidence = "no p/q with q <= " + std::to_string(pol.rational_qmax) +
                     " fits within 1/(2N); irrational or of larger period";
  }
  return out;
}

struct TauAvgLadder {
  std::vector<std::size_t> n;
  std::vector<double> value;
  bool complete = true;
  std::string error;  ///< set when the orbit hit HorizonExceeded
};

/// Birkhoff averages (1/N) sum_{j<N} tau_s(phi^j(theta0)) for N, 2N, 4N.
template <AngleMapModel Model>
TauAvgLadder tau_avg(const Model& model, double theta0, std::size_t n) {
  TauAvgLadder out;
  double theta = wrap_positive(theta0, kTwoPi);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t target : {n, 2 * n, 4 * n}) {
    try {
      for (; count < target; ++count) {
        const MapStep s = model.step(theta);
        sum += s.tau;
        theta = s.next;
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::HorizonExceeded) throw;
      out.complete = false;
      out.error = e.what();
      return out;
    }
    out.n.push_back(target);
    out.value.push_back(sum / static_cast<double>(target));
  }
  return out;
}

struct ErgodicPoint {
  double theta0 = 0.0;
  std::vector<double> tau_avg;  ///< one per ladder entry
  bool divergent = false;
  std::string error;
};

struct ErgodicReport {
  std::vector<std::size_t> ladder;
  std::vector<ErgodicPoint> points;
  double mean = 0.0;        ///< at the largest N
  double dispersion = 0.0;  ///< max - min at the largest N
  bool uniform = false;
  std::size_t divergent_count = 0;
};

/// tau_avg on theta0_i = i pi / n_grid for every N of the ladder, one orbit per
/// seed. A point is divergent when its ladder moves non-monotonically by more
/// than 1e-2 mean, or its final value sits further than that from the median.
template <AngleMapModel Model>
ErgodicReport avg_sweep(const Model& model, std::size_t n_grid, std::vector<std::size_t> ladder) {
  if (n_grid < 16) throw Error(ErrorKind::Config, "avg sweep needs at least 16 seeds");
  if (ladder.empty()) throw Error(ErrorKind::Config, "empty N ladder");
  std::sort(ladder.begin(), ladder.end());
  if (ladder.front() == 0) throw Error(ErrorKind::Config, "N ladder entries must be positive");
  const NumericPolicy& pol = model.policy();
  ErgodicReport out;
  out.ladder = ladder;
  out.points.resize(n_grid);
  parallel_for(n_grid, [&](std::size_t i) {
    ErgodicPoint& pt = out.points[i];
    pt.theta0 = kPi * static_cast<double>(i) / static_cast<double>(n_grid);
    double theta = pt.theta0, sum = 0.0;
    std::size_t count = 0;
    try {
      for (std::size_t target : ladder) {
        for (; count < target; ++count) {
          const MapStep s = model.step(theta);
          sum += s.tau;
          theta = s.next;
        }
        pt.tau_avg.push_back(sum / static_cast<double>(target));
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::HorizonExceeded) throw;
      pt.error = e.what();
    }
  });

  std::vector<double> last;
  for (const auto& pt : out.points)
    if (pt.tau_avg.size() == ladder.size()) last.push_back(pt.tau_avg.back());
  if (!last.empty()) {
    out.mean = std::accumulate(last.begin(), last.end(), 0.0) / static_cast<double>(last.size());
    const auto [lo, hi] = std::minmax_element(last.begin(), last.end());
    out.dispersion = *hi - *lo;
  }
  out.uniform = last.size() == n_grid && out.dispersion <= pol.uniformity_rel_tol * out.mean;
  const double limit = pol.divergence_rel_tol * out.mean;
  double median = out.mean;
  if (!last.empty()) {
    std::nth_element(last.begin(), last.begin() + static_cast<std::ptrdiff_t>(last.size() / 2), last.end());
    median = last[last.size() / 2];
  }
  for (auto& pt : out.points) {
    const auto& v = pt.tau_avg;
    if (v.size() != ladder.size()) {
      pt.divergent = true;
    } else if (v.size() >= 2) {
      if (std::abs(v.back() - median) > limit) pt.divergent = true;
      for (std::size_t j = 1; j + 1 < v.size(); ++j) {
        const double a = v[j] - v[j - 1], b = v[j + 1] - v[j];
        if (a * b < 0.0 && std::min(std::abs(a), std::abs(b)) > limit) pt.divergent = true;
      }
    }
    if (pt.divergent) ++out.divergent_count;
  }
  return out;
}

struct PeriodicOrbit {
  std::vector<double> thetas;  ///< orbit points mod pi, in iteration order
  StabilityResult stability;   ///< of phi^q at the first point
  double average_tau = 0.0;
};

/// Fixed points of phi^q grouped into orbits of phi (angles mod pi).
template <AngleMapModel Model>
std::vector<PeriodicOrbit> periodic_orbits(const Model& model, int q, std::size_t n_grid = 1024) {
  if (q < 1) throw Error(ErrorKind::Config, "period must be at least 1");
  const FixedPointReport report = fixed_points(model, q, n_grid, false);
  std::vector<PeriodicOrbit> out;
  if (report.all) return out;
  std::vector<bool> used(report.points.size(), false);
  auto match = [&](double theta) -> int {
    for (std::size_t i = 0; i < report.points.size(); ++i)
      if (std::abs(std::remainder(report.points[i].theta - theta, kPi)) < 1e-6) return static_cast<int>(i);
    return -1;
  };
  for (std::size_t i = 0; i < report.points.size(); ++i) {
    if (used[i]) continue;
    PeriodicOrbit orbit;
    double theta = report.points[i].theta;
    double tau_sum = 0.0;
    for (int j = 0; j < q; ++j) {
      const double reduced = wrap_positive(theta, kPi);
      const int idx = match(reduced);
      if (idx >= 0) used[static_cast<std::size_t>(idx)] = true;
      if (j > 0 && std::abs(std::remainder(reduced - orbit.thetas.front(), kPi)) < 1e-6) break;
      orbit.thetas.push_back(reduced);
      const MapStep s = model.step(reduced);
      tau_sum += s.tau;
      theta = s.next;
    }
    orbit.average_tau = tau_sum / static_cast<double>(orbit.thetas.size());
    orbit.stability = classify_stability(model, orbit.thetas.front(), q);
    out.push_back(std::move(orbit));
  }
  return out;
}

}  // namespace ietlab
