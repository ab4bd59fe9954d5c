#pragma once

// The angle map phi(theta) = arg(G(tau_s(theta)) x_theta): lifts, fixed points of
// its iterates, their stability, and the relative-threshold necessary conditions.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ietlab/error.hpp"
#include "ietlab/iet.hpp"
#include "ietlab/parallel.hpp"
#include "ietlab/planar.hpp"
#include "ietlab/random.hpp"
#include "ietlab/trigger.hpp"

namespace ietlab {

/// A hand-written circle map with an attached inter-event time.
struct SyntheticMap {
  std::function<double(double)> phi_fn;  ///< any real result; reduced mod 2pi
  std::function<double(double)> tau_fn;
  NumericPolicy numeric;

  MapStep step(double theta) const { return {tau_fn(theta), wrap_positive(phi_fn(theta), kTwoPi)}; }
  const NumericPolicy& policy() const { return numeric; }
};

/// Rigid rotation phi(theta) = theta + c with the given inter-event time.
inline SyntheticMap rigid_rotation(double c, std::function<double(double)> tau_fn = [](double) { return 1.0; }) {
  return {[c](double t) { return t + c; }, std::move(tau_fn), {}};
}

/// Lifted one-step displacement phi(theta) - theta, represented in
/// (window_low, window_low + 2pi].
inline double lifted_displacement(double next, double theta, double window_low) {
  double r = wrap_positive(next - theta - window_low, kTwoPi);
  if (r == 0.0) r = kTwoPi;
  return window_low + r;
}

template <AngleMapModel Model>
double displacement(const Model& model, double theta, int k, double window_low = -kPi) {
  double lifted = theta;
  for (int i = 0; i < k; ++i) {
    const double base = wrap_positive(lifted, kTwoPi);
    lifted += lifted_displacement(model.step(base).next, base, window_low);
  }
  return lifted - theta;
}

struct LiftTrace {
  std::vector<double> values;  ///< Phi^0(theta0) .. Phi^n(theta0)
  std::vector<double> taus;    ///< tau_s along the orbit, one per step
  bool monotone = true;        ///< lift increasing on a grid of [0, 2pi)
};

struct LiftFunction {
  std::vector<double> theta;
  std::vector<double> value;  ///< Phi(theta)
  bool monotone = true;
};

/// Phi(theta) = theta + (phi(theta) - theta) on a grid of [0, 2pi); monotone
/// increasing means orientation preserving.
template <AngleMapModel Model>
LiftFunction lift_function(const Model& model, std::size_t n_grid = 512, double window_low = -kPi) {
  LiftFunction out;
  out.theta.resize(n_grid);
  out.value.resize(n_grid);
  parallel_for(n_grid, [&](std::size_t i) {
    const double theta = kTwoPi * static_cast<double>(i) / static_cast<double>(n_grid);
    out.theta[i] = theta;
    out.value[i] = theta + lifted_displacement(model.step(theta).next, theta, window_low);
  });
  for (std::size_t i = 0; i + 1 < n_grid; ++i)
    if (!(out.value[i + 1] > out.value[i])) out.monotone = false;
  if (n_grid > 0 && !(out.value.back() < out.value.front() + kTwoPi)) out.monotone = false;
  return out;
}

template <AngleMapModel Model>
LiftTrace lift(const Model& model, double theta0, std::size_t n, double window_low = -kPi,
               std::size_t monotone_grid = 256) {
  LiftTrace out;
  out.values.reserve(n + 1);
  out.taus.reserve(n);
  double lifted = theta0;
  out.values.push_back(lifted);
  for (std::size_t i = 0; i < n; ++i) {
    const double base = wrap_positive(lifted, kTwoPi);
    const MapStep s = model.step(base);
    lifted += lifted_displacement(s.next, base, window_low);
    out.values.push_back(lifted);
    out.taus.push_back(s.tau);
  }
  if (monotone_grid > 1) out.monotone = lift_function(model, monotone_grid, window_low).monotone;
  return out;
}

enum class Stability { Stable, AsymptoticallyStable, Unstable, Undetermined };

inline const char* to_string(Stability s) {
  switch (s) {
    case Stability::Stable: return "Stable";
    case Stability::AsymptoticallyStable: return "AsymptoticallyStable";
    case Stability::Unstable: return "Unstable";
    case Stability::Undetermined: return "Undetermined";
  }
  return "Undetermined";
}

struct StabilityResult {
  Stability label = Stability::Undetermined;
  double certified_delta = 0.0;  ///< neighbourhood radius where the conditions were verified
  double basin_lo = 0.0;         ///< numerical estimate of the region of convergence
  double basin_hi = 0.0;
};

struct FixedPoint {
  double theta = 0.0;       ///< in [0, pi)
  int winding = 0;          ///< phi^k(theta) = theta + winding * pi on the lift
  double residual = 0.0;    ///< |phi^k(theta) - theta| mod pi
  StabilityResult stability;
};

/// Fixed points of phi^k, with angles identified mod pi.
struct FixedPointReport {
  int k = 1;
  bool all = false;  ///< every theta is fixed
  std::vector<FixedPoint> points;
};

namespace detail {

inline double mod_pi_distance(double value) {
  const double r = std::remainder(value, kPi);
  return std::abs(r);
}

}  // namespace detail

/// Classifies a fixed point of phi^k from sampled neighbourhoods.
///
/// AsymptoticallyStable: on some [theta* - delta, theta* + delta] with
/// delta = delta0 2^-j, phi^k(theta) - theta strictly decreases and
/// phi^{2k}(theta) > theta left of theta*. Stable: the same with non-strict
/// inequalities. Unstable: no decreasing neighbourhood at any scale.
template <AngleMapModel Model>
StabilityResult classify_stability(const Model& model, double theta_star, int k = 1,
                                   std::size_t basin_steps = 256) {
  const NumericPolicy& pol = model.policy();
  StabilityResult out;
  const int winding = static_cast<int>(std::lround(displacement(model, theta_star, k) / kPi));
  auto g = [&](double t) { return displacement(model, t, k) - winding * kPi; };
  auto g2 = [&](double t) { return displacement(model, t, 2 * k) - 2 * winding * kPi; };

  const int samples = std::max(5, pol.stability_samples | 1);
  const int mid = samples / 2;
  bool any_decreasing = false;
  for (int level = 0; level < pol.stability_levels; ++level) {
    const double delta = pol.stability_delta0 * std::ldexp(1.0, -level);
    std::vector<double> theta(samples), values(samples);
    for (int s = 0; s < samples; ++s) {
      theta[s] = theta_star - delta + 2.0 * delta * s / (samples - 1);
      values[s] = g(theta[s]);
    }
    double spread = 0.0;
    for (double v : values) spread = std::max(spread, std::abs(v));
    if (spread <= pol.fixed_point_tol) continue;  // not isolated at this scale
    bool strict = true, weak = true;
    for (int s = 0; s + 1 < samples; ++s) {
      if (!(values[s + 1] < values[s])) strict = false;
      if (!(values[s + 1] <= values[s])) weak = false;
    }
    if (!weak) continue;
    any_decreasing = true;
    bool second_strict = true, second_weak = true;
    for (int s = 0; s < mid; ++s) {
      const double v = g2(theta[s]);
      if (!(v > 0.0)) second_strict = false;
      if (!(v >= 0.0)) second_weak = false;
    }
    if (strict && second_strict) {
      out.label = Stability::AsymptoticallyStable;
    } else if (second_weak) {
      out.label = Stability::Stable;
    } else {
      continue;
    }
    out.certified_delta = delta;
    break;
  }
  if (out.label == Stability::Undetermined && !any_decreasing) {
    // Only an isolated point with a non-decreasing displacement is unstable.
    const double probe = pol.stability_delta0 * std::ldexp(1.0, -(pol.stability_levels - 1));
    if (std::abs(g(theta_star - probe)) > pol.fixed_point_tol || std::abs(g(theta_star + probe)) > pol.fixed_point_tol) {
      out.label = Stability::Unstable;
    }
  }
  out.basin_lo = out.basin_hi = theta_star;
  if (out.label != Stability::AsymptoticallyStable && out.label != Stability::Stable) return out;

  // Grow [lo, hi] while the sign pattern holds, it stays positively invariant
  // and phi^{2k} > theta on the left part.
  double lo = theta_star - out.certified_delta;
  double hi = theta_star + out.certified_delta;
  const double grid = kPi / static_cast<double>(basin_steps);
  bool grow_lo = true, grow_hi = true;
  while ((grow_lo || grow_hi) && hi - lo + grid < kPi) {
    if (grow_lo) {
      const double t = lo - grid;
      const double v = g(t);
      if (v > 0.0 && t + v <= hi && g2(t) > 0.0) lo = t; else grow_lo = false;
    }
    if (grow_hi) {
      const double t = hi + grid;
      const double v = g(t);
      if (v < 0.0 && t + v >= lo) hi = t; else grow_hi = false;
    }
  }
  out.basin_lo = lo;
  out.basin_hi = hi;
  return out;
}

/// Sign-change scan of phi^k(theta) - theta - j pi over [0, pi], refined by bisection.
template <AngleMapModel Model>
FixedPointReport fixed_points(const Model& model, int k, std::size_t n_grid, bool classify = true) {
  if (n_grid < 64) throw Error(ErrorKind::Config, "fixed-point grid needs at least 64 points");
  const NumericPolicy& pol = model.policy();
  FixedPointReport out;
  out.k = k;
  std::vector<double> theta(n_grid + 1), disp(n_grid + 1);
  parallel_for(n_grid + 1, [&](std::size_t i) {
    theta[i] = kPi * static_cast<double>(i) / static_cast<double>(n_grid);
    disp[i] = displacement(model, theta[i], k);
  });
  bool all = true;
  for (double d : disp)
    if (detail::mod_pi_distance(d) > pol.fixed_point_tol) { all = false; break; }
  if (all) {
    out.all = true;
    return out;
  }

  std::vector<FixedPoint> found;
  auto accept = [&](double t, int j) {
    const double residual = detail::mod_pi_distance(displacement(model, t, k));
    if (residual > pol.fixed_point_tol) return;
    const double reduced = wrap_positive(t, kPi);
    for (const auto& f : found) {
      const double gap = std::abs(std::remainder(f.theta - reduced, kPi));
      if (gap < 1e-7) return;
    }
    found.push_back({reduced, j, residual, {}});
  };
  for (std::size_t i = 0; i < n_grid; ++i) {
    const double d0 = disp[i], d1 = disp[i + 1];
    const double lo_v = std::min(d0, d1), hi_v = std::max(d0, d1);
    for (int j = static_cast<int>(std::ceil(lo_v / kPi)); j * kPi <= hi_v; ++j) {
      const double target = j * kPi;
      if (d0 == target) { accept(theta[i], j); continue; }
      if (d1 == target) continue;  // picked up as the next interval's left end
      double a = theta[i], b = theta[i + 1];
      const bool neg_a = d0 < target;
      while (b - a > pol.root_tol) {
        const double m = 0.5 * (a + b);
        if ((displacement(model, m, k) < target) == neg_a) a = m; else b = m;
      }
      accept(0.5 * (a + b), j);
    }
  }
  std::sort(found.begin(), found.end(), [](const FixedPoint& x, const FixedPoint& y) { return x.theta < y.theta; });
  if (classify) {
    for (auto& f : found) f.stability = classify_stability(model, f.theta, k);
  }
  out.points = std::move(found);
  return out;
}

enum class SteadyState { ConvergesForSomeInitial, NeverConverges, Inconclusive };

inline const char* to_string(SteadyState v) {
  switch (v) {
    case SteadyState::ConvergesForSomeInitial: return "ConvergesForSomeInitial";
    case SteadyState::NeverConverges: return "NeverConverges";
    case SteadyState::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

struct SteadyStateVerdict {
  SteadyState verdict = SteadyState::Inconclusive;
  std::optional<double> limit_tau;  ///< tau_s at a stable fixed point
  std::optional<double> limit_theta;
  std::string evidence;
};

/// Decides from fixed points of phi^k (k = 1..4) and the range of tau_s.
inline SteadyStateVerdict steady_state_verdict(const std::vector<FixedPointReport>& reports, double tau_min,
                                               double tau_max, const std::function<double(double)>& tau_s) {
  SteadyStateVerdict out;
  bool none = true;
  std::string counts;
  for (const auto& r : reports) {
    if (r.all || !r.points.empty()) none = false;
    counts += " k=" + std::to_string(r.k) + ":" + (r.all ? std::string("all") : std::to_string(r.points.size()));
  }
  const bool constant = !(tau_max - tau_min > 1e-6 * tau_min);
  for (const auto& r : reports) {
    if (r.k != 1) continue;
    for (const auto& f : r.points) {
      if (f.stability.label == Stability::AsymptoticallyStable) {
        out.verdict = SteadyState::ConvergesForSomeInitial;
        out.limit_theta = f.theta;
        out.limit_tau = tau_s(f.theta);
        out.evidence = "asymptotically stable fixed point of phi;" + counts;
        return out;
      }
    }
  }
  if (none && !constant) {
    out.verdict = SteadyState::NeverConverges;
    out.evidence = "no fixed points of phi^k for k = 1..4 and tau_s is not constant;" + counts;
    return out;
  }
  out.verdict = SteadyState::Inconclusive;
  out.evidence = constant ? "tau_s is constant (periodic triggering);" + counts
                          : "fixed points exist but none certified asymptotically stable;" + counts;
  return out;
}

template <AngleMapModel Model>
std::vector<FixedPointReport> fixed_points_up_to(const Model& model, int k_max, std::size_t n_grid) {
  std::vector<FixedPointReport> out;
  for (int k = 1; k <= k_max; ++k) out.push_back(fixed_points(model, k, n_grid, k == 1));
  return out;
}

struct DetLZero {
  double tau = 0.0;
  double theta0 = 0.0;    ///< null direction of L(tau), in [0, pi)
  double tau_s_at = 0.0;  ///< tau_s(theta0)
  bool consistent = false;
};

/// Necessary conditions for fixed points under the relative-threshold rule.
struct NecessaryConditionReport {
  double sigma = 0.0;
  double alpha = 0.0;  ///< 1 / (1 + sigma)
  std::vector<DetLZero> det_l_zeros;
  bool r_applicable = false;
  std::string r_note;
  double r_norm = 0.0;
  double threshold = 1.0;
  bool threshold_strict = true;  ///< |R| > threshold rather than >=
  bool satisfied = false;
  bool real_ac_prop_applies = false;  ///< diagonalizable A, real negative A_c eigenvalues
};

namespace detail {

inline double require_sigma(const SystemSpec& sys) {
  const auto* rule = std::get_if<RelativeThreshold>(&sys.rule);
  if (!rule) throw Error(ErrorKind::RuleMismatch, "analysis applies to the relative-threshold rule only");
  return rule->sigma;
}

}  // namespace detail

inline double det_l(const SystemSpec& sys, double tau) {
  const double alpha = 1.0 / (1.0 + detail::require_sigma(sys));
  return (transition_g(sys, tau) - Mat2::scalar(alpha)).det();
}

/// Zeros of det(G(tau) - alpha I) on [tau_lo, tau_hi], each with its null
/// direction and the check tau_s(theta0) = tau.
inline std::vector<DetLZero> det_l_zeros(const EventMap& map, double tau_lo, double tau_hi,
                                         std::size_t scan_points = 4000) {
  const SystemSpec& sys = map.system();
  const double sigma = detail::require_sigma(sys);
  const double alpha = 1.0 / (1.0 + sigma);
  auto value = [&](double t) { return (transition_g(sys, t) - Mat2::scalar(alpha)).det(); };
  std::vector<DetLZero> out;
  const double dt = (tau_hi - tau_lo) / static_cast<double>(scan_points - 1);
  double prev_t = tau_lo;
  double prev_v = value(tau_lo);
  for (std::size_t i = 1; i < scan_points; ++i) {
    const double t = tau_lo + dt * static_cast<double>(i);
    const double v = value(t);
    if ((prev_v < 0.0) != (v < 0.0)) {
      double a = prev_t, b = t;
      const bool neg_a = prev_v < 0.0;
      while (b - a > sys.policy.root_tol) {
        const double m = 0.5 * (a + b);
        if ((value(m) < 0.0) == neg_a) a = m; else b = m;
      }
      DetLZero z;
      z.tau = 0.5 * (a + b);
      const Vec2 nv = detail::null_vector(transition_g(sys, z.tau) - Mat2::scalar(alpha));
      z.theta0 = wrap_positive(std::atan2(nv.x2, nv.x1), kPi);
      try {
        z.tau_s_at = map.tau_s(z.theta0);
        z.consistent = std::abs(z.tau_s_at - z.tau) <= 1e-6;
      } catch (const Error&) {
        z.consistent = false;
      }
      out.push_back(z);
    }
    prev_t = t;
    prev_v = v;
  }
  return out;
}

/// |R| with R = S^-1 [I - (1 - alpha) A A_c^-1] S against the applicable threshold.
/// Throws RuleMismatch for other rules and NotApplicable unless both eigenvalues
/// of A have positive real parts.
inline NecessaryConditionReport necessary_condition_r(const SystemSpec& sys) {
  NecessaryConditionReport out;
  out.sigma = detail::require_sigma(sys);
  out.alpha = 1.0 / (1.0 + out.sigma);
  const RealJordan& j = sys.jordan;
  const bool positive = j.kind == JordanKind::ComplexPair ? j.mu > 0.0 : j.lambda1 > 0.0;
  if (!positive) {
    throw Error(ErrorKind::NotApplicable, "both eigenvalues of A must have positive real parts");
  }
  out.r_applicable = true;
  const Mat2 inner = Mat2::identity() - (1.0 - out.alpha) * (sys.A * inverse(sys.A_c));
  const Mat2 r = inverse(j.S) * inner * j.S;
  out.r_norm = norm2(r);
  if (j.kind == JordanKind::RealRepeatedDefective && j.lambda1 < 0.5) {
    const double lambda = j.lambda1;
    out.threshold = defective_min_singular(lambda, std::sqrt(1.0 / (lambda * lambda) - 4.0));
    out.threshold_strict = false;
    out.r_note = "defective A with eigenvalue in (0, 0.5): |R| >= sigma_m(sqrt(1/lambda^2 - 4))";
  } else {
    out.threshold = 1.0;
    out.threshold_strict = true;
    out.r_note = j.diagonalizable() ? "diagonalizable A: |R| > 1" : "defective A with eigenvalue >= 0.5: |R| > 1";
  }
  out.satisfied = out.threshold_strict ? out.r_norm > out.threshold : out.r_norm >= out.threshold;
  const double ac_disc = sys.A_c.trace() * sys.A_c.trace() - 4.0 * sys.A_c.det();
  out.real_ac_prop_applies = j.diagonalizable() && ac_disc >= 0.0;
  return out;
}

struct ArcsinBoundReport {
  double max_displacement = 0.0;
  double bound = 0.0;  ///< asin(sigma)
  bool holds = false;
  std::size_t samples = 0;
};

/// max |phi(theta) - theta| over random theta against asin(sigma).
inline ArcsinBoundReport arcsin_bound_check(const EventMap& map, std::size_t n_samples, std::uint64_t seed = 42) {
  const double sigma = detail::require_sigma(map.system());
  Rng rng(seed);
  std::vector<double> theta(n_samples), disp(n_samples);
  for (auto& t : theta) t = rng.uniform(0.0, kTwoPi);
  parallel_for(n_samples, [&](std::size_t i) { disp[i] = std::abs(wrap_pi(map.step(theta[i]).next - theta[i])); });
  ArcsinBoundReport out;
  out.samples = n_samples;
  out.bound = std::asin(sigma);
  for (double d : disp) out.max_displacement = std::max(out.max_displacement, d);
  out.holds = out.max_displacement <= out.bound + 1e-9;
  return out;
}

}  // namespace ietlab
