#pragma once

// The inter-event-time function tau_s(theta): first positive root of
// f_s(theta, tau) = x_theta^T M(tau) x_theta, its profile over [0, pi), and the
// root-count structure of the level set f_s = 0.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "ietlab/error.hpp"
#include "ietlab/parallel.hpp"
#include "ietlab/planar.hpp"
#include "ietlab/trigger.hpp"

namespace ietlab {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// f_s(theta, tau) = mean + amplitude * sin(2 theta + phase) at a fixed tau.
struct SinusoidalForm {
  double mean = 0.0;
  double amplitude = 0.0;
  double phase = 0.0;

  static SinusoidalForm from(const Mat2& m) {
    const double half_diff = 0.5 * (m.a11 - m.a22);
    const double off = 0.5 * (m.a12 + m.a21);
    // a sin(2t + b) = a sin(b) cos(2t) + a cos(b) sin(2t); atan2 keeps the
    // quadrant that arctan((m11 - m22) / (2 m12)) loses when m12 < 0.
    return {0.5 * (m.a11 + m.a22), std::hypot(half_diff, off), std::atan2(half_diff, off)};
  }

  double operator()(double theta) const { return mean + amplitude * std::sin(2.0 * theta + phase); }
};

inline double f_s(const Mat2& m, double theta) { return quad_form(m, unit_vector(theta)); }

inline double f_s(const SystemSpec& sys, double theta, double tau) { return f_s(m_matrix(sys, tau), theta); }

/// Solutions theta in [0, pi) of f_s(theta, tau) = 0 at a fixed tau.
struct RootSet {
  enum class Kind { None, Single, Two, All } kind = Kind::None;
  std::vector<double> roots;
};

inline RootSet roots_for_matrix(const Mat2& m, const NumericPolicy& policy = {}) {
  RootSet out;
  const double scale = m.max_abs();
  const double det = m.det();
  if (scale <= policy.zero_matrix_tol) {
    out.kind = RootSet::Kind::All;
    return out;
  }
  if (std::abs(det) <= policy.det_zero_tol * scale * scale) {
    // Rank one: the root is the null direction.
    const Vec2 v = detail::null_vector(m);
    out.kind = RootSet::Kind::Single;
    out.roots = {wrap_positive(std::atan2(v.x2, v.x1), kPi)};
    return out;
  }
  if (det > 0.0) return out;
  const SinusoidalForm form = SinusoidalForm::from(m);
  const double s = std::clamp(-form.mean / form.amplitude, -1.0, 1.0);
  const double base = std::asin(s);
  out.kind = RootSet::Kind::Two;
  out.roots = {wrap_positive(0.5 * (base - form.phase), kPi), wrap_positive(0.5 * (kPi - base - form.phase), kPi)};
  std::sort(out.roots.begin(), out.roots.end());
  return out;
}

inline RootSet roots_for_fixed_tau(const SystemSpec& sys, double tau) {
  return roots_for_matrix(m_matrix(sys, tau), sys.policy);
}

/// One evaluation of the inter-event-time function.
struct IetEvaluation {
  double tau = 0.0;
  bool tangent = false;  ///< first root is a tangential touch of f_s = 0
};

/// One step of the angle map.
struct MapStep {
  double tau = 0.0;   ///< tau_s(theta)
  double next = 0.0;  ///< phi(theta) in [0, 2pi)
};

/// Any planar angle map with an inter-event time attached: the event-triggered
/// system below, or a synthetic map for controlled experiments.
template <typename M>
concept AngleMapModel = requires(const M& model, double theta) {
  { model.step(theta) } -> std::convertible_to<MapStep>;
  { model.policy() } -> std::convertible_to<const NumericPolicy&>;
};

/// The scale-invariant event map of a SystemSpec.
///
/// Construction checks the definiteness assumption, fixes tau_m, the scan step
/// h = tau_m / 200 and the horizon T_max, and tabulates M(tau) on the scan grid.
/// Afterwards the object is immutable and safe to share between threads.
class EventMap {
 public:
  explicit EventMap(SystemSpec sys) : sys_(std::move(sys)), a1_(check_assumption_a1(sys_)) {
    if (!a1_.holds) {
      throw Error(ErrorKind::NotApplicable, "definiteness assumption on M(tau) fails: " + a1_.diagnostics);
    }
    const NumericPolicy& pol = sys_.policy;
    step_ = a1_.tau_m / pol.scan_steps_per_tau_m;
    start_ = a1_.tau_m * (1.0 - pol.scan_start_factor);
    horizon_ = pol.horizon_override > 0.0 ? pol.horizon_override : pol.horizon_factor * a1_.tau_m;
    const auto count = static_cast<std::size_t>(std::ceil((horizon_ - start_) / step_)) + 1;
    grid_.reserve(count);
    // An unstable A overflows G(tau) long before T_max; the table (and the
    // horizon) ends at the last representable entry.
    for (std::size_t j = 0; j < count; ++j) {
      try {
        grid_.push_back(m_matrix(sys_, grid_tau(j)));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Overflow || j < 2) throw;
        horizon_ = grid_tau(j - 1);
        break;
      }
    }
  }

  const SystemSpec& system() const { return sys_; }
  const NumericPolicy& policy() const { return sys_.policy; }
  const AssumptionA1& assumption() const { return a1_; }
  double tau_m() const { return a1_.tau_m; }
  double horizon() const { return horizon_; }
  double scan_step() const { return step_; }

  /// tau_s(theta) with the tangency flag. Throws HorizonExceeded.
  IetEvaluation evaluate(double theta) const {
    const double reduced = wrap_positive(theta, kPi);
    const Vec2 x{std::cos(reduced), std::sin(reduced)};
    return evaluate_direction(x);
  }

  double tau_s(double theta) const { return evaluate(theta).tau; }

  /// tau_e(x) on a raw nonzero state; depends only on the line through x.
  double tau_e(Vec2 x) const {
    if (norm(x) <= sys_.policy.zero_vector_tol) throw Error(ErrorKind::ZeroVector, "tau_e of the zero state");
    if (x.x2 < 0.0 || (x.x2 == 0.0 && x.x1 < 0.0)) x = -x;
    const double theta = std::atan2(x.x2, x.x1);
    return tau_s(theta);
  }

  MapStep step(double theta) const {
    const double tau = tau_s(theta);
    const Mat2 g = transition_g(sys_, tau);
    if (std::abs(g.det()) < sys_.policy.degenerate_g_tol) {
      throw Error(ErrorKind::DegenerateG, "G(tau_s(theta)) is numerically singular");
    }
    return {tau, arg2(g * unit_vector(theta), sys_.policy)};
  }

 private:
  double grid_tau(std::size_t j) const { return start_ + static_cast<double>(j) * step_; }

  double f_at(const Vec2& x, double tau) const { return quad_form(m_matrix(sys_, tau), x); }

  // Bisection on [lo, hi] with f(lo) < 0 <= f(hi).
  double bisect(const Vec2& x, double lo, double hi) const {
    while (hi - lo > sys_.policy.root_tol) {
      const double mid = 0.5 * (lo + hi);
      if (f_at(x, mid) >= 0.0) hi = mid; else lo = mid;
    }
    return 0.5 * (lo + hi);
  }

  // Golden-section maximisation of f(x, .) on [lo, hi].
  std::pair<double, double> maximize(const Vec2& x, double lo, double hi) const {
    constexpr double ratio = 0.6180339887498949;
    double c = hi - ratio * (hi - lo);
    double d = lo + ratio * (hi - lo);
    double fc = f_at(x, c);
    double fd = f_at(x, d);
    while (hi - lo > sys_.policy.root_tol) {
      if (fc > fd) {
        hi = d; d = c; fd = fc;
        c = hi - ratio * (hi - lo);
        fc = f_at(x, c);
      } else {
        lo = c; c = d; fc = fd;
        d = lo + ratio * (hi - lo);
        fd = f_at(x, d);
      }
    }
    const double t = 0.5 * (lo + hi);
    return {t, f_at(x, t)};
  }

  IetEvaluation evaluate_direction(const Vec2& x) const {
    const NumericPolicy& pol = sys_.policy;
    double f_prev2 = std::numeric_limits<double>::quiet_NaN();
    double f_prev = quad_form(grid_[0], x);
    if (f_prev >= 0.0) return {start_, false};
    for (std::size_t j = 1; j < grid_.size(); ++j) {
      const double f = quad_form(grid_[j], x);
      if (f >= 0.0) return {bisect(x, grid_tau(j - 1), grid_tau(j)), false};
      // Interior local maximum below zero: check for a tangential touch.
      if (j >= 2 && f_prev > f_prev2 && f_prev > f) {
        const double scale = std::max(1.0, grid_[j - 1].max_abs());
        const double curvature = f_prev2 - 2.0 * f_prev + f;
        const double vertex = f_prev + (f - f_prev2) * (f - f_prev2) / (8.0 * std::abs(curvature));
        if (vertex >= -1e3 * pol.tangent_tol * scale) {
          const auto [t_max, f_max] = maximize(x, grid_tau(j - 2), grid_tau(j));
          if (f_max >= 0.0) return {bisect(x, grid_tau(j - 2), t_max), false};
          if (f_max >= -pol.tangent_tol * scale) return {t_max, true};
        }
      }
      f_prev2 = f_prev;
      f_prev = f;
    }
    throw Error(ErrorKind::HorizonExceeded,
                "no event before the search horizon T_max = " + std::to_string(horizon_));
  }

  SystemSpec sys_;
  AssumptionA1 a1_;
  double step_ = 0.0;
  double start_ = 0.0;
  double horizon_ = 0.0;
  std::vector<Mat2> grid_;
};

inline double phi(const EventMap& map, double theta) { return map.step(theta).next; }

enum class ProfileFlag { Ok, Jump, Tangent, Horizon };

inline const char* to_string(ProfileFlag flag) {
  switch (flag) {
    case ProfileFlag::Ok: return "ok";
    case ProfileFlag::Jump: return "jump";
    case ProfileFlag::Tangent: return "tangent";
    case ProfileFlag::Horizon: return "horizon";
  }
  return "ok";
}

struct Discontinuity {
  std::size_t index = 0;  ///< jump lies between grid points index and index + 1 (cyclic)
  double theta = 0.0;     ///< refined location
  double jump = 0.0;      ///< |tau_s| jump across the refined bracket
};

/// tau_s sampled on the uniform grid theta_i = i pi / n over [0, pi).
struct IetProfile {
  std::vector<double> theta;
  std::vector<double> tau;  ///< +inf where the horizon was exceeded
  std::vector<ProfileFlag> flags;
  std::vector<Discontinuity> discontinuities;
  double tau_min = 0.0;
  double tau_max = 0.0;
  double theta_min = 0.0;
  double theta_max = 0.0;
  std::size_t horizon_failures = 0;
  bool continuous = true;
};

namespace detail {

// Golden-section search for an extremum of tau_s on [lo, hi].
inline std::pair<double, double> refine_extremum(const EventMap& map, double lo, double hi, bool maximum) {
  constexpr double ratio = 0.6180339887498949;
  auto value = [&](double t) { return maximum ? map.tau_s(t) : -map.tau_s(t); };
  double c = hi - ratio * (hi - lo);
  double d = lo + ratio * (hi - lo);
  double fc = value(c);
  double fd = value(d);
  while (hi - lo > 1e-9) {
    if (fc > fd) {
      hi = d; d = c; fd = fc;
      c = hi - ratio * (hi - lo);
      fc = value(c);
    } else {
      lo = c; c = d; fc = fd;
      d = lo + ratio * (hi - lo);
      fd = value(d);
    }
  }
  const double t = 0.5 * (lo + hi);
  return {t, map.tau_s(t)};
}

inline double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

}  // namespace detail

inline IetProfile profile_scan(const EventMap& map, std::size_t n_grid) {
  if (n_grid < 16) throw Error(ErrorKind::Config, "profile grid needs at least 16 points");
  const NumericPolicy& pol = map.policy();
  IetProfile p;
  p.theta.resize(n_grid);
  p.tau.resize(n_grid);
  p.flags.assign(n_grid, ProfileFlag::Ok);
  parallel_for(n_grid, [&](std::size_t i) {
    const double theta = kPi * static_cast<double>(i) / static_cast<double>(n_grid);
    p.theta[i] = theta;
    try {
      const IetEvaluation e = map.evaluate(theta);
      p.tau[i] = e.tau;
      if (e.tangent) p.flags[i] = ProfileFlag::Tangent;
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::HorizonExceeded) throw;
      p.tau[i] = std::numeric_limits<double>::infinity();
      p.flags[i] = ProfileFlag::Horizon;
    }
  });
  p.horizon_failures = static_cast<std::size_t>(std::count(p.flags.begin(), p.flags.end(), ProfileFlag::Horizon));

  // Jumps between cyclic neighbours; a candidate must survive repeated 4x refinement.
  std::vector<double> jumps(n_grid);
  for (std::size_t i = 0; i < n_grid; ++i) jumps[i] = std::abs(p.tau[(i + 1) % n_grid] - p.tau[i]);
  std::vector<double> finite_jumps;
  for (double j : jumps)
    if (std::isfinite(j)) finite_jumps.push_back(j);
  const double threshold = pol.jump_factor * detail::median(finite_jumps);
  const double step = kPi / static_cast<double>(n_grid);
  for (std::size_t i = 0; i < n_grid; ++i) {
    if (!std::isfinite(jumps[i]) || !(jumps[i] > threshold)) continue;
    double lo = p.theta[i];
    double width = step;
    double tau_lo = p.tau[i];
    double jump = jumps[i];
    bool persists = true;
    for (int level = 0; level < pol.jump_refine_levels && persists; ++level) {
      const double sub = width / 4.0;
      double best = -1.0;
      double best_lo = lo;
      double best_tau = tau_lo;
      double prev = tau_lo;
      for (int s = 1; s <= 4; ++s) {
        const double t = map.tau_s(lo + sub * s);
        if (std::abs(t - prev) > best) {
          best = std::abs(t - prev);
          best_lo = lo + sub * (s - 1);
          best_tau = prev;
        }
        prev = t;
      }
      if (best < 0.5 * jump || best <= threshold) {
        persists = false;
      } else {
        lo = best_lo;
        tau_lo = best_tau;
        width = sub;
        jump = best;
      }
    }
    if (!persists) continue;
    p.discontinuities.push_back({i, wrap_positive(lo + 0.5 * width, kPi), jump});
    p.flags[i] = ProfileFlag::Jump;
  }
  p.continuous = p.discontinuities.empty() && p.horizon_failures == 0;

  // tau_min is attained where M(tau_m) is singular; tau_max is refined around the grid maximum.
  std::size_t arg_min = 0, arg_max = 0;
  for (std::size_t i = 0; i < n_grid; ++i) {
    if (p.tau[i] < p.tau[arg_min]) arg_min = i;
    if (p.tau[i] > p.tau[arg_max] || !std::isfinite(p.tau[arg_max])) arg_max = i;
  }
  p.theta_min = p.theta[arg_min];
  p.tau_min = p.tau[arg_min];
  const Mat2 m_at_tau_m = m_matrix(map.system(), map.tau_m());
  const auto eig = sym_eigenvalues(m_at_tau_m);
  const Vec2 dir = detail::null_vector(m_at_tau_m - Mat2::scalar(eig[1]));
  const double theta_null = wrap_positive(std::atan2(dir.x2, dir.x1), kPi);
  try {
    const double t = map.tau_s(theta_null);
    if (t <= p.tau_min) {
      p.tau_min = t;
      p.theta_min = theta_null;
    }
  } catch (const Error&) {
  }
  p.theta_max = p.theta[arg_max];
  p.tau_max = p.tau[arg_max];
  if (std::isfinite(p.tau_max)) {
    try {
      const auto [t, v] = detail::refine_extremum(map, p.theta_max - step, p.theta_max + step, true);
      if (v > p.tau_max) {
        p.tau_max = v;
        p.theta_max = wrap_positive(t, kPi);
      }
    } catch (const Error&) {
    }
  }
  return p;
}

struct PeriodicTriggerReport {
  bool is_periodic = false;
  double tau_1 = 0.0;
  double m_norm_at_tau_1 = 0.0;  ///< |M(tau_1)|_max
  double scale = 1.0;
};

/// tau_s is constant iff det M > 0 on (0, tau_1), tau_1 is the first zero of
/// det M, and M(tau_1) is the zero matrix.
inline PeriodicTriggerReport periodic_trigger_check(const SystemSpec& sys, const AssumptionA1& a1) {
  PeriodicTriggerReport out;
  if (!a1.zero_found) return out;
  out.tau_1 = a1.tau_m;
  out.m_norm_at_tau_1 = m_matrix(sys, a1.tau_m).max_abs();
  out.scale = std::max(1.0, m_matrix(sys, 0.5 * a1.tau_m).max_abs());
  out.is_periodic = a1.holds && out.m_norm_at_tau_1 <= sys.policy.zero_matrix_tol * out.scale;
  return out;
}

inline PeriodicTriggerReport periodic_trigger_check(const SystemSpec& sys) {
  return periodic_trigger_check(sys, check_assumption_a1(sys));
}

/// A connected piece of the level set f_s = 0: det M < 0 on (g, h).
struct LevelSetBranch {
  double g = 0.0;
  double h = 0.0;
  bool closed_left = true;   ///< det M(g) = 0 (false: window edge)
  bool closed_right = true;  ///< det M(h) = 0 (false: window edge)
  std::vector<double> tau;
  std::vector<double> theta_lower;  ///< smaller root of f_s(., tau) = 0 in [0, pi)
  std::vector<double> theta_upper;
};

inline std::vector<LevelSetBranch> level_set_branches(const SystemSpec& sys, double lo, double hi,
                                                      std::size_t scan_points = 4000,
                                                      std::size_t trace_points = 32) {
  std::vector<LevelSetBranch> out;
  if (!(hi > lo) || scan_points < 2) return out;
  auto det = [&](double t) { return m_matrix(sys, t).det(); };
  auto refine = [&](double a, double b) {
    // det(a) and det(b) differ in sign (negative side unknown); bisect on sign.
    const bool neg_a = det(a) < 0.0;
    while (b - a > sys.policy.root_tol) {
      const double mid = 0.5 * (a + b);
      if ((det(mid) < 0.0) == neg_a) a = mid; else b = mid;
    }
    return 0.5 * (a + b);
  };
  const double dt = (hi - lo) / static_cast<double>(scan_points - 1);
  std::vector<bool> neg(scan_points);
  for (std::size_t i = 0; i < scan_points; ++i) neg[i] = det(lo + dt * static_cast<double>(i)) < 0.0;
  // The window edge counts as a det zero when det is negligible there.
  auto edge_is_zero = [&](double t) {
    const Mat2 m = m_matrix(sys, t);
    const double s = m.max_abs();
    return std::abs(m.det()) <= 1e-6 * std::max(s * s, 1e-300);
  };
  std::size_t i = 0;
  while (i < scan_points) {
    if (!neg[i]) { ++i; continue; }
    std::size_t j = i;
    while (j + 1 < scan_points && neg[j + 1]) ++j;
    LevelSetBranch b;
    if (i == 0) {
      b.g = lo;
      b.closed_left = edge_is_zero(lo);
    } else {
      b.g = refine(lo + dt * static_cast<double>(i - 1), lo + dt * static_cast<double>(i));
    }
    if (j + 1 == scan_points) {
      b.h = hi;
      b.closed_right = edge_is_zero(hi);
    } else {
      b.h = refine(lo + dt * static_cast<double>(j), lo + dt * static_cast<double>(j + 1));
    }
    for (std::size_t k = 0; k < trace_points; ++k) {
      const double t = b.g + (b.h - b.g) * (static_cast<double>(k) + 0.5) / static_cast<double>(trace_points);
      const RootSet roots = roots_for_fixed_tau(sys, t);
      if (roots.kind != RootSet::Kind::Two) continue;
      b.tau.push_back(t);
      b.theta_lower.push_back(roots.roots[0]);
      b.theta_upper.push_back(roots.roots[1]);
    }
    out.push_back(std::move(b));
    i = j + 1;
  }
  return out;
}

struct ExtremaReport {
  bool all_global = true;
  std::vector<double> theta;  ///< refined local extremizers
  std::vector<double> value;
  std::vector<bool> is_max;
};

/// Every interior local extremum of a continuous tau_s is a global one.
/// Throws NotApplicable on a discontinuous profile.
inline ExtremaReport extrema_globality_check(const EventMap& map, const IetProfile& profile) {
  if (!profile.continuous) throw Error(ErrorKind::NotApplicable, "profile is not continuous");
  ExtremaReport out;
  const std::size_t n = profile.tau.size();
  const double step = kPi / static_cast<double>(n);
  const double tol = map.policy().extremum_rel_tol * (profile.tau_max - profile.tau_min);
  for (std::size_t i = 0; i < n; ++i) {
    const double prev = profile.tau[(i + n - 1) % n];
    const double here = profile.tau[i];
    const double next = profile.tau[(i + 1) % n];
    const bool is_max = here > prev && here >= next;
    const bool is_min = here < prev && here <= next;
    if (!is_max && !is_min) continue;
    const auto [t, v] = detail::refine_extremum(map, profile.theta[i] - step, profile.theta[i] + step, is_max);
    out.theta.push_back(wrap_positive(t, kPi));
    out.value.push_back(v);
    out.is_max.push_back(is_max);
    const double target = is_max ? profile.tau_max : profile.tau_min;
    if (std::abs(v - target) > tol) out.all_global = false;
  }
  return out;
}

}  // namespace ietlab
