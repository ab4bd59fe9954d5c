#pragma once

// Triggering rules as quadratic forms x^T M(tau) x and the definiteness
// assumption the inter-event-time analysis rests on.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ietlab/error.hpp"
#include "ietlab/planar.hpp"
#include "ietlab/policy.hpp"

namespace ietlab {

/// tr1: next event when dV/dt = 0 along the sampled-data trajectory.
struct LyapunovDerivative {
  Mat2 P;
};
/// tr2: next event when |x(t_k) - x(t)| = sigma |x(t)|.
struct RelativeThreshold {
  double sigma = 0.0;
};
/// tr3: next event when V(x(t)) = V(x(t_k)) e^{-r (t - t_k)}.
struct ExponentialDecay {
  Mat2 P;
  double r = 0.0;
};
/// Arbitrary symmetric M(tau), for synthetic experiments.
struct CustomMatrix {
  std::function<Mat2(double)> m;
  std::string name = "custom";
};

using TriggerRule = std::variant<LyapunovDerivative, RelativeThreshold, ExponentialDecay, CustomMatrix>;

inline std::string rule_name(const TriggerRule& rule) {
  struct Visitor {
    std::string operator()(const LyapunovDerivative&) const { return "lyapunov-derivative"; }
    std::string operator()(const RelativeThreshold&) const { return "relative-threshold"; }
    std::string operator()(const ExponentialDecay&) const { return "exp-decay"; }
    std::string operator()(const CustomMatrix& c) const { return c.name; }
  };
  return std::visit(Visitor{}, rule);
}

/// A validated closed-loop problem: plant A, closed loop A_c = A + B K, the
/// Lyapunov pair (P, Q) and the active triggering rule.
///
/// B is 2 x m and K is m x 2, both row-major; only B K enters the dynamics.
struct SystemSpec {
  Mat2 A;
  Mat2 A_c;
  Mat2 BK;
  int inputs = 2;
  std::vector<double> B;
  std::vector<double> K;
  Mat2 Q = Mat2::identity();
  Mat2 P;
  TriggerRule rule = RelativeThreshold{};
  NumericPolicy policy;

  // Derived once at construction.
  RealJordan jordan;
  bool a_invertible = false;
  Mat2 A_inv;
};

namespace detail {

inline Mat2 product_bk(const std::vector<double>& b, const std::vector<double>& k, int inputs) {
  Mat2 out;
  for (int j = 0; j < inputs; ++j) {
    out.a11 += b[0 * inputs + j] * k[j * 2 + 0];
    out.a12 += b[0 * inputs + j] * k[j * 2 + 1];
    out.a21 += b[1 * inputs + j] * k[j * 2 + 0];
    out.a22 += b[1 * inputs + j] * k[j * 2 + 1];
  }
  return out;
}

inline void finish_system(SystemSpec& sys) {
  sys.jordan = eigen2(sys.A, sys.policy);
  sys.a_invertible = a_is_invertible(sys.A, sys.policy);
  if (sys.a_invertible) sys.A_inv = inverse(sys.A);
}

}  // namespace detail

/// Which rule to build and its scalar parameters; P comes from the Lyapunov solve.
struct RuleChoice {
  enum class Kind { LyapunovDerivative, RelativeThreshold, ExponentialDecay } kind = Kind::RelativeThreshold;
  std::optional<double> sigma;  ///< tr2; omitted means default_sigma
  double r = 0.0;               ///< tr3
};

inline double default_sigma(const Mat2& p, const Mat2& bk, const Mat2& q);

/// Builds a SystemSpec from plant data. Throws NotHurwitz when A + B K is not
/// Hurwitz, and Config when dimensions or parameters are inconsistent.
inline SystemSpec make_system(const Mat2& a, std::vector<double> b, std::vector<double> k, int inputs,
                              const RuleChoice& choice, const Mat2& q = Mat2::identity(),
                              const NumericPolicy& policy = {}) {
  if (inputs < 1 || b.size() != static_cast<std::size_t>(2 * inputs) ||
      k.size() != static_cast<std::size_t>(2 * inputs)) {
    throw Error(ErrorKind::Config, "B must be 2 x m and K must be m x 2");
  }
  SystemSpec sys;
  sys.policy = policy;
  sys.A = a;
  sys.inputs = inputs;
  sys.BK = detail::product_bk(b, k, inputs);
  sys.B = std::move(b);
  sys.K = std::move(k);
  sys.A_c = sys.A + sys.BK;
  sys.Q = q;
  const auto q_eigs = sym_eigenvalues(q);
  if (std::abs(q.a12 - q.a21) > 1e-12 * std::max(1.0, q.max_abs()) || !(q_eigs[0] > 0.0)) {
    throw Error(ErrorKind::Config, "Q must be symmetric positive definite");
  }
  sys.P = lyapunov_solve(sys.A_c, q, policy);
  switch (choice.kind) {
    case RuleChoice::Kind::LyapunovDerivative:
      sys.rule = LyapunovDerivative{sys.P};
      break;
    case RuleChoice::Kind::RelativeThreshold: {
      const double sigma = choice.sigma ? *choice.sigma : default_sigma(sys.P, sys.BK, q);
      if (!(sigma > 0.0 && sigma < 1.0)) throw Error(ErrorKind::Config, "sigma must lie in (0, 1)");
      sys.rule = RelativeThreshold{sigma};
      break;
    }
    case RuleChoice::Kind::ExponentialDecay:
      if (!(choice.r > 0.0)) throw Error(ErrorKind::Config, "r must be positive");
      sys.rule = ExponentialDecay{sys.P, choice.r};
      break;
  }
  detail::finish_system(sys);
  return sys;
}

/// Convenience for B = I, K given as a 2x2 gain.
inline SystemSpec make_system(const Mat2& a, const Mat2& k, const RuleChoice& choice,
                              const Mat2& q = Mat2::identity(), const NumericPolicy& policy = {}) {
  return make_system(a, {1.0, 0.0, 0.0, 1.0}, {k.a11, k.a12, k.a21, k.a22}, 2, choice, q, policy);
}

/// A system with a hand-written M(tau). A and A_c still drive G(tau).
inline SystemSpec make_custom_system(const Mat2& a, const Mat2& a_c, CustomMatrix rule,
                                     const NumericPolicy& policy = {}) {
  SystemSpec sys;
  sys.policy = policy;
  sys.A = a;
  sys.A_c = a_c;
  sys.BK = a_c - a;
  sys.B = {1.0, 0.0, 0.0, 1.0};
  sys.K = {sys.BK.a11, sys.BK.a12, sys.BK.a21, sys.BK.a22};
  sys.rule = std::move(rule);
  detail::finish_system(sys);
  return sys;
}

inline Mat2 transition_g(const SystemSpec& sys, double tau) {
  if (tau == 0.0) return Mat2::identity();
  if (sys.a_invertible) return transition_g_shortcut(sys.A, sys.jordan, sys.A_inv, sys.A_c, tau, sys.policy);
  return transition_g_augmented(sys.A, sys.A_c, tau, sys.policy);
}

/// dG/dtau = A G(tau) + (A_c - A).
inline Mat2 transition_g_derivative(const SystemSpec& sys, const Mat2& g) {
  return sys.A * g + (sys.A_c - sys.A);
}

inline Mat2 m_matrix_from_g(const SystemSpec& sys, const Mat2& g, double tau) {
  struct Visitor {
    const SystemSpec& sys;
    const Mat2& g;
    double tau;
    Mat2 operator()(const LyapunovDerivative& rule) const {
      const Mat2 dg = transition_g_derivative(sys, g);
      const Mat2 half = dg.transpose() * rule.P * g;
      return half + half.transpose();
    }
    Mat2 operator()(const RelativeThreshold& rule) const {
      const double s2 = rule.sigma * rule.sigma;
      const Mat2 gt = g.transpose();
      return (1.0 - s2) * (gt * g) - (gt + g) + Mat2::identity();
    }
    Mat2 operator()(const ExponentialDecay& rule) const {
      return g.transpose() * rule.P * g - std::exp(-rule.r * tau) * rule.P;
    }
    Mat2 operator()(const CustomMatrix& rule) const { return rule.m(tau); }
  };
  return symmetrize(std::visit(Visitor{sys, g, tau}, sys.rule));
}

/// Symmetric M(tau) of the active rule.
inline Mat2 m_matrix(const SystemSpec& sys, double tau) {
  if (std::holds_alternative<CustomMatrix>(sys.rule)) {
    return symmetrize(std::get<CustomMatrix>(sys.rule).m(tau));
  }
  return m_matrix_from_g(sys, transition_g(sys, tau), tau);
}

/// sigma = 0.99 lambda_min(Q) / (2 |P B K|) with the induced 2-norm.
inline double default_sigma(const Mat2& p, const Mat2& bk, const Mat2& q) {
  const double gain = norm2(p * bk);
  if (gain < 1e-12) throw Error(ErrorKind::DegenerateGain, "|P B K| is numerically zero");
  return 0.99 * sym_eigenvalues(q)[0] / (2.0 * gain);
}

inline double default_sigma(const SystemSpec& sys) { return default_sigma(sys.P, sys.BK, sys.Q); }

inline bool negative_definite(const Mat2& m) { return m.trace() < 0.0 && m.det() > 0.0; }

struct AssumptionA1 {
  double tau_m = 0.0;
  bool holds = false;
  bool zero_found = false;
  std::string diagnostics;
};

/// Locates tau_m, the first loss of negative definiteness of M(tau), and checks
/// that M(tau) is negative definite on (0, tau_m).
///
/// The scan tracks lambda_max(M(tau)); under the assumption its first zero is the
/// first zero of det M(tau), and it also brackets zeros where det M only touches 0.
inline AssumptionA1 check_assumption_a1(const SystemSpec& sys) {
  const NumericPolicy& pol = sys.policy;
  auto top = [&](double tau) { return sym_eigenvalues(m_matrix(sys, tau))[1]; };

  AssumptionA1 out;
  double lo = pol.probe_start;
  if (top(lo) >= 0.0) {
    out.diagnostics = "M(tau) is not negative definite at tau = " + std::to_string(lo);
    out.tau_m = 0.0;
    return out;
  }
  double hi = 0.0;
  bool bracketed = false;
  for (double step_lo = lo; step_lo < pol.probe_limit && !bracketed; step_lo *= 2.0) {
    const double step_hi = 2.0 * step_lo;
    double prev = step_lo;
    for (int i = 1; i <= pol.probe_substeps; ++i) {
      const double t = step_lo + (step_hi - step_lo) * i / pol.probe_substeps;
      if (top(t) >= 0.0) {
        lo = prev;
        hi = t;
        bracketed = true;
        break;
      }
      prev = t;
    }
  }
  if (!bracketed) {
    out.diagnostics = "NoZeroFound: M(tau) stays negative definite up to tau = " + std::to_string(pol.probe_limit);
    return out;
  }
  while (hi - lo > pol.root_tol * 1e-2 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (top(mid) >= 0.0) hi = mid; else lo = mid;
  }
  out.tau_m = 0.5 * (lo + hi);
  out.zero_found = true;

  // Refinement of (0, tau_m): geometric near zero, uniform beyond.
  bool definite = true;
  double worst = 0.0;
  for (double t = pol.probe_start; t < out.tau_m && definite; t *= 2.0) {
    if (!negative_definite(m_matrix(sys, t))) { definite = false; worst = t; }
  }
  for (int i = 1; i < pol.definiteness_samples && definite; ++i) {
    const double t = out.tau_m * i / pol.definiteness_samples;
    if (!negative_definite(m_matrix(sys, t))) { definite = false; worst = t; }
  }
  out.holds = definite;
  if (!definite) out.diagnostics = "M(tau) not negative definite at tau = " + std::to_string(worst);
  return out;
}

}  // namespace ietlab
