#pragma once

// Exact event-driven simulation: between events x(t) = G(t - t_k) x(t_k), and
// the next event comes from tau_s, with no ODE stepping.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ietlab/error.hpp"
#include "ietlab/iet.hpp"
#include "ietlab/parallel.hpp"
#include "ietlab/planar.hpp"
#include "ietlab/trigger.hpp"

namespace ietlab {

enum class StopReason { Completed, TimeHorizon, Underflow };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::Completed: return "completed";
    case StopReason::TimeHorizon: return "time-horizon";
    case StopReason::Underflow: return "underflow";
  }
  return "completed";
}

struct DenseSample {
  double t = 0.0;
  Vec2 x;
};

struct EventTrace {
  std::vector<double> t;      ///< t_0 = 0 < t_1 < ...
  std::vector<Vec2> x;        ///< x(t_k), raw magnitudes
  std::vector<double> theta;  ///< arg x(t_k) in [0, 2pi)
  std::vector<double> tau;    ///< tau_k = t_{k+1} - t_k, one fewer than t
  std::vector<DenseSample> dense;
  StopReason stop = StopReason::Completed;

  std::size_t events() const { return tau.size(); }
};

struct SimulationOptions {
  std::size_t dense_per_interval = 0;  ///< 0 disables dense sampling
  std::optional<double> t_max;         ///< stop once t_k reaches this
};

/// Simulates n_events events from x0. Throws ZeroVector for x0 = 0 and
/// propagates HorizonExceeded.
inline EventTrace simulate(const EventMap& map, Vec2 x0, std::size_t n_events, const SimulationOptions& opt = {}) {
  const SystemSpec& sys = map.system();
  const NumericPolicy& pol = sys.policy;
  if (n_events < 1) throw Error(ErrorKind::Config, "n_events must be at least 1");
  if (norm(x0) <= pol.zero_vector_tol) throw Error(ErrorKind::ZeroVector, "initial state is zero");
  EventTrace tr;
  tr.t.reserve(n_events + 1);
  tr.x.reserve(n_events + 1);
  tr.theta.reserve(n_events + 1);
  tr.tau.reserve(n_events);
  tr.t.push_back(0.0);
  tr.x.push_back(x0);
  tr.theta.push_back(arg2(x0, pol));
  for (std::size_t k = 0; k < n_events; ++k) {
    const Vec2 xk = tr.x.back();
    if (norm(xk) < pol.underflow_norm) {
      tr.stop = StopReason::Underflow;
      break;
    }
    if (opt.t_max && tr.t.back() >= *opt.t_max) {
      tr.stop = StopReason::TimeHorizon;
      break;
    }
    const double tau = map.tau_s(tr.theta.back());
    if (opt.dense_per_interval > 0) {
      const double tk = tr.t.back();
      for (std::size_t j = 0; j < opt.dense_per_interval; ++j) {
        const double s = tau * static_cast<double>(j) / static_cast<double>(opt.dense_per_interval);
        tr.dense.push_back({tk + s, transition_g(sys, s) * xk});
      }
    }
    const Vec2 next = transition_g(sys, tau) * xk;
    tr.tau.push_back(tau);
    tr.t.push_back(tr.t.back() + tau);
    tr.x.push_back(next);
    if (norm(next) <= pol.zero_vector_tol) {
      tr.theta.push_back(tr.theta.back());
      tr.stop = StopReason::Underflow;
      break;
    }
    tr.theta.push_back(arg2(next, pol));
  }
  if (opt.dense_per_interval > 0) tr.dense.push_back({tr.t.back(), tr.x.back()});
  return tr;
}

/// Dense trajectories for several seeds; element i belongs to seeds[i].
inline std::vector<EventTrace> phase_portrait(const EventMap& map, const std::vector<Vec2>& seeds,
                                              std::size_t n_events, std::size_t m_per_interval = 50) {
  std::vector<EventTrace> out(seeds.size());
  SimulationOptions opt;
  opt.dense_per_interval = m_per_interval;
  parallel_for(seeds.size(), [&](std::size_t i) { out[i] = simulate(map, seeds[i], n_events, opt); });
  return out;
}

/// Relative violation of the triggering condition at the end of interval k:
/// tr2 | |x_k - x_{k+1}| - sigma |x_{k+1}| | / (sigma |x_{k+1}|),
/// tr3 |V(x_{k+1}) - V(x_k) e^{-r tau}| / V(x_k) e^{-r tau},
/// tr1 |dV/dt| / |x_k|^2, and |x^T M x| / |x_k|^2 for custom rules.
inline double event_residual(const SystemSpec& sys, const EventTrace& tr, std::size_t k) {
  const Vec2 xk = tr.x[k];
  const Vec2 x1 = tr.x[k + 1];
  const double tau = tr.tau[k];
  if (const auto* r = std::get_if<RelativeThreshold>(&sys.rule)) {
    const double target = r->sigma * norm(x1);
    return std::abs(norm(xk - x1) - target) / target;
  }
  if (const auto* r = std::get_if<ExponentialDecay>(&sys.rule)) {
    const double target = quad_form(r->P, xk) * std::exp(-r->r * tau);
    return std::abs(quad_form(r->P, x1) - target) / target;
  }
  if (const auto* r = std::get_if<LyapunovDerivative>(&sys.rule)) {
    const Vec2 xdot = sys.A * x1 + sys.BK * xk;
    const double vdot = 2.0 * dot(x1, r->P * xdot);
    return std::abs(vdot) / dot(xk, xk);
  }
  return std::abs(quad_form(m_matrix(sys, tau), xk)) / dot(xk, xk);
}

}  // namespace ietlab
