#pragma once

// Command orchestration behind the ietlab CLI. Every command writes its files
// into one output directory together with run_manifest.cfg, the fully resolved
// config that reproduces the run.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ietlab/angle_map.hpp"
#include "ietlab/circle.hpp"
#include "ietlab/config.hpp"
#include "ietlab/error.hpp"
#include "ietlab/iet.hpp"
#include "ietlab/simulation.hpp"
#include "ietlab/trigger.hpp"

namespace ietlab {

namespace detail {

inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

class TextFile {
 public:
  TextFile& line(const std::string& s) {
    body_ += s;
    body_ += '\n';
    return *this;
  }
  TextFile& kv(const std::string& k, const std::string& v) { return line(k + " = " + v); }
  TextFile& kv(const std::string& k, double v) { return kv(k, num(v)); }
  TextFile& kv(const std::string& k, bool v) { return kv(k, std::string(v ? "true" : "false")); }
  TextFile& kv(const std::string& k, std::size_t v) { return kv(k, std::to_string(v)); }
  TextFile& row(std::initializer_list<std::string> cells) {
    std::string s;
    bool first = true;
    for (const auto& c : cells) {
      if (!first) s += ',';
      s += c;
      first = false;
    }
    return line(s);
  }
  const std::string& str() const { return body_; }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Config, "cannot write '" + path.string() + "'");
    out << body_;
  }

 private:
  std::string body_;
};

inline std::filesystem::path prepare_dir(const std::string& out) {
  if (out.empty()) throw Error(ErrorKind::Config, "an output directory is required (--out)");
  std::filesystem::path dir(out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Config, "cannot create '" + out + "': " + ec.message());
  return dir;
}

inline void write_manifest(const RunConfig& cfg, const std::filesystem::path& dir) {
  std::ofstream out(dir / "run_manifest.cfg", std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Config, "cannot write the run manifest");
  out << write_config(cfg);
}

inline SyntheticMap synthetic_map(const RunConfig& cfg) {
  const double c = cfg.rotation, mean = cfg.tau_mean, amp = cfg.tau_amp;
  if (!(mean - std::abs(amp) > 0.0)) throw Error(ErrorKind::Config, "synthetic tau_s must stay positive");
  return {[c](double t) { return t + c; }, [mean, amp](double t) { return mean + amp * std::cos(2.0 * t); },
          cfg.policy};
}

inline void require_plant(const RunConfig& cfg, const char* command) {
  if (cfg.kind != RunConfig::Kind::Plant) {
    throw Error(ErrorKind::Config, std::string(command) + " needs a plant system; synthetic maps support avg-sweep only");
  }
}

inline void necessary_conditions_text(TextFile& f, const EventMap& map, const IetProfile* profile,
                                      const RunConfig& cfg) {
  const SystemSpec& sys = map.system();
  f.kv("rule", rule_name(sys.rule));
  if (!std::holds_alternative<RelativeThreshold>(sys.rule)) {
    f.kv("applicable", std::string("false (det L, |R| and the asin(sigma) bound concern relative-threshold)"));
    return;
  }
  const double sigma = std::get<RelativeThreshold>(sys.rule).sigma;
  f.kv("applicable", true);
  f.kv("sigma", sigma);
  f.kv("alpha", 1.0 / (1.0 + sigma));
  if (profile) {
    const auto zeros = det_l_zeros(map, profile->tau_min, profile->tau_max);
    f.kv("det_l_window", "[" + num(profile->tau_min) + ", " + num(profile->tau_max) + "]");
    f.kv("det_l_zero_count", zeros.size());
    for (std::size_t i = 0; i < zeros.size(); ++i) {
      const std::string p = "det_l_zero." + std::to_string(i + 1);
      f.kv(p + ".tau", zeros[i].tau);
      f.kv(p + ".theta0", zeros[i].theta0);
      f.kv(p + ".tau_s_theta0", zeros[i].tau_s_at);
      f.kv(p + ".consistent", zeros[i].consistent);
    }
  }
  try {
    const auto r = necessary_condition_r(sys);
    f.kv("r_applicable", true);
    f.kv("r_norm", r.r_norm);
    f.kv("r_threshold", r.threshold);
    f.kv("r_comparison", std::string(r.threshold_strict ? ">" : ">="));
    f.kv("r_note", r.r_note);
    f.kv("r_satisfied", r.satisfied);
    f.kv("real_ac_proposition_applies", r.real_ac_prop_applies);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NotApplicable) throw;
    f.kv("r_applicable", false);
    f.kv("r_note", std::string(e.what()));
  }
  const auto ab = arcsin_bound_check(map, cfg.analysis.arcsin_samples, cfg.analysis.seed);
  f.kv("arcsin_samples", ab.samples);
  f.kv("arcsin_max_displacement", ab.max_displacement);
  f.kv("arcsin_bound", ab.bound);
  f.kv("arcsin_holds", ab.holds);
}

inline void assumption_text(TextFile& f, const EventMap& map) {
  const auto& a1 = map.assumption();
  f.kv("tau_m", a1.tau_m);
  f.kv("assumption_holds", a1.holds);
  const auto pt = periodic_trigger_check(map.system(), a1);
  f.kv("periodic_trigger", pt.is_periodic);
  if (pt.is_periodic) f.kv("periodic_tau", pt.tau_1);
  f.kv("m_norm_at_tau_m", pt.m_norm_at_tau_1);
}

}  // namespace detail

/// The analysis tables and reports for one system.
inline void cmd_analyze(RunConfig cfg, const std::string& out) {
  detail::require_plant(cfg, "analyze");
  const SystemSpec sys = build_system(cfg);
  resolve(cfg, &sys);
  const EventMap map(sys);
  const auto dir = detail::prepare_dir(out);
  const AnalysisOptions& an = cfg.analysis;
  const std::size_t n = std::max<std::size_t>(an.grid, 16);

  const IetProfile profile = profile_scan(map, n);
  {
    detail::TextFile f;
    f.line("theta,tau_s,flag");
    for (std::size_t i = 0; i < profile.theta.size(); ++i) {
      f.row({detail::num(profile.theta[i]), profile.flags[i] == ProfileFlag::Horizon ? "" : detail::num(profile.tau[i]),
             to_string(profile.flags[i])});
    }
    f.save(dir / "tau_s.csv");
  }

  // tau tables span [0, 2 tau_max], clipped to the horizon.
  const double tau_hi = std::min(2.0 * profile.tau_max, map.horizon());
  const bool is_tr2 = std::holds_alternative<RelativeThreshold>(sys.rule);
  {
    detail::TextFile dm, dl;
    dm.line("tau,detM");
    dl.line("tau,detL");
    for (std::size_t i = 0; i <= n; ++i) {
      const double tau = tau_hi * static_cast<double>(i) / static_cast<double>(n);
      dm.row({detail::num(tau), detail::num(m_matrix(sys, tau).det())});
      if (is_tr2) dl.row({detail::num(tau), detail::num(det_l(sys, tau))});
    }
    dm.save(dir / "detM.csv");
    dl.save(dir / "detL.csv");
  }

  {
    std::vector<double> disp(n);
    parallel_for(n, [&](std::size_t i) {
      const double theta = kPi * static_cast<double>(i) / static_cast<double>(n);
      disp[i] = wrap_pi(map.step(theta).next - theta);
    });
    detail::TextFile f;
    f.line("theta,phi_minus_theta");
    for (std::size_t i = 0; i < n; ++i) f.row({detail::num(kPi * static_cast<double>(i) / static_cast<double>(n)), detail::num(disp[i])});
    f.save(dir / "phi_minus_theta.csv");
  }

  const LiftFunction lf = lift_function(map, 2 * n);
  {
    detail::TextFile f;
    f.line("theta,lift");
    for (std::size_t i = 0; i < lf.theta.size(); ++i) f.row({detail::num(lf.theta[i]), detail::num(lf.value[i])});
    f.save(dir / "lift.csv");
  }

  const auto reports = fixed_points_up_to(map, an.k_max, an.fixed_point_grid);
  {
    detail::TextFile f;
    for (const auto& r : reports) {
      f.line("[k = " + std::to_string(r.k) + "]");
      f.kv("all", r.all);
      f.kv("count", r.points.size());
      for (std::size_t i = 0; i < r.points.size(); ++i) {
        const auto& p = r.points[i];
        const std::string key = "point." + std::to_string(i + 1);
        f.kv(key + ".theta", p.theta);
        f.kv(key + ".winding", std::to_string(p.winding));
        f.kv(key + ".residual", p.residual);
        if (r.k == 1) {
          f.kv(key + ".stability", std::string(to_string(p.stability.label)));
          f.kv(key + ".certified_delta", p.stability.certified_delta);
          f.kv(key + ".basin", "[" + detail::num(p.stability.basin_lo) + ", " + detail::num(p.stability.basin_hi) +
                                   "] (numerical estimate)");
          f.kv(key + ".tau_s", map.tau_s(p.theta));
        }
      }
      f.line("");
    }
    f.kv("lift_monotone", lf.monotone);
    f.save(dir / "fixed_points.txt");
  }

  {
    const auto v = steady_state_verdict(reports, profile.tau_min, profile.tau_max,
                                        [&](double t) { return map.tau_s(t); });
    detail::TextFile f;
    f.kv("verdict", std::string(to_string(v.verdict)));
    if (v.limit_theta) f.kv("limit_theta", *v.limit_theta);
    if (v.limit_tau) f.kv("limit_tau", *v.limit_tau);
    f.kv("evidence", v.evidence);
    f.kv("tau_min", profile.tau_min);
    f.kv("theta_min", profile.theta_min);
    f.kv("tau_max", profile.tau_max);
    f.kv("theta_max", profile.theta_max);
    f.kv("continuous", profile.continuous);
    f.kv("discontinuities", profile.discontinuities.size());
    for (std::size_t i = 0; i < profile.discontinuities.size(); ++i) {
      const std::string key = "discontinuity." + std::to_string(i + 1);
      f.kv(key + ".theta", profile.discontinuities[i].theta);
      f.kv(key + ".jump", profile.discontinuities[i].jump);
    }
    f.kv("horizon_failures", profile.horizon_failures);
    f.save(dir / "verdict.txt");
  }

  {
    detail::TextFile f;
    detail::assumption_text(f, map);
    detail::necessary_conditions_text(f, map, &profile, cfg);
    f.save(dir / "necessary_conditions.txt");
  }
  detail::write_manifest(cfg, dir);
}

/// One trace per initial state, the merged dense portrait and the IET table.
inline void cmd_simulate(RunConfig cfg, const std::string& out) {
  detail::require_plant(cfg, "simulate");
  const SystemSpec sys = build_system(cfg);
  resolve(cfg, &sys);
  const EventMap map(sys);
  const auto dir = detail::prepare_dir(out);
  const AnalysisOptions& an = cfg.analysis;
  if (an.seeds.empty()) throw Error(ErrorKind::Config, "no initial states to simulate");
  const auto traces = phase_portrait(map, an.seeds, std::max<std::size_t>(an.events, 1), an.dense);

  for (std::size_t i = 0; i < traces.size(); ++i) {
    const auto& tr = traces[i];
    detail::TextFile f;
    f.line("k,t_k,x1,x2,theta_k,tau_k");
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
      f.row({std::to_string(k), detail::num(tr.t[k]), detail::num(tr.x[k].x1), detail::num(tr.x[k].x2),
             detail::num(tr.theta[k]), k < tr.tau.size() ? detail::num(tr.tau[k]) : std::string()});
    }
    f.save(dir / ("trace_" + std::to_string(i) + ".csv"));
  }
  {
    detail::TextFile f;
    f.line("seed,t,x1,x2");
    for (std::size_t i = 0; i < traces.size(); ++i)
      for (const auto& d : traces[i].dense)
        f.row({std::to_string(i), detail::num(d.t), detail::num(d.x.x1), detail::num(d.x.x2)});
    f.save(dir / "portrait.csv");
  }
  {
    detail::TextFile f;
    std::string header = "k";
    std::size_t rows = 0;
    for (std::size_t i = 0; i < traces.size(); ++i) {
      header += ",tau_" + std::to_string(i);
      rows = std::max(rows, traces[i].events());
    }
    f.line(header);
    for (std::size_t k = 0; k < rows; ++k) {
      std::string line = std::to_string(k);
      for (const auto& tr : traces) line += "," + (k < tr.tau.size() ? detail::num(tr.tau[k]) : std::string());
      f.line(line);
    }
    f.save(dir / "iet_evolution.csv");
  }
  {
    detail::TextFile f;
    for (std::size_t i = 0; i < traces.size(); ++i) {
      const std::string key = "trace." + std::to_string(i);
      f.kv(key + ".x0", "[" + detail::num(an.seeds[i].x1) + ", " + detail::num(an.seeds[i].x2) + "]");
      f.kv(key + ".events", traces[i].events());
      f.kv(key + ".stop", std::string(to_string(traces[i].stop)));
    }
    f.save(dir / "simulation.txt");
  }
  detail::write_manifest(cfg, dir);
}

namespace detail {

template <AngleMapModel Model>
bool avg_sweep_files(const Model& model, const RunConfig& cfg, double tau_min, double tau_max,
                     const std::filesystem::path& dir) {
  const AnalysisOptions& an = cfg.analysis;
  const ErgodicReport rep = avg_sweep(model, an.sweep_grid, an.ladder);
  bool partial = false;
  for (const auto& p : rep.points) partial = partial || !p.error.empty();
  {
    TextFile f;
    f.line(partial ? "theta0,N,tau_avg,error" : "theta0,N,tau_avg");
    for (const auto& p : rep.points) {
      for (std::size_t j = 0; j < rep.ladder.size(); ++j) {
        std::string line = num(p.theta0) + "," + std::to_string(rep.ladder[j]) + "," +
                           (j < p.tau_avg.size() ? num(p.tau_avg[j]) : std::string());
        if (partial) line += "," + (j < p.tau_avg.size() ? std::string() : std::string("HorizonExceeded"));
        f.line(line);
      }
    }
    f.save(dir / "tau_avg.csv");
  }

  const RotationEstimate rot = rotation_number(model, 0.0, an.rotation_n);
  {
    TextFile f;
    f.kv("value", rot.value);
    f.kv("turns", rot.value / kTwoPi);
    f.kv("lifted_mean_displacement", rot.lifted);
    f.kv("iterations", rot.iterations);
    f.kv("least_squares_slope", rot.accelerated);
    if (rot.guess) {
      f.kv("guess", std::to_string(rot.guess->p) + "/" + std::to_string(rot.guess->q));
      f.kv("guess_residual_turns", rot.guess_residual);
    } else {
      f.kv("guess", std::string("none"));
    }
    f.kv("second_seed_value", rot.second_seed_value);
    f.kv("seed_gap", rot.seed_gap);
    f.kv("seeds_agree", rot.seeds_agree);
    f.kv("monotone_lift", rot.monotone_lift);
    std::string warnings;
    for (const auto& w : rot.warnings) warnings += (warnings.empty() ? "" : ", ") + w;
    f.kv("warnings", warnings.empty() ? std::string("none") : warnings);
    f.kv("confidence", rot.confidence);
    std::string hist;
    for (const auto& [m, v] : rot.history) hist += (hist.empty() ? "" : " ") + std::to_string(m) + ":" + num(v);
    f.kv("history", hist);
    f.save(dir / "rotation.txt");
  }

  {
    TextFile f;
    std::string ladder;
    for (auto v : rep.ladder) ladder += (ladder.empty() ? "" : ", ") + std::to_string(v);
    f.kv("ladder", "[" + ladder + "]");
    f.kv("grid", rep.points.size());
    f.kv("mean", rep.mean);
    f.kv("dispersion", rep.dispersion);
    f.kv("relative_dispersion", rep.mean > 0.0 ? rep.dispersion / rep.mean : 0.0);
    f.kv("uniform", rep.uniform);
    bool within = true;
    const double slack = 1e-9 * tau_max;
    for (const auto& p : rep.points)
      for (double v : p.tau_avg) within = within && v >= tau_min - slack && v <= tau_max + slack;
    f.kv("tau_min", tau_min);
    f.kv("tau_max", tau_max);
    f.kv("within_tau_range", within);
    f.kv("divergent_count", rep.divergent_count);
    for (const auto& p : rep.points) {
      if (!p.divergent) continue;
      f.kv("divergent.theta0", p.theta0);
    }
    if (rot.guess) {
      const auto orbits = periodic_orbits(model, static_cast<int>(rot.guess->q), an.fixed_point_grid);
      f.kv("periodic_orbit_period", std::to_string(rot.guess->q));
      f.kv("periodic_orbit_count", orbits.size());
      for (std::size_t i = 0; i < orbits.size(); ++i) {
        const std::string key = "orbit." + std::to_string(i + 1);
        std::string pts;
        for (double t : orbits[i].thetas) pts += (pts.empty() ? "" : ", ") + num(t);
        f.kv(key + ".thetas", "[" + pts + "]");
        f.kv(key + ".stability", std::string(to_string(orbits[i].stability.label)));
        f.kv(key + ".average_tau", orbits[i].average_tau);
      }
      if (orbits.empty()) {
        f.kv("orbit_note", std::string("no periodic orbit of the guessed period found; a flat average may come from "
                                       "no periodic orbit, a single long orbit, or orbits with equal averages"));
      }
    } else {
      f.kv("orbit_note", std::string("no rational guess; a flat average may come from no periodic orbit, a single "
                                     "long orbit, or orbits with equal averages"));
    }
    f.save(dir / "ergodic_report.txt");
  }
  return partial;
}

}  // namespace detail

/// Birkhoff averages over a grid of initial angles plus the rotation number.
/// Returns false when some orbit hit the horizon (files are still written).
inline bool cmd_avg_sweep(RunConfig cfg, const std::string& out) {
  const auto dir = detail::prepare_dir(out);
  bool partial = false;
  if (cfg.kind == RunConfig::Kind::SyntheticRotation) {
    resolve(cfg, nullptr);
    const SyntheticMap model = detail::synthetic_map(cfg);
    partial = detail::avg_sweep_files(model, cfg, cfg.tau_mean - std::abs(cfg.tau_amp),
                                      cfg.tau_mean + std::abs(cfg.tau_amp), dir);
  } else {
    const SystemSpec sys = build_system(cfg);
    resolve(cfg, &sys);
    const EventMap map(sys);
    const IetProfile profile = profile_scan(map, std::max<std::size_t>(cfg.analysis.grid, 16));
    partial = detail::avg_sweep_files(map, cfg, profile.tau_min, profile.tau_max, dir);
  }
  detail::write_manifest(cfg, dir);
  return !partial;
}

/// Assumption check, periodic-trigger test and necessary conditions only.
/// Returns the report text; writes check.txt when out is non-empty.
inline std::string cmd_check(RunConfig cfg, const std::string& out) {
  detail::require_plant(cfg, "check");
  const SystemSpec sys = build_system(cfg);
  resolve(cfg, &sys);
  detail::TextFile f;
  const AssumptionA1 a1 = check_assumption_a1(sys);
  if (!a1.holds) {
    f.kv("tau_m", a1.tau_m);
    f.kv("assumption_holds", false);
    f.kv("assumption_note", a1.diagnostics);
  } else {
    const EventMap map(sys);
    detail::assumption_text(f, map);
    detail::necessary_conditions_text(f, map, nullptr, cfg);
  }
  if (!out.empty()) {
    const auto dir = detail::prepare_dir(out);
    f.save(dir / "check.txt");
    detail::write_manifest(cfg, dir);
  }
  return f.str();
}

}  // namespace ietlab
