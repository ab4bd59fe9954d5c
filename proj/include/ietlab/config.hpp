#pragma once

// Run configuration: a sectioned key = value text format. Values are numbers,
// bare words, or row-major array literals such as [[0, 1], [-2, 3]].

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ietlab/error.hpp"
#include "ietlab/planar.hpp"
#include "ietlab/policy.hpp"
#include "ietlab/random.hpp"
#include "ietlab/trigger.hpp"

namespace ietlab {

struct AnalysisOptions {
  std::size_t grid = 512;            ///< theta grid for tau_s and phi tables
  double horizon = 0.0;              ///< 0 keeps the factor rule
  std::vector<std::size_t> ladder{100, 1000, 10000};
  std::size_t sweep_grid = 64;
  std::vector<Vec2> seeds;           ///< initial states; empty means draw them
  std::size_t random_seeds = 3;
  std::size_t rotation_n = 10000;
  std::uint64_t seed = 42;
  std::size_t events = 200;
  std::size_t fixed_point_grid = 256;
  int k_max = 4;
  std::size_t dense = 50;
  std::size_t arcsin_samples = 10000;
};

struct RunConfig {
  enum class Kind { Plant, SyntheticRotation } kind = Kind::Plant;

  Mat2 A;
  int inputs = 2;
  std::vector<double> B{1, 0, 0, 1};  ///< 2 x inputs, row-major
  std::vector<double> K;              ///< inputs x 2, row-major

  std::string rule = "relative-threshold";
  std::optional<double> sigma;
  double r = 0.0;
  Mat2 Q = Mat2::identity();

  // Synthetic rigid rotation phi(theta) = theta + rotation with
  // tau_s(theta) = tau_mean + tau_amp cos(2 theta).
  double rotation = 0.0;
  double tau_mean = 1.0;
  double tau_amp = 0.0;

  AnalysisOptions analysis;
  NumericPolicy policy;
};

namespace detail {

using nlohmann::json;

[[noreturn]] inline void config_fail(int line, const std::string& msg) {
  throw Error(ErrorKind::Config, (line > 0 ? "line " + std::to_string(line) + ": " : std::string()) + msg);
}

inline double as_real(const json& v, int line, const std::string& key) {
  if (!v.is_number()) config_fail(line, key + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) config_fail(line, key + " must be finite");
  return x;
}

inline std::size_t as_count(const json& v, int line, const std::string& key) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) config_fail(line, key + " must be a non-negative integer");
  const auto x = v.get<long long>();
  if (x < 0) config_fail(line, key + " must be a non-negative integer");
  return static_cast<std::size_t>(x);
}

// Rows x cols matrix from a nested array literal, returned row-major.
inline std::vector<double> as_matrix(const json& v, int line, const std::string& key, int rows, int cols) {
  if (!v.is_array() || (rows > 0 && static_cast<int>(v.size()) != rows)) {
    config_fail(line, key + " must be a " + (rows > 0 ? std::to_string(rows) : std::string("n")) + "-row array");
  }
  std::vector<double> out;
  int width = cols;
  for (const auto& row : v) {
    if (!row.is_array()) config_fail(line, key + " rows must be arrays");
    if (width < 0) width = static_cast<int>(row.size());
    if (static_cast<int>(row.size()) != width || width == 0) config_fail(line, key + " has ragged or empty rows");
    for (const auto& x : row) out.push_back(as_real(x, line, key));
  }
  return out;
}

inline Mat2 as_mat2(const json& v, int line, const std::string& key) {
  const auto m = as_matrix(v, line, key, 2, 2);
  return {m[0], m[1], m[2], m[3]};
}

inline json parse_value(const std::string& text) {
  // Bare words (rule names) are strings; everything else is a JSON literal.
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return json(text);
  }
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct PolicyField {
  const char* name;
  double NumericPolicy::*real;
  int NumericPolicy::*integer;
};

inline const std::vector<PolicyField>& policy_fields() {
  static const std::vector<PolicyField> fields = {
      {"defective_disc_tol", &NumericPolicy::defective_disc_tol, nullptr},
      {"singular_a_tol", &NumericPolicy::singular_a_tol, nullptr},
      {"overflow_limit", &NumericPolicy::overflow_limit, nullptr},
      {"zero_vector_tol", &NumericPolicy::zero_vector_tol, nullptr},
      {"lyapunov_residual_tol", &NumericPolicy::lyapunov_residual_tol, nullptr},
      {"probe_start", &NumericPolicy::probe_start, nullptr},
      {"probe_limit", &NumericPolicy::probe_limit, nullptr},
      {"probe_substeps", nullptr, &NumericPolicy::probe_substeps},
      {"root_tol", &NumericPolicy::root_tol, nullptr},
      {"definiteness_samples", nullptr, &NumericPolicy::definiteness_samples},
      {"scan_steps_per_tau_m", nullptr, &NumericPolicy::scan_steps_per_tau_m},
      {"scan_start_factor", &NumericPolicy::scan_start_factor, nullptr},
      {"horizon_factor", &NumericPolicy::horizon_factor, nullptr},
      {"tangent_tol", &NumericPolicy::tangent_tol, nullptr},
      {"det_zero_tol", &NumericPolicy::det_zero_tol, nullptr},
      {"zero_matrix_tol", &NumericPolicy::zero_matrix_tol, nullptr},
      {"jump_factor", &NumericPolicy::jump_factor, nullptr},
      {"jump_refine_levels", nullptr, &NumericPolicy::jump_refine_levels},
      {"extremum_rel_tol", &NumericPolicy::extremum_rel_tol, nullptr},
      {"fixed_point_tol", &NumericPolicy::fixed_point_tol, nullptr},
      {"stability_delta0", &NumericPolicy::stability_delta0, nullptr},
      {"stability_levels", nullptr, &NumericPolicy::stability_levels},
      {"stability_samples", nullptr, &NumericPolicy::stability_samples},
      {"degenerate_g_tol", &NumericPolicy::degenerate_g_tol, nullptr},
      {"rational_qmax", nullptr, &NumericPolicy::rational_qmax},
      {"uniformity_rel_tol", &NumericPolicy::uniformity_rel_tol, nullptr},
      {"divergence_rel_tol", &NumericPolicy::divergence_rel_tol, nullptr},
      {"underflow_norm", &NumericPolicy::underflow_norm, nullptr},
  };
  return fields;
}

inline void assign(RunConfig& cfg, const std::string& section, const std::string& key, const json& v, int line,
                   bool& have_a, bool& have_k) {
  AnalysisOptions& an = cfg.analysis;
  const std::string where = section + "." + key;
  if (section == "system") {
    if (key == "kind") {
      if (!v.is_string()) config_fail(line, where + " must be a word");
      const auto s = v.get<std::string>();
      if (s == "plant") cfg.kind = RunConfig::Kind::Plant;
      else if (s == "synthetic-rotation") cfg.kind = RunConfig::Kind::SyntheticRotation;
      else config_fail(line, "unknown system kind '" + s + "'");
    } else if (key == "A") {
      cfg.A = as_mat2(v, line, where);
      have_a = true;
    } else if (key == "B") {
      cfg.B = as_matrix(v, line, where, 2, -1);
      cfg.inputs = static_cast<int>(cfg.B.size() / 2);
    } else if (key == "K") {
      cfg.K = as_matrix(v, line, where, -1, 2);
      have_k = true;
    } else {
      config_fail(line, "unknown key " + where);
    }
  } else if (section == "rule") {
    if (key == "name") {
      if (!v.is_string()) config_fail(line, where + " must be a word");
      cfg.rule = v.get<std::string>();
      if (cfg.rule != "lyapunov-derivative" && cfg.rule != "relative-threshold" && cfg.rule != "exp-decay") {
        config_fail(line, "unknown rule '" + cfg.rule + "'");
      }
    } else if (key == "sigma") {
      cfg.sigma = as_real(v, line, where);
    } else if (key == "r") {
      cfg.r = as_real(v, line, where);
    } else if (key == "Q") {
      cfg.Q = as_mat2(v, line, where);
    } else {
      config_fail(line, "unknown key " + where);
    }
  } else if (section == "synthetic") {
    if (key == "rotation") cfg.rotation = as_real(v, line, where);
    else if (key == "tau_mean") cfg.tau_mean = as_real(v, line, where);
    else if (key == "tau_amp") cfg.tau_amp = as_real(v, line, where);
    else config_fail(line, "unknown key " + where);
  } else if (section == "analysis") {
    if (key == "grid") an.grid = as_count(v, line, where);
    else if (key == "horizon") an.horizon = as_real(v, line, where);
    else if (key == "ladder") {
      if (!v.is_array() || v.empty()) config_fail(line, where + " must be a non-empty array");
      an.ladder.clear();
      for (const auto& x : v) an.ladder.push_back(as_count(x, line, where));
    } else if (key == "sweep_grid") an.sweep_grid = as_count(v, line, where);
    else if (key == "seeds") {
      const auto flat = as_matrix(v, line, where, -1, 2);
      an.seeds.clear();
      for (std::size_t i = 0; i < flat.size(); i += 2) {
        const Vec2 s{flat[i], flat[i + 1]};
        if (norm(s) <= cfg.policy.zero_vector_tol) {
          throw Error(ErrorKind::ZeroVector, "line " + std::to_string(line) + ": initial state must be nonzero");
        }
        an.seeds.push_back(s);
      }
    } else if (key == "random_seeds") an.random_seeds = as_count(v, line, where);
    else if (key == "rotation_n") an.rotation_n = as_count(v, line, where);
    else if (key == "seed") an.seed = as_count(v, line, where);
    else if (key == "events") an.events = as_count(v, line, where);
    else if (key == "fixed_point_grid") an.fixed_point_grid = as_count(v, line, where);
    else if (key == "k_max") an.k_max = static_cast<int>(as_count(v, line, where));
    else if (key == "dense") an.dense = as_count(v, line, where);
    else if (key == "arcsin_samples") an.arcsin_samples = as_count(v, line, where);
    else config_fail(line, "unknown key " + where);
  } else if (section == "tolerances") {
    for (const auto& f : policy_fields()) {
      if (key != f.name) continue;
      if (f.real) cfg.policy.*(f.real) = as_real(v, line, where);
      else cfg.policy.*(f.integer) = static_cast<int>(as_count(v, line, where));
      return;
    }
    config_fail(line, "unknown key " + where);
  } else {
    config_fail(line, "unknown section [" + section + "]");
  }
}

}  // namespace detail

/// Parses config text. Errors carry the offending line number.
inline RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  bool have_a = false, have_k = false;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[' && s.back() == ']' && s.find('=') == std::string::npos) {
      section = detail::trim(s.substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) detail::config_fail(line, "expected key = value");
    if (section.empty()) detail::config_fail(line, "key outside of a section");
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string value = detail::trim(s.substr(eq + 1));
    if (key.empty() || value.empty()) detail::config_fail(line, "empty key or value");
    detail::assign(cfg, section, key, detail::parse_value(value), line, have_a, have_k);
  }
  if (cfg.kind == RunConfig::Kind::Plant) {
    if (!have_a) detail::config_fail(0, "[system] A is required");
    if (!have_k) detail::config_fail(0, "[system] K is required");
    if (cfg.K.size() != static_cast<std::size_t>(2 * cfg.inputs)) {
      detail::config_fail(0, "K must have as many rows as B has columns");
    }
  }
  if (cfg.analysis.ladder.empty() || cfg.analysis.ladder.front() == 0) detail::config_fail(0, "ladder entries must be positive");
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Config, "cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline RuleChoice rule_choice(const RunConfig& cfg) {
  RuleChoice c;
  if (cfg.rule == "lyapunov-derivative") c.kind = RuleChoice::Kind::LyapunovDerivative;
  else if (cfg.rule == "exp-decay") c.kind = RuleChoice::Kind::ExponentialDecay;
  else c.kind = RuleChoice::Kind::RelativeThreshold;
  c.sigma = cfg.sigma;
  c.r = cfg.r;
  return c;
}

/// Builds and validates the system; throws NotHurwitz when A + B K is not Hurwitz.
inline SystemSpec build_system(const RunConfig& cfg) {
  if (cfg.kind != RunConfig::Kind::Plant) throw Error(ErrorKind::Config, "not a plant configuration");
  NumericPolicy pol = cfg.policy;
  if (cfg.analysis.horizon > 0.0) pol.horizon_override = cfg.analysis.horizon;
  return make_system(cfg.A, cfg.B, cfg.K, cfg.inputs, rule_choice(cfg), cfg.Q, pol);
}

/// Fills in everything left to defaults that depends on the system or the
/// seed: sigma for relative-threshold and drawn initial states.
inline void resolve(RunConfig& cfg, const SystemSpec* sys) {
  if (sys) {
    if (const auto* r = std::get_if<RelativeThreshold>(&sys->rule)) cfg.sigma = r->sigma;
  }
  if (cfg.analysis.seeds.empty()) {
    Rng rng(cfg.analysis.seed);
    for (std::size_t i = 0; i < cfg.analysis.random_seeds; ++i) {
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double radius = rng.uniform(0.5, 2.0);
      cfg.analysis.seeds.push_back({radius * std::cos(angle), radius * std::sin(angle)});
    }
  }
}

namespace detail {

inline std::string real_text(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string matrix_text(const std::vector<double>& m, std::size_t cols) {
  std::string out = "[";
  for (std::size_t i = 0; i < m.size(); i += cols) {
    if (i) out += ", ";
    out += "[";
    for (std::size_t j = 0; j < cols; ++j) {
      if (j) out += ", ";
      out += real_text(m[i + j]);
    }
    out += "]";
  }
  return out + "]";
}

inline std::string mat2_text(const Mat2& m) { return matrix_text({m.a11, m.a12, m.a21, m.a22}, 2); }

}  // namespace detail

/// The config in canonical form; parsing the result gives back the same config.
inline std::string write_config(const RunConfig& cfg) {
  using detail::real_text;
  std::string s;
  auto kv = [&s](const std::string& k, const std::string& v) { s += k + " = " + v + "\n"; };
  s += "[system]\n";
  if (cfg.kind == RunConfig::Kind::SyntheticRotation) {
    kv("kind", "synthetic-rotation");
  } else {
    kv("kind", "plant");
    kv("A", detail::mat2_text(cfg.A));
    kv("B", detail::matrix_text(cfg.B, static_cast<std::size_t>(cfg.inputs)));
    kv("K", detail::matrix_text(cfg.K, 2));
  }
  s += "\n[rule]\n";
  kv("name", cfg.rule);
  if (cfg.sigma) kv("sigma", real_text(*cfg.sigma));
  kv("r", real_text(cfg.r));
  kv("Q", detail::mat2_text(cfg.Q));
  if (cfg.kind == RunConfig::Kind::SyntheticRotation) {
    s += "\n[synthetic]\n";
    kv("rotation", real_text(cfg.rotation));
    kv("tau_mean", real_text(cfg.tau_mean));
    kv("tau_amp", real_text(cfg.tau_amp));
  }
  const AnalysisOptions& an = cfg.analysis;
  s += "\n[analysis]\n";
  kv("grid", std::to_string(an.grid));
  kv("horizon", real_text(an.horizon));
  std::string ladder = "[";
  for (std::size_t i = 0; i < an.ladder.size(); ++i) ladder += (i ? ", " : "") + std::to_string(an.ladder[i]);
  kv("ladder", ladder + "]");
  kv("sweep_grid", std::to_string(an.sweep_grid));
  if (!an.seeds.empty()) {
    std::vector<double> flat;
    for (const auto& v : an.seeds) { flat.push_back(v.x1); flat.push_back(v.x2); }
    kv("seeds", detail::matrix_text(flat, 2));
  }
  kv("random_seeds", std::to_string(an.random_seeds));
  kv("rotation_n", std::to_string(an.rotation_n));
  kv("seed", std::to_string(an.seed));
  kv("events", std::to_string(an.events));
  kv("fixed_point_grid", std::to_string(an.fixed_point_grid));
  kv("k_max", std::to_string(an.k_max));
  kv("dense", std::to_string(an.dense));
  kv("arcsin_samples", std::to_string(an.arcsin_samples));
  s += "\n[tolerances]\n";
  for (const auto& f : detail::policy_fields()) {
    kv(f.name, f.real ? real_text(cfg.policy.*(f.real)) : std::to_string(cfg.policy.*(f.integer)));
  }
  return s;
}

}  // namespace ietlab
