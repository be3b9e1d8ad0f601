#pragma once

// INI run configuration. Sections mirror the modules; every key is optional
// and defaults to the values below. Unknown sections or keys are rejected so
// typos do not silently fall back to defaults.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "adrmor/errors.hpp"
#include "adrmor/reduction.hpp"
#include "adrmor/scenarios.hpp"

namespace adrmor {

struct GridConfig {
  Index nodes = 500;
};

struct ReductionConfig {
  int order = 8;
  double tol = 1e-6;
  int max_iter = 100;
  int max_restarts = 3;
  double kappa = 0.5;
  double target_contraction = 0.1;
};

struct OracleSettings {
  Index refinement = 4;  // fine spacing = coarse spacing / refinement
  Index substeps = 4;    // dt_fine = dt / substeps
  bool enabled = true;
};

struct OutputConfig {
  std::string dir = "out";
  Index record_every = 60;
  std::vector<double> profile_hours{2.0, 3.0, 19.0, 30.0};
};

struct SweepConfig {
  Index nodes = 200;
  std::vector<int> decades{0, 1, 2, 3, 4, 5};
  std::vector<ScenarioKind> kinds{ScenarioKind::Step, ScenarioKind::Pulse, ScenarioKind::Random};
  Index record_every = 10;
};

struct RunConfig {
  GridConfig grid;
  ReductionConfig reduction;
  ScenarioConfig scenario = default_wq_config();
  OracleSettings oracle;
  OutputConfig output;
  SweepConfig sweep;
  std::string source = "<defaults>";
  std::string hash = "0000000000000000";

  H2Options h2_options() const {
    H2Options o;
    o.order = reduction.order;
    o.tol = reduction.tol;
    o.max_iter = reduction.max_iter;
    o.max_restarts = reduction.max_restarts;
    o.seed = scenario.seed;
    o.frame.kappa = reduction.kappa;
    o.frame.target_contraction = reduction.target_contraction;
    return o;
  }
};

/// 64-bit FNV-1a, hex encoded.
inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace detail {

class ConfigReader {
 public:
  explicit ConfigReader(const boost::property_tree::ptree& pt) : pt_(pt) {}

  template <typename T>
  void get(const std::string& section, const std::string& key, T& out) {
    used_[section].push_back(key);
    const auto node = pt_.get_child_optional(section + "." + key);
    if (!node) return;
    out = parse<T>(section, key, node->data());
  }

  template <typename T>
  void get_list(const std::string& section, const std::string& key, std::vector<T>& out) {
    used_[section].push_back(key);
    const auto node = pt_.get_child_optional(section + "." + key);
    if (!node) return;
    out.clear();
    std::stringstream ss(node->data());
    for (std::string item; std::getline(ss, item, ',');) out.push_back(parse<T>(section, key, trim(item)));
    if (out.empty()) bad(section, key, node->data(), "a nonempty comma-separated list");
  }

  /// Rejects sections and keys never requested.
  void check_unknown() const {
    for (const auto& [section, node] : pt_) {
      const auto it = used_.find(section);
      if (it == used_.end()) throw ValidationError("unknown config section [" + section + "]");
      for (const auto& [key, value] : node) {
        (void)value;
        bool known = false;
        for (const auto& k : it->second) known = known || k == key;
        if (!known) throw ValidationError("unknown config key " + section + "." + key);
      }
    }
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }

  [[noreturn]] static void bad(const std::string& section, const std::string& key, const std::string& value,
                               const std::string& what) {
    throw ValidationError("config " + section + "." + key + " = '" + value + "': expected " + what);
  }

  template <typename T>
  static T parse(const std::string& section, const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    if constexpr (std::is_same_v<T, std::string>) {
      return v;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (v == "true" || v == "1" || v == "yes") return true;
      if (v == "false" || v == "0" || v == "no") return false;
      bad(section, key, v, "a boolean");
    } else if constexpr (std::is_same_v<T, ScenarioKind>) {
      try {
        return scenario_kind_from_string(v);
      } catch (const ValidationError&) {
        bad(section, key, v, "step, pulse, random, chirp, multisine or waterquality");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      std::size_t pos = 0;
      double x = 0.0;
      try {
        x = std::stod(v, &pos);
      } catch (const std::exception&) {
        bad(section, key, v, "a number");
      }
      if (pos != v.size() || !std::isfinite(x)) bad(section, key, v, "a finite number");
      return x;
    } else {
      std::size_t pos = 0;
      long long x = 0;
      try {
        x = std::stoll(v, &pos);
      } catch (const std::exception&) {
        bad(section, key, v, "an integer");
      }
      if (pos != v.size()) bad(section, key, v, "an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (x < 0) bad(section, key, v, "a non-negative integer");
      }
      return static_cast<T>(x);
    }
  }

  const boost::property_tree::ptree& pt_;
  std::map<std::string, std::vector<std::string>> used_;
};

}  // namespace detail

/// Parses INI text; `name` labels diagnostics.
inline RunConfig parse_config(const std::string& text, const std::string& name = "<config>") {
  boost::property_tree::ptree pt;
  std::istringstream is(text);
  try {
    boost::property_tree::ini_parser::read_ini(is, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError(name + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig c;
  c.source = name;
  c.hash = fnv1a_hex(text);
  detail::ConfigReader r(pt);

  r.get("grid", "nodes", c.grid.nodes);

  r.get("reduction", "order", c.reduction.order);
  r.get("reduction", "tol", c.reduction.tol);
  r.get("reduction", "max_iter", c.reduction.max_iter);
  r.get("reduction", "max_restarts", c.reduction.max_restarts);
  r.get("reduction", "kappa", c.reduction.kappa);
  r.get("reduction", "target_contraction", c.reduction.target_contraction);

  ScenarioConfig& s = c.scenario;
  r.get("scenario", "kind", s.kind);
  r.get("scenario", "Pe_target", s.Pe_target);
  if (s.kind != ScenarioKind::WaterQuality) {
    const ScenarioConfig sweep_defaults;
    s.horizon = sweep_defaults.horizon;
    s.dt = sweep_defaults.dt;
  }
  r.get("scenario", "horizon", s.horizon);
  r.get("scenario", "dt", s.dt);
  r.get("scenario", "seed", s.seed);
  r.get("scenario", "length", s.length);
  r.get("scenario", "v_mean", s.v_mean);
  r.get("scenario", "v_amp", s.v_amp);
  r.get("scenario", "D_amp", s.D_amp);
  r.get("scenario", "r_mean", s.r_mean);
  r.get("scenario", "r_amp", s.r_amp);
  r.get("scenario", "amplitude", s.amplitude);
  r.get("scenario", "pulse_width", s.pulse_width);
  r.get("scenario", "random_knots", s.random_knots);
  r.get("scenario", "chirp_f0", s.chirp_f0);
  r.get("scenario", "chirp_rate", s.chirp_rate);
  r.get("scenario", "multisine_tones", s.multisine_tones);

  WaterQualityParams wp = s.wq_params.value_or(WaterQualityParams{});
  r.get("waterquality", "a", wp.a);
  r.get("waterquality", "D0", wp.D0);
  r.get("waterquality", "c1", wp.c1);
  r.get("waterquality", "c2", wp.c2);
  r.get("waterquality", "k_b", wp.k_b);
  r.get("waterquality", "k_w", wp.k_w);
  r.get("waterquality", "nu", wp.nu);
  r.get("waterquality", "L", wp.L);
  r.get("waterquality", "Re_threshold", wp.Re_threshold);
  r.get("waterquality", "tau_cap", wp.tau_cap);
  s.wq_params = wp;

  WaterQualityScenario& w = s.wq;
  r.get("demand", "low", w.demand_low);
  r.get("demand", "high", w.demand_high);
  r.get("demand", "interval", w.demand_interval);
  r.get("demand", "max_attempts", w.max_attempts);
  r.get("injection", "pulse_level", w.pulse_level);
  r.get("injection", "pulse_end", w.pulse_end);
  r.get("injection", "zero_end", w.zero_end);
  r.get("injection", "step_level", w.step_level);
  r.get("injection", "noise_amplitude", w.noise_amplitude);
  r.get("injection", "noise_hold", w.noise_hold);

  r.get("oracle", "enabled", c.oracle.enabled);
  r.get("oracle", "refinement", c.oracle.refinement);
  r.get("oracle", "substeps", c.oracle.substeps);

  r.get("output", "dir", c.output.dir);
  r.get("output", "record_every", c.output.record_every);
  r.get_list("output", "profile_hours", c.output.profile_hours);

  r.get("sweep", "nodes", c.sweep.nodes);
  r.get_list("sweep", "decades", c.sweep.decades);
  r.get_list("sweep", "kinds", c.sweep.kinds);
  r.get("sweep", "record_every", c.sweep.record_every);

  r.check_unknown();

  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ValidationError("config " + msg);
  };
  need(c.grid.nodes >= 2, "grid.nodes must be >= 2");
  need(c.reduction.order >= 1, "reduction.order must be >= 1");
  need(c.reduction.tol > 0.0, "reduction.tol must be > 0");
  need(c.reduction.max_iter >= 1, "reduction.max_iter must be >= 1");
  need(c.reduction.max_restarts >= 0, "reduction.max_restarts must be >= 0");
  need(c.reduction.kappa > 0.0, "reduction.kappa must be > 0");
  need(c.reduction.target_contraction > 0.0 && c.reduction.target_contraction < 1.0,
       "reduction.target_contraction must lie in (0, 1)");
  need(s.horizon > 0.0 && s.dt > 0.0, "scenario.horizon and scenario.dt must be > 0");
  need(c.oracle.refinement >= 4, "oracle.refinement must be >= 4");
  need(c.oracle.substeps >= 4, "oracle.substeps must be >= 4");
  need(c.output.record_every >= 1, "output.record_every must be >= 1");
  for (double h : c.output.profile_hours) need(h >= 0.0, "output.profile_hours must be >= 0");
  need(c.sweep.nodes >= 2, "sweep.nodes must be >= 2");
  need(c.sweep.record_every >= 1, "sweep.record_every must be >= 1");
  for (int d : c.sweep.decades) need(d >= 0 && d <= 5, "sweep.decades must lie in 0..5");
  try {
    wp.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("config waterquality: ") + e.what());
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace adrmor
