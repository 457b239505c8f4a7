#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "squintsense/config.hpp"
#include "squintsense/errors.hpp"
#include "squintsense/simkit.hpp"

namespace squint {

/// Everything a CLI run needs, in user-facing units. Angles are kept in degrees
/// so that echoing and reloading reproduces the same radians bit for bit.
struct RunConfig {
  SystemConfig system;
  double theta_min_deg = 15.0;
  double theta_max_deg = 70.0;
  double phi_min_deg = 30.0;
  double phi_max_deg = 150.0;
  double user_separation_deg = 20.0;

  Method method = Method::proposed;
  std::string sweep_var = "none";
  std::vector<double> sweep_values{0.0};
  int trials = 10;
  std::uint64_t seed = 1;
  int targets = 1;
  int users = 2;
  bool include_noise = true;
  std::string output_dir = ".";

  /// SystemConfig with the degree fields applied.
  SystemConfig resolved() const {
    SystemConfig cfg = system;
    cfg.theta_min = deg_to_rad(theta_min_deg);
    cfg.theta_max = deg_to_rad(theta_max_deg);
    cfg.phi_min = deg_to_rad(phi_min_deg);
    cfg.phi_max = deg_to_rad(phi_max_deg);
    cfg.user_separation = deg_to_rad(user_separation_deg);
    return cfg;
  }

  ExperimentSpec experiment() const {
    ExperimentSpec spec;
    spec.base = resolved();
    spec.method = method;
    spec.sweep_var = sweep_var;
    spec.sweep_values = sweep_values;
    spec.trials = trials;
    spec.master_seed = seed;
    spec.targets = targets;
    spec.users = users;
    spec.include_noise = include_noise;
    return spec;
  }

  void validate() const;
  std::vector<std::string> echo() const;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string exact(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

template <class T>
T parse_number(const std::string& text, const std::string& key) {
  T value{};
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("key '" + key + "': cannot parse '" + text + "' as a number");
  }
  return value;
}

inline bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + text + "'");
}

inline std::vector<double> parse_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<double>(trim(item), key));
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

struct KeySpec {
  std::string name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline const std::vector<KeySpec>& run_config_keys() {
  static const std::vector<KeySpec> keys = [] {
    std::vector<KeySpec> k;
    auto real = [&k](std::string name, auto member) {
      k.push_back({name,
                   [name, member](RunConfig& c, const std::string& v) {
                     member(c) = parse_number<double>(v, name);
                   },
                   [member](const RunConfig& c) { return exact(member(c)); }});
    };
    auto integer = [&k](std::string name, auto member) {
      k.push_back({name,
                   [name, member](RunConfig& c, const std::string& v) {
                     member(c) = parse_number<int>(v, name);
                   },
                   [member](const RunConfig& c) {
                     return std::to_string(member(c));
                   }});
    };
    auto boolean = [&k](std::string name, auto member) {
      k.push_back({name,
                   [name, member](RunConfig& c, const std::string& v) {
                     member(c) = parse_bool(v, name);
                   },
                   [member](const RunConfig& c) {
                     return std::string(member(c) ? "true" : "false");
                   }});
    };
    real("carrier_hz", [](auto& c) -> auto& { return c.system.carrier_hz; });
    real("bandwidth_hz", [](auto& c) -> auto& { return c.system.bandwidth_hz; });
    integer("subcarriers", [](auto& c) -> auto& { return c.system.subcarriers; });
    integer("elements_h", [](auto& c) -> auto& { return c.system.elements_h; });
    integer("elements_v", [](auto& c) -> auto& { return c.system.elements_v; });
    real("bs_height_m", [](auto& c) -> auto& { return c.system.bs_height_m; });
    real("theta_min_deg", [](auto& c) -> auto& { return c.theta_min_deg; });
    real("theta_max_deg", [](auto& c) -> auto& { return c.theta_max_deg; });
    real("phi_min_deg", [](auto& c) -> auto& { return c.phi_min_deg; });
    real("phi_max_deg", [](auto& c) -> auto& { return c.phi_max_deg; });
    real("noise_psd_dbm_hz", [](auto& c) -> auto& { return c.system.noise_psd_dbm_hz; });
    real("target_rcs_dbsm", [](auto& c) -> auto& { return c.system.target_rcs_dbsm; });
    real("rician_k_db", [](auto& c) -> auto& { return c.system.rician_k_db; });
    integer("clutter_count", [](auto& c) -> auto& { return c.system.clutter_count; });
    real("clutter_rcs_dbsm", [](auto& c) -> auto& { return c.system.clutter_rcs_dbsm; });
    boolean("include_clutter", [](auto& c) -> auto& { return c.system.include_clutter; });
    real("tau_s_db", [](auto& c) -> auto& { return c.system.sensing_snr_db; });
    real("tau_c_db", [](auto& c) -> auto& { return c.system.comm_sinr_db; });
    real("sensing_budget_w", [](auto& c) -> auto& { return c.system.sensing_budget_w; });
    integer("candidates", [](auto& c) -> auto& { return c.system.candidates; });
    k.push_back({"candidate_spacing",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "squint_map") c.system.candidate_spacing = CandidateSpacing::squint_map;
                   else if (v == "uniform_angle") c.system.candidate_spacing = CandidateSpacing::uniform_angle;
                   else throw ConfigError("key 'candidate_spacing': expected squint_map or uniform_angle");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.system.candidate_spacing == CandidateSpacing::squint_map
                                          ? "squint_map"
                                          : "uniform_angle");
                 }});
    real("user_separation_deg", [](auto& c) -> auto& { return c.user_separation_deg; });
    real("mp_stop_ratio", [](auto& c) -> auto& { return c.system.mp_stop_ratio; });
    real("max_ttd_s", [](auto& c) -> auto& { return c.system.max_ttd_s; });
    k.push_back({"method",
                 [](RunConfig& c, const std::string& v) { c.method = parse_method(v); },
                 [](const RunConfig& c) { return std::string(method_name(c.method)); }});
    k.push_back({"sweep_var", [](RunConfig& c, const std::string& v) { c.sweep_var = v; },
                 [](const RunConfig& c) { return c.sweep_var; }});
    k.push_back({"sweep_values",
                 [](RunConfig& c, const std::string& v) { c.sweep_values = parse_list(v, "sweep_values"); },
                 [](const RunConfig& c) {
                   std::string out;
                   for (std::size_t i = 0; i < c.sweep_values.size(); ++i) {
                     if (i) out += ',';
                     out += exact(c.sweep_values[i]);
                   }
                   return out;
                 }});
    integer("trials", [](auto& c) -> auto& { return c.trials; });
    k.push_back({"seed",
                 [](RunConfig& c, const std::string& v) { c.seed = parse_number<std::uint64_t>(v, "seed"); },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    integer("targets", [](auto& c) -> auto& { return c.targets; });
    integer("users", [](auto& c) -> auto& { return c.users; });
    boolean("include_noise", [](auto& c) -> auto& { return c.include_noise; });
    k.push_back({"output_dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; },
                 [](const RunConfig& c) { return c.output_dir; }});
    return k;
  }();
  return keys;
}

inline const KeySpec* find_key(const std::string& name) {
  for (const auto& k : run_config_keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

}  // namespace detail

inline void RunConfig::validate() const {
  auto ordered = [](const char* lo_key, double lo, const char* hi_key, double hi) {
    if (!(lo < hi)) {
      throw ConfigError(std::string(lo_key) + " (" + detail::exact(lo) + ") must be smaller than " +
                        hi_key + " (" + detail::exact(hi) + ")");
    }
  };
  ordered("theta_min_deg", theta_min_deg, "theta_max_deg", theta_max_deg);
  ordered("phi_min_deg", phi_min_deg, "phi_max_deg", phi_max_deg);
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (targets < 0) throw ConfigError("targets must be non-negative");
  if (users < 0) throw ConfigError("users must be non-negative");
  resolved().validate();
  experiment().validate();
  for (double v : sweep_values) {
    SystemConfig cfg = resolved();
    int q = targets;
    int k = users;
    apply_sweep(cfg, q, k, sweep_var, v);
    cfg.validate();
    if (q < 0 || k < 0) throw ConfigError("sweep value " + detail::exact(v) + " gives a negative count");
  }
}

/// Effective configuration as key=value lines, loadable by parse_run_config.
inline std::vector<std::string> RunConfig::echo() const {
  std::vector<std::string> out;
  for (const auto& k : detail::run_config_keys()) out.push_back(k.name + "=" + k.get(*this));
  return out;
}

/// Parses flat `key = value` lines; `#` starts a comment. Unknown keys and bad
/// values are reported with their line number.
inline RunConfig parse_run_config(std::istream& in) {
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = detail::trim(body.substr(0, eq));
    const std::string value = detail::trim(body.substr(eq + 1));
    const detail::KeySpec* spec = detail::find_key(key);
    if (!spec) {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    try {
      spec->set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  return parse_run_config(in);
}

/// Provenance lines for CSV headers: version, seed, and the config echo.
inline std::vector<std::string> provenance_lines(const RunConfig& cfg) {
  std::vector<std::string> out;
  out.push_back(std::string("squintsense ") + kVersion);
  out.push_back("master_seed=" + std::to_string(cfg.seed));
  for (auto& line : cfg.echo()) out.push_back("config " + line);
  return out;
}

}  // namespace squint
