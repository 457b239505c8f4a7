// Command-line front end: simulate | detect | power | beampattern.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "squintsense/beamforming.hpp"
#include "squintsense/detection.hpp"
#include "squintsense/run_config.hpp"
#include "squintsense/simkit.hpp"

namespace fs = std::filesystem;
using namespace squint;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
};

RunConfig load(const CommonOptions& opts) {
  std::stringstream text;
  if (!opts.config_path.empty()) {
    std::ifstream in(opts.config_path);
    if (!in) throw ConfigError("cannot read config file '" + opts.config_path + "'");
    text << in.rdbuf() << '\n';
  }
  for (const auto& o : opts.overrides) text << o << '\n';
  return parse_run_config(text);
}

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("-c,--config", opts.config_path, "key = value config file");
  cmd->add_option("--set", opts.overrides, "override one config key (key=value), repeatable");
}

fs::path output_dir(const RunConfig& cfg, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("SQUINTSENSE_OUTPUT_DIR"); env && *env) return env;
  return cfg.output_dir;
}

int run_simulate(const CommonOptions& opts, const std::string& out_flag) {
  const RunConfig cfg = load(opts);
  const auto prov = provenance_lines(cfg);
  const ExperimentResult res = run_experiment(cfg.experiment());
  const fs::path dir = output_dir(cfg, out_flag);
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "aggregate.csv");
    write_aggregate_csv(os, res.aggregate, prov);
  }
  {
    std::ofstream os(dir / "trials.csv");
    write_trials_csv(os, res.records, cfg.sweep_var, prov);
  }
  {
    std::ofstream os(dir / "effective_config.txt");
    for (const auto& line : cfg.echo()) os << line << '\n';
  }
  write_aggregate_csv(std::cout, res.aggregate, prov);
  return kExitOk;
}

int run_detect(const CommonOptions& opts, int trial) {
  const RunConfig cfg = load(opts);
  const SystemConfig sys = cfg.resolved();
  const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(trial));
  const Scene scene = generate_scene(sys, cfg.targets, cfg.users, seed);
  HierarchicalSensor sensor(sys);
  std::mt19937_64 rng(derive_seed(seed, 100));
  ObservationOptions obs_opts;
  obs_opts.include_noise = cfg.include_noise;
  const DetectionResult det = sensor.detect(scene, cfg.targets, rng, obs_opts);

  for (const auto& line : provenance_lines(cfg)) std::cout << "# " << line << '\n';
  std::cout << "# trial=" << trial << " seed=" << seed << '\n';
  for (const auto& t : scene.targets) {
    std::cout << "# target theta_deg=" << rad_to_deg(t.theta) << " phi_deg=" << rad_to_deg(t.phi)
              << '\n';
  }
  for (const auto& e : det.estimates) {
    std::cout << "# estimate theta_deg=" << rad_to_deg(e.theta) << " phi_deg=" << rad_to_deg(e.phi)
              << '\n';
  }
  std::cout << "stage,iteration,candidate_index,candidate_deg,correlation,residual_norm\n";
  for (const auto& tr : det.traces) {
    const MeasurementMatrix& mtx =
        tr.stage == 0 ? sensor.eas_matrix()
                      : sensor.aas_stage(det.elevations[tr.stage - 1].candidate).matrix;
    int it = 0;
    for (const auto& s : tr.steps) {
      std::cout << tr.stage << ',' << it++ << ',' << s.index << ','
                << rad_to_deg(mtx.candidates[s.index]) << ',' << s.correlation << ','
                << s.residual_norm << '\n';
    }
  }
  return kExitOk;
}

int run_power(const CommonOptions& opts, int trial) {
  const RunConfig cfg = load(opts);
  const SystemConfig sys = cfg.resolved();
  const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(trial));
  const Scene scene = generate_scene(sys, cfg.targets, cfg.users, seed);
  HierarchicalSensor sensor(sys);
  std::mt19937_64 rng(derive_seed(seed, 100));
  ObservationOptions obs_opts;
  obs_opts.include_noise = cfg.include_noise;
  DetectionResult det = sensor.detect(scene, cfg.targets, rng, obs_opts);
  const auto beams = comm_beams(sys, scene.users);
  for (int i = 0; i < det.plan.stages(); ++i) {
    const SinrContext ctx =
        sinr_context(sys, scene.users, beams, det.stage_beams[i], det.plan.sensing_powers[i]);
    StageComm comm = allocate_stage_comm(ctx, sys.comm_sinr());
    det.plan.effective_tau_c.push_back(comm.tau_c);
    det.plan.comm_powers.push_back(std::move(comm.powers));
  }

  for (const auto& line : provenance_lines(cfg)) std::cout << "# " << line << '\n';
  std::cout << "record,stage,user,subcarrier,value\n";
  for (int i = 0; i < det.plan.stages(); ++i) {
    std::cout << "symbols," << i << ",," << ',' << det.plan.symbol_counts[i] << '\n';
    std::cout << "tau_c_db," << i << ",," << ',' << linear_to_db(det.plan.effective_tau_c[i])
              << '\n';
    for (int n = 0; n < sys.subcarriers; ++n) {
      std::cout << "sensing_power," << i << ",," << n + 1 << ',' << det.plan.sensing_powers[i][n]
                << '\n';
    }
    const Eigen::MatrixXd& pc = det.plan.comm_powers[i];
    for (Eigen::Index k = 0; k < pc.rows(); ++k) {
      for (Eigen::Index n = 0; n < pc.cols(); ++n) {
        std::cout << "comm_power," << i << ',' << k + 1 << ',' << n + 1 << ',' << pc(k, n) << '\n';
      }
    }
  }
  return kExitOk;
}

struct PatternOptions {
  std::string stage = "aas";
  double theta_hat_deg = 45.0;
  double phi_deg = 90.0;
  std::vector<int> subcarriers;
  int points = 2001;
};

int run_beampattern(const CommonOptions& opts, const PatternOptions& p) {
  const RunConfig cfg = load(opts);
  const SystemConfig sys = cfg.resolved();
  if (p.points < 2) throw ConfigError("--points must be at least 2");
  BeamformerWeights w;
  bool sweep_elevation = false;
  double lo = 0.0;
  double hi = 0.0;
  if (p.stage == "eas") {
    w = eas_beamformer(sys);
    sweep_elevation = true;
    lo = sys.theta_min;
    hi = sys.theta_max;
  } else if (p.stage == "aas") {
    w = aas_beamformer(sys, deg_to_rad(p.theta_hat_deg));
    lo = sys.phi_min;
    hi = sys.phi_max;
  } else if (p.stage == "comm") {
    w = comm_beamformer(sys, deg_to_rad(p.theta_hat_deg), deg_to_rad(p.phi_deg));
    lo = sys.phi_min;
    hi = sys.phi_max;
  } else {
    throw ConfigError("--stage must be eas, aas, or comm");
  }
  std::vector<int> subs = p.subcarriers;
  if (subs.empty()) subs = {1, (sys.subcarriers + 1) / 2, sys.subcarriers};
  for (int s : subs) {
    if (s < 1 || s > sys.subcarriers) {
      throw ConfigError("--subcarriers entries must lie in 1.." + std::to_string(sys.subcarriers));
    }
  }
  const double phi_mid = 0.5 * (sys.phi_min + sys.phi_max);
  const double theta_fixed = deg_to_rad(p.theta_hat_deg);

  for (const auto& line : provenance_lines(cfg)) std::cout << "# " << line << '\n';
  std::cout << "# stage=" << p.stage << " sweep=" << (sweep_elevation ? "elevation" : "azimuth")
            << '\n';
  std::cout << "subcarrier,angle_deg,gain_abs,gain_db\n";
  for (int s : subs) {
    for (int i = 0; i < p.points; ++i) {
      const double a = lo + (hi - lo) * i / (p.points - 1);
      const double theta = sweep_elevation ? a : theta_fixed;
      const double phi = sweep_elevation ? phi_mid : a;
      // stage 0: vertical factor only; the horizontal factor is the flat constant
      const double g = sweep_elevation ? std::abs(w.vertical_gain(theta, s - 1))
                                       : std::abs(w.gain(theta, phi, s - 1));
      std::cout << s << ',' << rad_to_deg(a) << ',' << g << ','
                << 20.0 * std::log10(std::max(g, 1e-300)) << '\n';
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Beam-squint hierarchical angle sensing simulator"};
  app.require_subcommand(1);

  CommonOptions sim_opts, det_opts, pow_opts, pat_opts;
  std::string out_flag;
  int det_trial = 0;
  int pow_trial = 0;
  PatternOptions pattern;

  auto* sim = app.add_subcommand("simulate", "Monte Carlo sweep; writes aggregate and per-trial CSV");
  add_common(sim, sim_opts);
  sim->add_option("-o,--output-dir", out_flag, "output directory (overrides config and env)");

  auto* det = app.add_subcommand("detect", "one seeded trial with the matching-pursuit trace");
  add_common(det, det_opts);
  det->add_option("--trial", det_trial, "trial index under the master seed");

  auto* pow = app.add_subcommand("power", "power plan (symbol counts, sensing and user powers)");
  add_common(pow, pow_opts);
  pow->add_option("--trial", pow_trial, "trial index under the master seed");

  auto* pat = app.add_subcommand("beampattern", "gain-vs-angle CSV per subcarrier");
  add_common(pat, pat_opts);
  pat->add_option("--stage", pattern.stage, "eas | aas | comm");
  pat->add_option("--theta-hat", pattern.theta_hat_deg, "fixed elevation in degrees (aas, comm)");
  pat->add_option("--phi", pattern.phi_deg, "user azimuth in degrees (comm)");
  pat->add_option("--subcarriers", pattern.subcarriers, "1-based subcarrier list")->delimiter(',');
  pat->add_option("--points", pattern.points, "sweep points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  try {
    if (*sim) return run_simulate(sim_opts, out_flag);
    if (*det) return run_detect(det_opts, det_trial);
    if (*pow) return run_power(pow_opts, pow_trial);
    if (*pat) return run_beampattern(pat_opts, pattern);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const DegenerateError& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
  std::cerr << app.help();
  return kExitConfig;
}
