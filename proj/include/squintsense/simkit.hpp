#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "squintsense/beamforming.hpp"
#include "squintsense/channel.hpp"
#include "squintsense/config.hpp"
#include "squintsense/detection.hpp"
#include "squintsense/power.hpp"

namespace squint {

inline constexpr const char* kVersion = "0.1.0";

/// Mean ground-plane distance between truth and estimates after sorting both by
/// (elevation, azimuth) and pairing positionally.
inline double distance_error(double bs_height_m, std::vector<GridPoint> truth,
                             std::vector<GridPoint> estimates) {
  if (truth.size() != estimates.size()) {
    throw std::invalid_argument("distance_error: " + std::to_string(truth.size()) +
                                " truths vs " + std::to_string(estimates.size()) + " estimates");
  }
  if (truth.empty()) return 0.0;
  auto order = [](const GridPoint& a, const GridPoint& b) {
    return a.theta < b.theta || (a.theta == b.theta && a.phi < b.phi);
  };
  std::sort(truth.begin(), truth.end(), order);
  std::sort(estimates.begin(), estimates.end(), order);
  double sum = 0.0;
  for (std::size_t q = 0; q < truth.size(); ++q) {
    sum += ground_distance(bs_height_m, truth[q], estimates[q]);
  }
  return sum / static_cast<double>(truth.size());
}

/// Communication side of one stage: SINR tables and the tight power solution.
struct StageLink {
  SinrContext ctx;
  StageComm comm;
};

inline double stage_rate(const StageLink& link) {
  double rate = 0.0;
  for (int n = 0; n < link.ctx.subcarriers(); ++n) {
    for (int k = 0; k < link.ctx.users(); ++k) {
      rate += std::log2(1.0 + achieved_sinr(link.ctx, link.comm.powers, k, n));
    }
  }
  return rate;
}

/// (1 / (I + 1)) sum_i sum_k sum_n log2(1 + SINR_{i,k,n}).
inline double sum_rate(const std::vector<StageLink>& links) {
  if (links.empty()) return 0.0;
  double rate = 0.0;
  for (const auto& link : links) rate += stage_rate(link);
  return rate / static_cast<double>(links.size());
}

struct TransmitMetrics {
  double total_sensing = 0.0;  // W * symbols
  double avg_transmit = 0.0;   // W * symbols per stage
};

inline TransmitMetrics transmit_power_metrics(const PowerPlan& plan) {
  TransmitMetrics m;
  const int stages = plan.stages();
  if (stages == 0) return m;
  for (int i = 0; i < stages; ++i) {
    double sensing = 0.0;
    for (double p : plan.sensing_powers[i]) sensing += p;
    double comm = 0.0;
    if (i < static_cast<int>(plan.comm_powers.size())) comm = plan.comm_powers[i].sum();
    m.total_sensing += plan.symbol_counts[i] * sensing;
    m.avg_transmit += plan.symbol_counts[i] * (sensing + comm);
  }
  m.avg_transmit /= stages;
  return m;
}

inline std::vector<BeamformerWeights> comm_beams(const SystemConfig& cfg,
                                                 const std::vector<User>& users) {
  std::vector<BeamformerWeights> out;
  for (const auto& u : users) out.push_back(comm_beamformer(cfg, u.theta, u.phi));
  return out;
}

enum class Method { proposed, exhaustive, azimuth_only };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::proposed: return "proposed";
    case Method::exhaustive: return "exhaustive";
    case Method::azimuth_only: return "azimuth_only";
  }
  return "unknown";
}

inline Method parse_method(const std::string& s) {
  if (s == "proposed") return Method::proposed;
  if (s == "exhaustive") return Method::exhaustive;
  if (s == "azimuth_only") return Method::azimuth_only;
  throw ConfigError("unknown method '" + s + "' (expected proposed, exhaustive, azimuth_only)");
}

struct TrialRecord {
  std::uint64_t seed = 0;
  Method method = Method::proposed;
  int targets = 0;
  int users = 0;
  bool ok = true;
  std::string failure;
  double distance_error = 0.0;
  double grid_bound = 0.0;
  double total_sensing_energy = 0.0;
  double avg_transmit_power = 0.0;
  double sum_rate = 0.0;
  double energy_efficiency = 0.0;
  int stage_count = 0;
  std::vector<int> symbol_counts;
  double min_tau_c = 0.0;
};

/// Mean distance from each true target to the nearest N x N subcarrier-grid point.
inline double grid_bound(const SystemConfig& cfg, const std::vector<GridPoint>& truth) {
  if (truth.empty()) return 0.0;
  const auto el = eas_elevation_grid(cfg);
  const auto az = aas_azimuth_grid(cfg);
  double sum = 0.0;
  for (const auto& t : truth) {
    double best = std::numeric_limits<double>::infinity();
    for (double th : el) {
      for (double ph : az) best = std::min(best, ground_distance(cfg.bs_height_m, t, {th, ph}));
    }
    sum += best;
  }
  return sum / static_cast<double>(truth.size());
}

inline std::vector<GridPoint> target_points(const Scene& scene) {
  std::vector<GridPoint> out;
  for (const auto& t : scene.targets) out.push_back({t.theta, t.phi});
  return out;
}

namespace detail {

/// Adds one stage's communication allocation to the plan and rate tally.
class LinkAccumulator {
 public:
  LinkAccumulator(const SystemConfig& cfg, const Scene& scene)
      : cfg_(cfg), scene_(scene), beams_(comm_beams(cfg, scene.users)) {}

  void add(PowerPlan& plan, const BeamformerWeights& sensing_beam,
           const std::vector<double>& sensing_powers) {
    StageLink link;
    link.ctx = sinr_context(cfg_, scene_.users, beams_, sensing_beam, sensing_powers);
    link.comm = allocate_stage_comm(link.ctx, cfg_.comm_sinr());
    rate_ += stage_rate(link);
    ++stages_;
    min_tau_ = std::min(min_tau_, link.comm.tau_c);
    plan.effective_tau_c.push_back(link.comm.tau_c);
    plan.comm_powers.push_back(std::move(link.comm.powers));
  }

  double sum_rate() const { return stages_ ? rate_ / stages_ : 0.0; }
  double min_tau_c() const { return stages_ ? min_tau_ : cfg_.comm_sinr(); }

 private:
  const SystemConfig& cfg_;
  const Scene& scene_;
  std::vector<BeamformerWeights> beams_;
  double rate_ = 0.0;
  int stages_ = 0;
  double min_tau_ = std::numeric_limits<double>::infinity();
};

inline void finish_record(TrialRecord& rec, const SystemConfig& cfg, const Scene& scene,
                          const PowerPlan& plan, const std::vector<GridPoint>& estimates,
                          const LinkAccumulator& links) {
  const auto truth = target_points(scene);
  rec.distance_error = distance_error(cfg.bs_height_m, truth, estimates);
  rec.grid_bound = grid_bound(cfg, truth);
  const TransmitMetrics tm = transmit_power_metrics(plan);
  rec.total_sensing_energy = tm.total_sensing;
  rec.avg_transmit_power = tm.avg_transmit;
  rec.sum_rate = links.sum_rate();
  rec.energy_efficiency = tm.avg_transmit > 0.0 ? rec.sum_rate / tm.avg_transmit : 0.0;
  rec.stage_count = plan.stages();
  rec.symbol_counts = plan.symbol_counts;
  rec.min_tau_c = links.min_tau_c();
}

/// Indices of the q largest scores, ties broken by lower index.
inline std::vector<int> top_indices(const std::vector<double>& scores, int q) {
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  const int take = std::min<int>(q, static_cast<int>(idx.size()));
  std::partial_sort(idx.begin(), idx.begin() + take, idx.end(), [&](int a, int b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  });
  idx.resize(take);
  return idx;
}

}  // namespace detail

inline TrialRecord run_proposed_trial(HierarchicalSensor& sensor, const Scene& scene,
                                      std::mt19937_64& rng, const ObservationOptions& opts = {}) {
  const SystemConfig& cfg = sensor.config();
  TrialRecord rec;
  rec.seed = scene.rng_seed;
  rec.method = Method::proposed;
  rec.targets = static_cast<int>(scene.targets.size());
  rec.users = static_cast<int>(scene.users.size());
  DetectionResult det = sensor.detect(scene, rec.targets, rng, opts);
  detail::LinkAccumulator links(cfg, scene);
  for (int i = 0; i < det.plan.stages(); ++i) {
    links.add(det.plan, det.stage_beams[i], det.plan.sensing_powers[i]);
  }
  detail::finish_record(rec, cfg, scene, det.plan, det.estimates, links);
  return rec;
}

/// One squint-compensated pencil beam per (elevation, azimuth) grid cell, N^2
/// single-symbol scans; the Q cells with the largest echo per unit
/// transmit amplitude are reported.
inline TrialRecord run_exhaustive_baseline(const SystemConfig& cfg, const Scene& scene,
                                           std::mt19937_64& rng,
                                           const ObservationOptions& opts = {}) {
  TrialRecord rec;
  rec.seed = scene.rng_seed;
  rec.method = Method::exhaustive;
  rec.targets = static_cast<int>(scene.targets.size());
  rec.users = static_cast<int>(scene.users.size());
  const auto el = eas_elevation_grid(cfg);
  const auto az = aas_azimuth_grid(cfg);
  PowerPlan plan;
  detail::LinkAccumulator links(cfg, scene);
  std::vector<double> scores;
  std::vector<GridPoint> cells;
  for (double th : el) {
    for (double ph : az) {
      BeamformerWeights beam = comm_beamformer(cfg, th, ph);
      beam.kind = BeamKind::pencil_scan;
      const StageSensing sensing = single_symbol_sensing(cfg, beam);
      const ObservationVector obs =
          assemble_observation(cfg, scene, beam, sensing, plan.stages(), rng, opts);
      // echo per unit transmit amplitude: alpha * mean |g|^2, largest at the target's cell
      cplx coherent(0.0, 0.0);
      double norm2 = 0.0;
      for (int n = 0; n < cfg.subcarriers; ++n) {
        const double c = std::sqrt(sensing.powers[n]);
        coherent += c * obs.values[n];
        norm2 += c * c;
      }
      scores.push_back(std::abs(coherent) / norm2);
      cells.push_back({th, ph});
      plan.add_stage(sensing);
      links.add(plan, beam, sensing.powers);
    }
  }
  std::vector<GridPoint> estimates;
  for (int idx : detail::top_indices(scores, rec.targets)) estimates.push_back(cells[idx]);
  detail::finish_record(rec, cfg, scene, plan, estimates, links);
  return rec;
}

/// Azimuth-only scan beam for symbol m: stage-0 vertical squint across the
/// elevation grid, horizontal weights pointed at (elevation_n, azimuth) on
/// every subcarrier n.
inline BeamformerWeights azimuth_only_beam(const SystemConfig& cfg, double azimuth) {
  BeamformerWeights w = eas_beamformer(cfg);
  w.kind = BeamKind::azimuth_only_scan;
  w.horizontal_model.reset();
  w.ps_phi = azimuth;
  w.horizontal.clear();
  w.design_points.clear();
  const auto el = eas_elevation_grid(cfg);
  for (int n = 0; n < cfg.subcarriers; ++n) {
    w.horizontal.push_back(
        horizontal_steering(el[n], azimuth, w.offsets[n], cfg.carrier_hz, cfg.elements_h).conjugate());
    w.design_points.push_back({el[n], azimuth});
  }
  return w;
}

/// N single-symbol scans over the azimuth grid; each symbol's subcarriers cover
/// the elevation grid. The Q largest entries of the N x N map of echo
/// per unit transmit amplitude are reported.
inline TrialRecord run_azimuth_only_baseline(const SystemConfig& cfg, const Scene& scene,
                                             std::mt19937_64& rng,
                                             const ObservationOptions& opts = {}) {
  TrialRecord rec;
  rec.seed = scene.rng_seed;
  rec.method = Method::azimuth_only;
  rec.targets = static_cast<int>(scene.targets.size());
  rec.users = static_cast<int>(scene.users.size());
  const auto el = eas_elevation_grid(cfg);
  const auto az = aas_azimuth_grid(cfg);
  PowerPlan plan;
  detail::LinkAccumulator links(cfg, scene);
  std::vector<double> scores;
  std::vector<GridPoint> cells;
  for (double ph : az) {
    const BeamformerWeights beam = azimuth_only_beam(cfg, ph);
    const StageSensing sensing = single_symbol_sensing(cfg, beam);
    const ObservationVector obs =
        assemble_observation(cfg, scene, beam, sensing, plan.stages(), rng, opts);
    for (int n = 0; n < cfg.subcarriers; ++n) {
      scores.push_back(std::abs(obs.values[n]) / std::sqrt(sensing.powers[n]));
      cells.push_back({el[n], ph});
    }
    plan.add_stage(sensing);
    links.add(plan, beam, sensing.powers);
  }
  std::vector<GridPoint> estimates;
  for (int idx : detail::top_indices(scores, rec.targets)) estimates.push_back(cells[idx]);
  detail::finish_record(rec, cfg, scene, plan, estimates, links);
  return rec;
}

/// Applies one sweep point to the configuration and the scene counts.
inline void apply_sweep(SystemConfig& cfg, int& q, int& k, const std::string& var, double value) {
  if (var == "tau_s_db") cfg.sensing_snr_db = value;
  else if (var == "tau_c_db") cfg.comm_sinr_db = value;
  else if (var == "L") cfg.candidates = static_cast<int>(value);
  else if (var == "N") cfg.subcarriers = static_cast<int>(value);
  else if (var == "K") k = static_cast<int>(value);
  else if (var == "Q") q = static_cast<int>(value);
  else if (var == "P_tot") cfg.sensing_budget_w = value;
  else if (var == "none") {}
  else throw ConfigError("unknown sweep variable '" + var + "'");
}

struct ExperimentSpec {
  SystemConfig base;
  Method method = Method::proposed;
  std::string sweep_var = "none";
  std::vector<double> sweep_values{0.0};
  int trials = 1;
  std::uint64_t master_seed = 1;
  int targets = 1;
  int users = 0;
  bool include_noise = true;

  void validate() const {
    if (trials < 1) throw ConfigError("trials must be at least 1");
    if (sweep_values.empty()) throw ConfigError("sweep needs at least one value");
    for (std::size_t i = 0; i < sweep_values.size(); ++i) {
      if (!std::isfinite(sweep_values[i])) throw ConfigError("sweep values must be finite");
      if (i > 0 && sweep_values[i] < sweep_values[i - 1]) {
        throw ConfigError("sweep values must be sorted ascending");
      }
    }
  }
};

struct AggregateRow {
  std::string sweep_var;
  double sweep_value = 0.0;
  Method method = Method::proposed;
  double mean_distance_error = 0.0;
  double stderr_distance = 0.0;
  double mean_total_sensing_energy = 0.0;
  double mean_avg_transmit_power = 0.0;
  double mean_sum_rate = 0.0;
  double mean_ee = 0.0;
  double mean_grid_bound = 0.0;
  int trials_ok = 0;
  int trials_failed = 0;
};

struct SweepRecord {
  double sweep_value = 0.0;
  int trial = 0;
  TrialRecord record;
};

struct ExperimentResult {
  std::vector<SweepRecord> records;
  std::vector<AggregateRow> aggregate;
};

inline AggregateRow aggregate_records(const std::vector<const TrialRecord*>& recs) {
  AggregateRow row;
  std::vector<double> errors;
  for (const TrialRecord* r : recs) {
    if (!r->ok) {
      ++row.trials_failed;
      continue;
    }
    ++row.trials_ok;
    errors.push_back(r->distance_error);
    row.mean_total_sensing_energy += r->total_sensing_energy;
    row.mean_avg_transmit_power += r->avg_transmit_power;
    row.mean_sum_rate += r->sum_rate;
    row.mean_ee += r->energy_efficiency;
    row.mean_grid_bound += r->grid_bound;
  }
  if (row.trials_ok > 0) {
    const double n = row.trials_ok;
    row.mean_total_sensing_energy /= n;
    row.mean_avg_transmit_power /= n;
    row.mean_sum_rate /= n;
    row.mean_ee /= n;
    row.mean_grid_bound /= n;
    row.mean_distance_error = std::accumulate(errors.begin(), errors.end(), 0.0) / n;
    if (row.trials_ok > 1) {
      double ss = 0.0;
      for (double e : errors) ss += (e - row.mean_distance_error) * (e - row.mean_distance_error);
      row.stderr_distance = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
  }
  return row;
}

/// Runs one trial of `method` on the scene drawn from `seed`.
inline TrialRecord run_trial(Method method, const SystemConfig& cfg, HierarchicalSensor* sensor,
                             int q, int k, std::uint64_t seed, bool include_noise) {
  TrialRecord rec;
  rec.seed = seed;
  rec.method = method;
  rec.targets = q;
  rec.users = k;
  try {
    const Scene scene = generate_scene(cfg, q, k, seed);
    std::mt19937_64 rng(derive_seed(seed, 100));
    ObservationOptions opts;
    opts.include_noise = include_noise;
    switch (method) {
      case Method::proposed: rec = run_proposed_trial(*sensor, scene, rng, opts); break;
      case Method::exhaustive: rec = run_exhaustive_baseline(cfg, scene, rng, opts); break;
      case Method::azimuth_only: rec = run_azimuth_only_baseline(cfg, scene, rng, opts); break;
    }
  } catch (const InfeasibleError& e) {
    rec.ok = false;
    rec.failure = e.what();
  } catch (const DegenerateError& e) {
    rec.ok = false;
    rec.failure = e.what();
  }
  return rec;
}

/// Monte Carlo sweep. Trial t uses the same seed at every sweep value, so the
/// sweep points see matched scene and noise ensembles.
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentResult out;
  for (double value : spec.sweep_values) {
    SystemConfig cfg = spec.base;
    int q = spec.targets;
    int k = spec.users;
    apply_sweep(cfg, q, k, spec.sweep_var, value);
    cfg.validate();
    std::unique_ptr<HierarchicalSensor> sensor;
    if (spec.method == Method::proposed) sensor = std::make_unique<HierarchicalSensor>(cfg);
    std::vector<const TrialRecord*> rows;
    const std::size_t first = out.records.size();
    for (int t = 0; t < spec.trials; ++t) {
      const std::uint64_t seed = derive_seed(spec.master_seed, static_cast<std::uint64_t>(t));
      out.records.push_back(
          {value, t, run_trial(spec.method, cfg, sensor.get(), q, k, seed, spec.include_noise)});
    }
    for (std::size_t i = first; i < out.records.size(); ++i) rows.push_back(&out.records[i].record);
    AggregateRow row = aggregate_records(rows);
    row.sweep_var = spec.sweep_var;
    row.sweep_value = value;
    row.method = spec.method;
    out.aggregate.push_back(row);
  }
  return out;
}

namespace detail {

inline std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

inline void write_provenance(std::ostream& os, const std::vector<std::string>& provenance) {
  for (const auto& line : provenance) os << "# " << line << '\n';
}

}  // namespace detail

inline void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRow>& rows,
                                const std::vector<std::string>& provenance = {}) {
  detail::write_provenance(os, provenance);
  os << "sweep_var,sweep_value,method,mean_distance_error_m,stderr_m,mean_total_sensing_energy,"
        "mean_avg_transmit_power,mean_sum_rate,mean_ee,trials_ok,trials_failed\n";
  using detail::fmt_num;
  for (const auto& r : rows) {
    os << r.sweep_var << ',' << fmt_num(r.sweep_value) << ',' << method_name(r.method) << ','
       << fmt_num(r.mean_distance_error) << ',' << fmt_num(r.stderr_distance) << ','
       << fmt_num(r.mean_total_sensing_energy) << ',' << fmt_num(r.mean_avg_transmit_power) << ','
       << fmt_num(r.mean_sum_rate) << ',' << fmt_num(r.mean_ee) << ',' << r.trials_ok << ','
       << r.trials_failed << '\n';
  }
}

inline void write_trials_csv(std::ostream& os, const std::vector<SweepRecord>& records,
                             const std::string& sweep_var,
                             const std::vector<std::string>& provenance = {}) {
  detail::write_provenance(os, provenance);
  os << "sweep_var,sweep_value,trial,seed,method,targets,users,ok,distance_error_m,grid_bound_m,"
        "total_sensing_energy,avg_transmit_power,sum_rate,energy_efficiency,stage_count,"
        "symbol_counts,min_tau_c_db,failure\n";
  using detail::fmt_num;
  for (const auto& s : records) {
    const TrialRecord& r = s.record;
    std::string counts;
    for (std::size_t i = 0; i < r.symbol_counts.size(); ++i) {
      if (i) counts += ';';
      counts += std::to_string(r.symbol_counts[i]);
    }
    std::string failure = r.failure;
    std::replace(failure.begin(), failure.end(), ',', ';');
    os << sweep_var << ',' << fmt_num(s.sweep_value) << ',' << s.trial << ',' << r.seed << ','
       << method_name(r.method) << ',' << r.targets << ',' << r.users << ',' << (r.ok ? 1 : 0)
       << ',' << fmt_num(r.distance_error) << ',' << fmt_num(r.grid_bound) << ','
       << fmt_num(r.total_sensing_energy) << ',' << fmt_num(r.avg_transmit_power) << ','
       << fmt_num(r.sum_rate) << ',' << fmt_num(r.energy_efficiency) << ',' << r.stage_count
       << ',' << counts << ',' << fmt_num(r.ok ? linear_to_db(r.min_tau_c) : 0.0) << ','
       << failure << '\n';
  }
}

}  // namespace squint
