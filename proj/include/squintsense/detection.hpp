#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <vector>

#include "squintsense/beamforming.hpp"
#include "squintsense/channel.hpp"
#include "squintsense/config.hpp"
#include "squintsense/errors.hpp"
#include "squintsense/power.hpp"

namespace squint {

/// Removes the transmitted symbol's phase from a received sample.
inline cplx matched_echo(cplx raw, cplx symbol) {
  const double mag = std::abs(symbol);
  if (!(mag > 0.0)) throw std::invalid_argument("matched_echo: zero symbol");
  return std::conj(symbol) / mag * raw;
}

struct ObservationVector {
  CVector values;
  int stage = 0;
  int symbol_count = 1;
};

struct ObservationOptions {
  bool include_noise = true;
  bool include_clutter = true;
};

/// Per-subcarrier average of T matched echoes sqrt(p_n) b^H G_n b + b^H v.
inline ObservationVector assemble_observation(const SystemConfig& cfg, const Scene& scene,
                                              const BeamformerWeights& w,
                                              const StageSensing& sensing, int stage,
                                              std::mt19937_64& rng,
                                              const ObservationOptions& opts = {}) {
  if (sensing.symbols < 1) throw std::invalid_argument("assemble_observation: T must be >= 1");
  const int n_sub = w.subcarriers();
  ObservationVector obs;
  obs.stage = stage;
  obs.symbol_count = sensing.symbols;
  obs.values.resize(n_sub);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> noise(0.0, std::sqrt(0.5 * cfg.noise_variance()));
  for (int n = 0; n < n_sub; ++n) {
    const cplx echo = std::sqrt(sensing.powers.at(n)) * echo_gain(cfg, scene, w, n, opts.include_clutter && cfg.include_clutter);
    cplx acc(0.0, 0.0);
    for (int t = 0; t < sensing.symbols; ++t) {
      const cplx symbol = std::polar(1.0, phase(rng));
      cplx raw = symbol * echo;
      if (opts.include_noise) {
        const double re = noise(rng);
        raw += cplx(re, noise(rng));
      }
      acc += matched_echo(raw, symbol);
    }
    obs.values[n] = acc / static_cast<double>(sensing.symbols);
  }
  return obs;
}

/// L candidate angles over [lo, hi] following the configured spacing rule.
inline std::vector<double> candidate_angles(const SystemConfig& cfg, double lo, double hi) {
  const int count = cfg.candidates;
  std::vector<double> out(count);
  for (int l = 0; l < count; ++l) {
    const double frac = count > 1 ? static_cast<double>(l) / (count - 1) : 0.0;
    out[l] = cfg.candidate_spacing == CandidateSpacing::squint_map ? squint_map(cfg, lo, hi, frac)
                                                                   : lo + frac * (hi - lo);
  }
  return out;
}

/// Dictionary of sensing gain patterns; column l is the noiseless observation
/// (up to a unit phasor) of a target at candidate l.
struct MeasurementMatrix {
  Eigen::MatrixXd columns;  // N x L
  Eigen::VectorXd norms;    // column 2-norms
  std::vector<double> candidates;
  BeamKind kind = BeamKind::elevation_scan;
  double theta_hat = 0.0;

  int size() const { return static_cast<int>(columns.cols()); }
};

/// Stage-0 dictionary over elevation candidates, or stage-i dictionary over
/// azimuth candidates at the beamformer's fixed elevation.
inline MeasurementMatrix build_measurement_matrix(const SystemConfig& cfg,
                                                  const BeamformerWeights& w,
                                                  const StageSensing& sensing) {
  MeasurementMatrix mtx;
  mtx.kind = w.kind;
  const bool elevation = w.kind == BeamKind::elevation_scan;
  if (!elevation && w.kind != BeamKind::azimuth_scan) {
    throw std::invalid_argument("build_measurement_matrix: needs an EAS or AAS beamformer");
  }
  mtx.theta_hat = elevation ? 0.0 : w.ps_theta;
  mtx.candidates = elevation ? candidate_angles(cfg, cfg.theta_min, cfg.theta_max)
                             : candidate_angles(cfg, cfg.phi_min, cfg.phi_max);
  const int n_sub = w.subcarriers();
  const int count = static_cast<int>(mtx.candidates.size());
  const double phi_mid = 0.5 * (cfg.phi_min + cfg.phi_max);
  mtx.columns.resize(n_sub, count);
  for (int l = 0; l < count; ++l) {
    const double theta = elevation ? mtx.candidates[l] : mtx.theta_hat;
    const double phi = elevation ? phi_mid : mtx.candidates[l];
    const double alpha = sensing_attenuation(cfg, cfg.distance(theta), cfg.target_rcs_m2());
    for (int n = 0; n < n_sub; ++n) {
      mtx.columns(n, l) = std::sqrt(sensing.powers.at(n)) * alpha * std::norm(w.gain(theta, phi, n));
    }
  }
  mtx.norms = mtx.columns.colwise().norm().transpose();
  return mtx;
}

struct MpStep {
  int index = 0;
  double correlation = 0.0;  // |<residual, c>| / ||c|| at selection
  cplx phasor{0.0, 0.0};
  double residual_norm = 0.0;  // after deflation
};

/// Selection multiplicities per candidate plus the per-iteration trace.
struct CountingVector {
  std::vector<int> counts;
  std::vector<MpStep> trace;

  int total() const {
    int s = 0;
    for (int c : counts) s += c;
    return s;
  }
};

/// Matching pursuit with unit-modulus coefficients; an index may be selected
/// more than once. `stop_ratio` > 0 ends early once ||residual|| <= stop_ratio ||obs||.
inline CountingVector modified_mp(const CVector& obs, const MeasurementMatrix& mtx, int iterations,
                                  double stop_ratio = 0.0) {
  if (iterations < 0) throw std::invalid_argument("modified_mp: negative iteration count");
  if (obs.size() != mtx.columns.rows()) {
    throw std::invalid_argument("modified_mp: observation length does not match dictionary");
  }
  CountingVector out;
  out.counts.assign(mtx.size(), 0);
  CVector residual = obs;
  const double stop = stop_ratio * obs.norm();
  for (int it = 0; it < iterations; ++it) {
    if (stop_ratio > 0.0 && residual.norm() <= stop) break;
    const Eigen::VectorXd re = mtx.columns.transpose() * residual.real();
    const Eigen::VectorXd im = mtx.columns.transpose() * residual.imag();
    int best = -1;
    double best_score = -1.0;
    for (int l = 0; l < mtx.size(); ++l) {
      if (!(mtx.norms[l] > 0.0)) {
        throw DegenerateError("modified_mp: zero-norm dictionary column " + std::to_string(l));
      }
      const double score = std::hypot(re[l], im[l]) / mtx.norms[l];
      if (score > best_score) {
        best_score = score;
        best = l;
      }
    }
    const cplx corr(re[best], im[best]);
    const double mag = std::abs(corr);
    const cplx phasor = mag > 0.0 ? corr / mag : cplx(1.0, 0.0);
    residual -= phasor * mtx.columns.col(best).cast<cplx>();
    ++out.counts[best];
    out.trace.push_back({best, best_score, phasor, residual.norm()});
  }
  return out;
}

struct ElevationEstimate {
  int candidate = 0;
  double theta = 0.0;
  int multiplicity = 0;
};

struct StageTrace {
  int stage = 0;
  std::vector<MpStep> steps;
};

struct DetectionResult {
  std::vector<ElevationEstimate> elevations;
  std::vector<std::vector<double>> azimuths;  // per AAS stage
  std::vector<GridPoint> estimates;
  PowerPlan plan;  // sensing part only
  std::vector<StageTrace> traces;
  std::vector<BeamformerWeights> stage_beams;
};

/// Hierarchical EAS -> AAS detector for one configuration. Stage-0 beamformer,
/// allocation, and dictionary are built once; AAS stages are cached per
/// elevation candidate.
class HierarchicalSensor {
 public:
  explicit HierarchicalSensor(SystemConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    eas_ = eas_beamformer(cfg_);
    eas_sensing_ = allocate_sensing(cfg_, eas_);
    eas_matrix_ = build_measurement_matrix(cfg_, eas_, eas_sensing_);
  }

  const SystemConfig& config() const { return cfg_; }
  const BeamformerWeights& eas_beam() const { return eas_; }
  const StageSensing& eas_sensing() const { return eas_sensing_; }
  const MeasurementMatrix& eas_matrix() const { return eas_matrix_; }

  struct AasStage {
    BeamformerWeights beam;
    StageSensing sensing;
    MeasurementMatrix matrix;
  };

  const AasStage& aas_stage(int candidate) {
    auto it = aas_cache_.find(candidate);
    if (it != aas_cache_.end()) return *it->second;
    if (aas_cache_.size() >= kCacheLimit) aas_cache_.clear();
    auto stage = std::make_unique<AasStage>();
    stage->beam = aas_beamformer(cfg_, eas_matrix_.candidates.at(candidate));
    stage->sensing = allocate_sensing(cfg_, stage->beam);
    stage->matrix = build_measurement_matrix(cfg_, stage->beam, stage->sensing);
    return *aas_cache_.emplace(candidate, std::move(stage)).first->second;
  }

  DetectionResult detect(const Scene& scene, int q, std::mt19937_64& rng,
                         const ObservationOptions& opts = {}) {
    DetectionResult res;
    if (q < 0) throw std::invalid_argument("detect: negative target count");
    res.plan.add_stage(eas_sensing_);
    res.stage_beams.push_back(eas_);
    if (q == 0) return res;
    const ObservationVector obs0 = assemble_observation(cfg_, scene, eas_, eas_sensing_, 0, rng, opts);
    const CountingVector omega0 = modified_mp(obs0.values, eas_matrix_, q, cfg_.mp_stop_ratio);
    res.traces.push_back({0, omega0.trace});
    for (int l = 0; l < eas_matrix_.size(); ++l) {
      if (omega0.counts[l] > 0) {
        res.elevations.push_back({l, eas_matrix_.candidates[l], omega0.counts[l]});
      }
    }
    int stage_index = 1;
    for (const auto& el : res.elevations) {
      const AasStage& st = aas_stage(el.candidate);
      res.plan.add_stage(st.sensing);
      res.stage_beams.push_back(st.beam);
      const ObservationVector obs =
          assemble_observation(cfg_, scene, st.beam, st.sensing, stage_index, rng, opts);
      const CountingVector omega = modified_mp(obs.values, st.matrix, el.multiplicity, cfg_.mp_stop_ratio);
      res.traces.push_back({stage_index, omega.trace});
      std::vector<double> az;
      for (int l = 0; l < st.matrix.size(); ++l) {
        for (int c = 0; c < omega.counts[l]; ++c) {
          az.push_back(st.matrix.candidates[l]);
          res.estimates.push_back({el.theta, st.matrix.candidates[l]});
        }
      }
      res.azimuths.push_back(std::move(az));
      ++stage_index;
    }
    return res;
  }

 private:
  static constexpr std::size_t kCacheLimit = 256;
  SystemConfig cfg_;
  BeamformerWeights eas_;
  StageSensing eas_sensing_;
  MeasurementMatrix eas_matrix_;
  std::map<int, std::unique_ptr<AasStage>> aas_cache_;
};

inline DetectionResult hierarchical_detect(const SystemConfig& cfg, const Scene& scene, int q,
                                           std::mt19937_64& rng,
                                           const ObservationOptions& opts = {}) {
  HierarchicalSensor sensor(cfg);
  return sensor.detect(scene, q, rng, opts);
}

}  // namespace squint
