#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "squintsense/beamforming.hpp"
#include "squintsense/channel.hpp"
#include "squintsense/config.hpp"
#include "squintsense/errors.hpp"

namespace squint {

/// |b^H G^los b|^2 for a hypothetical target with the configured RCS sitting on
/// subcarrier n's design point.
inline double grid_echo_strength(const SystemConfig& cfg, const BeamformerWeights& w, int n) {
  const GridPoint& dp = w.design_points.at(n);
  const double alpha = sensing_attenuation(cfg, cfg.distance(dp.theta), cfg.target_rcs_m2());
  const double g = std::norm(w.gain(dp.theta, dp.phi, n));
  return alpha * alpha * g * g;
}

struct StageSensing {
  int symbols = 1;
  std::vector<double> powers;  // p^s_n, W

  double power_sum() const {
    double s = 0.0;
    for (double p : powers) s += p;
    return s;
  }
  double energy() const { return symbols * power_sum(); }
};

/// Minimal symbol count T and SNR-tight powers p_n = tau sigma^2 / (T strength_n).
inline StageSensing allocate_sensing(const SystemConfig& cfg, const BeamformerWeights& w) {
  const double base = cfg.sensing_snr() * cfg.noise_variance();
  std::vector<double> need(cfg.subcarriers);
  double total = 0.0;
  for (int n = 0; n < cfg.subcarriers; ++n) {
    const double s = grid_echo_strength(cfg, w, n);
    if (!(s > 0.0)) {
      throw InfeasibleError("allocate_sensing: zero echo strength on subcarrier " +
                            std::to_string(n));
    }
    need[n] = base / s;
    total += need[n];
  }
  StageSensing out;
  out.symbols = std::max(1, static_cast<int>(std::ceil(total / cfg.sensing_budget_w)));
  out.powers.resize(cfg.subcarriers);
  for (int n = 0; n < cfg.subcarriers; ++n) out.powers[n] = need[n] / out.symbols;
  return out;
}

/// Single-symbol SNR-tight powers, ignoring the per-symbol budget (scan baselines).
inline StageSensing single_symbol_sensing(const SystemConfig& cfg, const BeamformerWeights& w) {
  const double base = cfg.sensing_snr() * cfg.noise_variance();
  StageSensing out;
  out.symbols = 1;
  for (int n = 0; n < cfg.subcarriers; ++n) {
    const double s = grid_echo_strength(cfg, w, n);
    if (!(s > 0.0)) throw InfeasibleError("single_symbol_sensing: zero echo strength");
    out.powers.push_back(base / s);
  }
  return out;
}

/// Gain tables for one stage: chi[n](k, l) = |h_n(user k) w_{l,n}|^2 and
/// effective_noise(k, n) = |h_n(user k) b_n|^2 p^s_n + sigma_k^2.
struct SinrContext {
  std::vector<Eigen::MatrixXd> chi;
  Eigen::MatrixXd effective_noise;

  int users() const { return static_cast<int>(effective_noise.rows()); }
  int subcarriers() const { return static_cast<int>(chi.size()); }
};

inline SinrContext sinr_context(const SystemConfig& cfg, const std::vector<User>& users,
                                const std::vector<BeamformerWeights>& comm_weights,
                                const BeamformerWeights& sensing_weights,
                                const std::vector<double>& sensing_powers) {
  const int k_count = static_cast<int>(users.size());
  if (static_cast<int>(comm_weights.size()) != k_count) {
    throw std::invalid_argument("sinr_context: one communication beam per user required");
  }
  SinrContext ctx;
  ctx.chi.assign(cfg.subcarriers, Eigen::MatrixXd(k_count, k_count));
  ctx.effective_noise.resize(k_count, cfg.subcarriers);
  for (int n = 0; n < cfg.subcarriers; ++n) {
    for (int k = 0; k < k_count; ++k) {
      for (int l = 0; l < k_count; ++l) {
        ctx.chi[n](k, l) = std::norm(comm_gain(cfg, users[k], comm_weights[l], n));
      }
      ctx.effective_noise(k, n) =
          std::norm(comm_gain(cfg, users[k], sensing_weights, n)) * sensing_powers.at(n) +
          users[k].noise_var;
    }
  }
  return ctx;
}

/// Strict diagonal dominance of the power system on subcarrier n.
inline bool check_feasibility(const SinrContext& ctx, double tau_c, int n) {
  const Eigen::MatrixXd& chi = ctx.chi.at(n);
  for (int k = 0; k < chi.rows(); ++k) {
    if (!(chi(k, k) > 0.0)) {
      throw DegenerateError("check_feasibility: user " + std::to_string(k) +
                            " has zero beam gain");
    }
    double ratio = 0.0;
    for (int l = 0; l < chi.cols(); ++l) {
      if (l != k) ratio += chi(k, l) / chi(k, k);
    }
    if (!(1.0 / tau_c > ratio)) return false;
  }
  return true;
}

inline bool check_feasibility_all(const SinrContext& ctx, double tau_c) {
  for (int n = 0; n < ctx.subcarriers(); ++n) {
    if (!check_feasibility(ctx, tau_c, n)) return false;
  }
  return true;
}

/// Solves D p = s for the K user powers on subcarrier n.
inline Eigen::VectorXd allocate_comm(const SinrContext& ctx, double tau_c, int n) {
  if (!check_feasibility(ctx, tau_c, n)) {
    throw InfeasibleError("allocate_comm: system not diagonally dominant", tau_c);
  }
  const Eigen::MatrixXd& chi = ctx.chi.at(n);
  const Eigen::Index k_count = chi.rows();
  Eigen::MatrixXd d(k_count, k_count);
  Eigen::VectorXd s(k_count);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    for (Eigen::Index l = 0; l < k_count; ++l) {
      d(k, l) = (k == l) ? 1.0 : -tau_c * chi(k, l) / chi(k, k);
    }
    s[k] = tau_c * ctx.effective_noise(k, n) / chi(k, k);
  }
  Eigen::VectorXd p = d.partialPivLu().solve(s);
  if ((d * p - s).norm() > 1e-10 * s.norm()) {
    throw DegenerateError("allocate_comm: linear solve residual too large");
  }
  return p;
}

/// Largest tau_c * 10^(-0.05 j) that is feasible on every subcarrier.
inline double backoff_tau_c(const SinrContext& ctx, double tau_c) {
  const double floor = tau_c * 1e-3;
  double last = tau_c;
  for (int j = 0;; ++j) {
    const double t = tau_c * std::pow(10.0, -0.05 * j);
    if (t < floor) break;
    last = t;
    if (check_feasibility_all(ctx, t)) return t;
  }
  throw InfeasibleError("backoff_tau_c: no feasible SINR threshold above the floor", last);
}

inline double achieved_sinr(const SinrContext& ctx, const Eigen::MatrixXd& comm_powers, int k,
                            int n) {
  const Eigen::MatrixXd& chi = ctx.chi.at(n);
  double interference = ctx.effective_noise(k, n);
  for (Eigen::Index l = 0; l < chi.cols(); ++l) {
    if (l != k) interference += chi(k, l) * comm_powers(l, n);
  }
  return chi(k, k) * comm_powers(k, n) / interference;
}

struct StageComm {
  double tau_c = 0.0;           // effective threshold after backoff
  Eigen::MatrixXd powers;       // K x N
};

inline StageComm allocate_stage_comm(const SinrContext& ctx, double tau_c) {
  StageComm out;
  out.powers.resize(ctx.users(), ctx.subcarriers());
  if (ctx.users() == 0) {
    out.tau_c = tau_c;
    return out;
  }
  out.tau_c = backoff_tau_c(ctx, tau_c);
  for (int n = 0; n < ctx.subcarriers(); ++n) out.powers.col(n) = allocate_comm(ctx, out.tau_c, n);
  return out;
}

/// Symbol counts, sensing powers, and communication powers of every stage.
struct PowerPlan {
  std::vector<int> symbol_counts;
  std::vector<std::vector<double>> sensing_powers;  // [stage][n]
  std::vector<Eigen::MatrixXd> comm_powers;         // [stage] K x N
  std::vector<double> effective_tau_c;              // [stage]

  int stages() const { return static_cast<int>(symbol_counts.size()); }

  void add_stage(const StageSensing& s) {
    symbol_counts.push_back(s.symbols);
    sensing_powers.push_back(s.powers);
  }
};

}  // namespace squint
