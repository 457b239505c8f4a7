#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "squintsense/config.hpp"
#include "squintsense/geometry.hpp"

namespace squint {

enum class BeamKind {
  elevation_scan,     ///< stage 0: squint sweeps elevation, flat horizontal beam
  azimuth_scan,       ///< stage i >= 1: squint sweeps azimuth at a fixed elevation
  communication,      ///< squint-compensated pencil beam toward one user
  pencil_scan,        ///< exhaustive baseline: one co-pointed beam per grid cell
  azimuth_only_scan,  ///< azimuth-only baseline: elevation squint at one azimuth
};

/// Per-element true-time delays, seconds. The delay of element (m_h, m_v) is
/// horizontal[m_h] + vertical[m_v].
struct TtdProfile {
  Eigen::VectorXd horizontal;
  Eigen::VectorXd vertical;

  double delay(Eigen::Index mh, Eigen::Index mv) const { return horizontal[mh] + vertical[mv]; }

  double max_abs() const {
    double h = horizontal.size() ? horizontal.cwiseAbs().maxCoeff() : 0.0;
    double v = vertical.size() ? vertical.cwiseAbs().maxCoeff() : 0.0;
    return h + v;
  }
};

/// Horizontal factor of an array gain when the horizontal weights are not
/// synthesized explicitly.
class HorizontalPattern {
 public:
  virtual ~HorizontalPattern() = default;
  virtual cplx gain(double theta, double phi, int subcarrier) const = 0;
};

/// Ideal flat horizontal beam: constant magnitude over the ROI, zero outside.
class FlatHorizontalPattern final : public HorizontalPattern {
 public:
  explicit FlatHorizontalPattern(const SystemConfig& cfg)
      : level_(flat_horizontal_gain(cfg)),
        theta_min_(cfg.theta_min),
        theta_max_(cfg.theta_max),
        phi_min_(cfg.phi_min),
        phi_max_(cfg.phi_max) {}

  cplx gain(double theta, double phi, int /*subcarrier*/) const override {
    constexpr double tol = 1e-9;
    const bool inside = theta >= theta_min_ - tol && theta <= theta_max_ + tol &&
                        phi >= phi_min_ - tol && phi <= phi_max_ + tol;
    return inside ? cplx(level_, 0.0) : cplx(0.0, 0.0);
  }

  double level() const { return level_; }

 private:
  double level_;
  double theta_min_, theta_max_, phi_min_, phi_max_;
};

/// Analog beamformer over all subcarriers, stored in factorized form.
///
/// Weight on subcarrier n is kron(horizontal[n], vertical[n]); the horizontal
/// factor is replaced by `horizontal_model` when that is set (stage 0).
struct BeamformerWeights {
  BeamKind kind = BeamKind::communication;
  double ps_theta = 0.0;
  std::optional<double> ps_phi;  // unset for stage 0, whose horizontal beam is modeled
  TtdProfile ttd;
  std::vector<CVector> horizontal;
  std::vector<CVector> vertical;
  std::shared_ptr<const HorizontalPattern> horizontal_model;
  /// Direction each subcarrier is designed to peak at.
  std::vector<GridPoint> design_points;
  std::vector<double> offsets;
  double carrier_hz = 0.0;

  int subcarriers() const { return static_cast<int>(vertical.size()); }

  cplx vertical_gain(double theta, int n) const {
    return steered_sum(vertical[n], std::cos(theta) * (1.0 + offsets[n] / carrier_hz));
  }

  cplx horizontal_gain(double theta, double phi, int n) const {
    if (horizontal_model) return horizontal_model->gain(theta, phi, n);
    return steered_sum(horizontal[n],
                       std::sin(theta) * std::cos(phi) * (1.0 + offsets[n] / carrier_hz));
  }

  /// a(theta, phi, f_n) * b_n via the Kronecker factorization.
  cplx gain(double theta, double phi, int n) const {
    return horizontal_gain(theta, phi, n) * vertical_gain(theta, n);
  }

  bool has_full_weights() const { return !horizontal_model && !horizontal.empty(); }

  CVector full_weights(int n) const {
    if (!has_full_weights()) {
      throw DegenerateError("beamformer has a modeled horizontal factor; no full weights");
    }
    return kron(horizontal[n], vertical[n]);
  }

 private:
  // sum_m (1/sqrt(M)) exp(-j pi m u) w[m], with the phasor advanced by recurrence.
  static cplx steered_sum(const CVector& w, double u) {
    const Eigen::Index count = w.size();
    const cplx step = std::polar(1.0, -std::numbers::pi * u);
    cplx phase(1.0, 0.0);
    cplx acc(0.0, 0.0);
    for (Eigen::Index m = 0; m < count; ++m) {
      acc += phase * w[m];
      phase *= step;
    }
    return acc / std::sqrt(static_cast<double>(count));
  }
};

struct GridAngles {
  std::vector<double> elevation;
  std::vector<double> azimuth;
};

/// Closed-form squint map from [lo, hi]: the angle reached at frequency fraction
/// f_dev / F when fraction 0 peaks at lo and fraction 1 peaks at hi.
inline double squint_map(const SystemConfig& cfg, double lo, double hi, double fraction) {
  const double ratio = cfg.fractional_bandwidth();
  const double num = std::cos(lo) - fraction * (std::cos(lo) - std::cos(hi) * (1.0 + ratio));
  return checked_acos(num / (1.0 + fraction * ratio), "squint grid");
}

inline std::vector<double> eas_elevation_grid(const SystemConfig& cfg) {
  std::vector<double> grid(cfg.subcarriers);
  for (int n = 0; n < cfg.subcarriers; ++n) {
    grid[n] = squint_map(cfg, cfg.theta_min, cfg.theta_max, cfg.subcarrier_offset(n) / cfg.bandwidth_hz);
  }
  return grid;
}

/// Azimuth grid of every AAS stage; it does not depend on the fixed elevation.
inline std::vector<double> aas_azimuth_grid(const SystemConfig& cfg) {
  std::vector<double> grid(cfg.subcarriers);
  for (int n = 0; n < cfg.subcarriers; ++n) {
    grid[n] = squint_map(cfg, cfg.phi_min, cfg.phi_max, cfg.subcarrier_offset(n) / cfg.bandwidth_hz);
  }
  return grid;
}

inline GridAngles grid_angles(const SystemConfig& cfg) {
  return {eas_elevation_grid(cfg), aas_azimuth_grid(cfg)};
}

namespace detail {

inline void require_squint(const SystemConfig& cfg, const char* who) {
  if (!(cfg.bandwidth_hz > 0.0)) {
    throw ConfigError(std::string(who) + " requires a positive bandwidth");
  }
}

inline void check_delay_range(const SystemConfig& cfg, const TtdProfile& ttd) {
  if (cfg.max_ttd_s > 0.0 && ttd.max_abs() > cfg.max_ttd_s) {
    throw ConfigError("TTD profile exceeds max_ttd_s (" + std::to_string(ttd.max_abs()) + " s)");
  }
}

/// exp(-j 2 pi f delay[m]) * conj(ps[m]) for every element.
inline CVector ttd_times_ps(const Eigen::VectorXd& delay, double f_dev, const CVector& ps) {
  CVector out(ps.size());
  for (Eigen::Index m = 0; m < ps.size(); ++m) {
    out[m] = std::polar(1.0, -2.0 * std::numbers::pi * f_dev * delay[m]) * std::conj(ps[m]);
  }
  return out;
}

inline BeamformerWeights synthesize(const SystemConfig& cfg, BeamKind kind, double ps_theta,
                                    std::optional<double> ps_phi, TtdProfile ttd) {
  check_delay_range(cfg, ttd);
  BeamformerWeights w;
  w.kind = kind;
  w.ps_theta = ps_theta;
  w.ps_phi = ps_phi;
  w.carrier_hz = cfg.carrier_hz;
  w.offsets.resize(cfg.subcarriers);
  const CVector ps_v = vertical_steering(ps_theta, 0.0, cfg.carrier_hz, cfg.elements_v);
  CVector ps_h;
  if (ps_phi) ps_h = horizontal_steering(ps_theta, *ps_phi, 0.0, cfg.carrier_hz, cfg.elements_h);
  for (int n = 0; n < cfg.subcarriers; ++n) {
    const double f = cfg.subcarrier_offset(n);
    w.offsets[n] = f;
    w.vertical.push_back(ttd_times_ps(ttd.vertical, f, ps_v));
    if (ps_phi) w.horizontal.push_back(ttd_times_ps(ttd.horizontal, f, ps_h));
  }
  w.ttd = std::move(ttd);
  return w;
}

}  // namespace detail

/// Stage-0 vertical delays that steer subcarrier N onto theta_max.
inline Eigen::VectorXd eas_vertical_ttd(const SystemConfig& cfg) {
  detail::require_squint(cfg, "eas_vertical_ttd");
  const double slope = (std::cos(cfg.theta_min) -
                        std::cos(cfg.theta_max) * (1.0 + cfg.fractional_bandwidth())) /
                       (2.0 * cfg.bandwidth_hz);
  Eigen::VectorXd t(cfg.elements_v);
  for (int m = 0; m < cfg.elements_v; ++m) t[m] = m * slope;
  return t;
}

/// Stage-0 beam: PS at theta_min, vertical squint across [theta_min, theta_max],
/// ideal flat horizontal pattern.
inline BeamformerWeights eas_beamformer(const SystemConfig& cfg) {
  TtdProfile ttd{Eigen::VectorXd::Zero(cfg.elements_h), eas_vertical_ttd(cfg)};
  auto w = detail::synthesize(cfg, BeamKind::elevation_scan, cfg.theta_min, std::nullopt, ttd);
  w.horizontal_model = std::make_shared<FlatHorizontalPattern>(cfg);
  const double phi_mid = 0.5 * (cfg.phi_min + cfg.phi_max);
  for (double theta : eas_elevation_grid(cfg)) w.design_points.push_back({theta, phi_mid});
  return w;
}

/// Delays for an AAS stage at elevation theta_hat: the vertical part cancels
/// squint at theta_hat, the horizontal part sweeps [phi_min, phi_max].
inline TtdProfile aas_ttd(const SystemConfig& cfg, double theta_hat) {
  detail::require_squint(cfg, "aas_ttd");
  if (!(theta_hat > 0.0 && theta_hat < std::numbers::pi / 2.0)) {
    throw ConfigError("aas_ttd: theta_hat must lie in (0, pi/2)");
  }
  TtdProfile ttd{Eigen::VectorXd(cfg.elements_h), Eigen::VectorXd(cfg.elements_v)};
  const double v_slope = -std::cos(theta_hat) / (2.0 * cfg.carrier_hz);
  for (int m = 0; m < cfg.elements_v; ++m) ttd.vertical[m] = m * v_slope;
  const double h_slope =
      std::sin(theta_hat) *
      (std::cos(cfg.phi_min) - std::cos(cfg.phi_max) * (1.0 + cfg.fractional_bandwidth())) /
      (2.0 * cfg.bandwidth_hz);
  for (int m = 0; m < cfg.elements_h; ++m) ttd.horizontal[m] = m * h_slope;
  return ttd;
}

inline BeamformerWeights aas_beamformer(const SystemConfig& cfg, double theta_hat) {
  auto w = detail::synthesize(cfg, BeamKind::azimuth_scan, theta_hat, cfg.phi_min,
                              aas_ttd(cfg, theta_hat));
  for (double phi : aas_azimuth_grid(cfg)) w.design_points.push_back({theta_hat, phi});
  return w;
}

/// Squint-compensating delays toward (theta, phi).
inline TtdProfile comm_ttd(const SystemConfig& cfg, double theta, double phi) {
  TtdProfile ttd{Eigen::VectorXd(cfg.elements_h), Eigen::VectorXd(cfg.elements_v)};
  const double h_slope = -std::sin(theta) * std::cos(phi) / (2.0 * cfg.carrier_hz);
  const double v_slope = -std::cos(theta) / (2.0 * cfg.carrier_hz);
  for (int m = 0; m < cfg.elements_h; ++m) ttd.horizontal[m] = m * h_slope;
  for (int m = 0; m < cfg.elements_v; ++m) ttd.vertical[m] = m * v_slope;
  return ttd;
}

/// Pencil beam with unit gain toward (theta_u, phi_u) on every subcarrier.
inline BeamformerWeights comm_beamformer(const SystemConfig& cfg, double theta_u, double phi_u) {
  auto w = detail::synthesize(cfg, BeamKind::communication, theta_u, phi_u,
                              comm_ttd(cfg, theta_u, phi_u));
  w.design_points.assign(cfg.subcarriers, {theta_u, phi_u});
  return w;
}

/// Row-vector times column-vector inner product a * w (no conjugation).
inline cplx array_gain(const SteeringVector& sv, const CVector& w) {
  if (sv.entries.size() != w.size()) {
    throw std::invalid_argument("array_gain: steering vector length " +
                                std::to_string(sv.entries.size()) + " != weight length " +
                                std::to_string(w.size()));
  }
  return (sv.entries.array() * w.array()).sum();
}

}  // namespace squint
