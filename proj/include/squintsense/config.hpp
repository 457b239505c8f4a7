#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "squintsense/errors.hpp"

namespace squint {

inline constexpr double kSpeedOfLight = 299792458.0;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// How the L dictionary candidates are spread over an angle interval.
enum class CandidateSpacing {
  squint_map,     ///< closed-form subcarrier grid map evaluated at L fractional frequencies
  uniform_angle,  ///< equal angular steps between the ROI bounds
};

/// Physical and algorithmic parameters shared by every module.
///
/// Angles are radians, powers watts, thresholds and gains in dB where the
/// field name says so. Defaults reproduce the 30 GHz / 6 GHz, 64x64 UPA
/// reference deployment.
struct SystemConfig {
  double carrier_hz = 30e9;
  double bandwidth_hz = 6e9;
  int subcarriers = 128;
  int elements_h = 64;
  int elements_v = 64;
  double bs_height_m = 40.0;

  double theta_min = deg_to_rad(15.0);
  double theta_max = deg_to_rad(70.0);
  double phi_min = deg_to_rad(30.0);
  double phi_max = deg_to_rad(150.0);

  double noise_psd_dbm_hz = -174.0;
  double target_rcs_dbsm = 10.0;
  double rician_k_db = 8.0;
  int clutter_count = 4;
  double clutter_rcs_dbsm = 0.0;
  bool include_clutter = true;

  double sensing_snr_db = 20.0;
  double comm_sinr_db = 10.0;
  double sensing_budget_w = 1.0;

  int candidates = 4096;
  CandidateSpacing candidate_spacing = CandidateSpacing::squint_map;

  /// Minimum angle between any two user directions when drawing scenes.
  double user_separation = deg_to_rad(20.0);
  /// MP residual stopping rule: stop once ||residual|| <= ratio * ||obs||. 0 disables.
  double mp_stop_ratio = 0.0;
  /// Hardware study limit on |TTD delay| in seconds. 0 disables the check.
  double max_ttd_s = 0.0;

  int element_count() const { return elements_h * elements_v; }
  double wavelength() const { return kSpeedOfLight / carrier_hz; }
  double fractional_bandwidth() const { return bandwidth_hz / carrier_hz; }

  /// Frequency deviation of 0-based subcarrier n: n * F / (N - 1).
  double subcarrier_offset(int n) const {
    return static_cast<double>(n) * bandwidth_hz / static_cast<double>(subcarriers - 1);
  }

  double target_rcs_m2() const { return db_to_linear(target_rcs_dbsm); }
  double clutter_rcs_m2() const { return db_to_linear(clutter_rcs_dbsm); }
  double rician_k() const { return db_to_linear(rician_k_db); }
  double sensing_snr() const { return db_to_linear(sensing_snr_db); }
  double comm_sinr() const { return db_to_linear(comm_sinr_db); }

  /// Thermal noise power on one subcarrier, W.
  double noise_variance() const {
    return db_to_linear(noise_psd_dbm_hz) * 1e-3 * bandwidth_hz / static_cast<double>(subcarriers);
  }

  /// Ground-to-slant distance for a direction at elevation theta from the array.
  double distance(double theta) const { return bs_height_m / std::cos(theta); }

  void validate() const;
};

inline void SystemConfig::validate() const {
  const double half_pi = std::numbers::pi / 2.0;
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (!(carrier_hz > 0.0)) fail("carrier_hz must be positive");
  if (!(bandwidth_hz > 0.0)) fail("bandwidth_hz must be positive");
  if (subcarriers < 2) fail("subcarriers must be at least 2");
  if (elements_h < 1 || elements_v < 1) fail("elements_h and elements_v must be at least 1");
  if (!(bs_height_m > 0.0)) fail("bs_height_m must be positive");
  if (!(theta_min > 0.0 && theta_max < half_pi))
    fail("theta_min/theta_max must lie inside (0, 90) degrees");
  if (!(theta_min < theta_max)) fail("theta_min must be smaller than theta_max");
  if (!(phi_min > 0.0 && phi_max < std::numbers::pi))
    fail("phi_min/phi_max must lie inside (0, 180) degrees");
  if (!(phi_min < phi_max)) fail("phi_min must be smaller than phi_max");
  if (candidates < subcarriers) fail("candidates must be at least subcarriers");
  if (clutter_count < 0) fail("clutter_count must be non-negative");
  if (!(sensing_budget_w > 0.0)) fail("sensing_budget_w must be positive");
  if (!(user_separation >= 0.0)) fail("user_separation must be non-negative");
  if (!(mp_stop_ratio >= 0.0)) fail("mp_stop_ratio must be non-negative");
  if (!(max_ttd_s >= 0.0)) fail("max_ttd_s must be non-negative");
}

}  // namespace squint
