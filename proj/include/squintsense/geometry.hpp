#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <string_view>

#include "squintsense/config.hpp"
#include "squintsense/errors.hpp"

namespace squint {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;

/// Tolerance beyond [-1, 1] that arccos arguments may drift before it is a config error.
inline constexpr double kAcosTolerance = 1e-9;

inline double checked_acos(double x, std::string_view what) {
  if (x > 1.0 + kAcosTolerance || x < -1.0 - kAcosTolerance) {
    throw ConfigError(std::string(what) + ": arccos argument " + std::to_string(x) +
                      " outside [-1, 1]");
  }
  return std::acos(std::clamp(x, -1.0, 1.0));
}

namespace detail {

/// (1/sqrt(M)) * exp(-j*pi*(m-1)*u) for m = 1..M.
inline CVector ula_response(double u, int count) {
  CVector v(count);
  const double scale = 1.0 / std::sqrt(static_cast<double>(count));
  for (int m = 0; m < count; ++m) {
    v[m] = std::polar(scale, -std::numbers::pi * m * u);
  }
  return v;
}

}  // namespace detail

/// Horizontal steering vector; phase progression sin(theta) cos(phi) (1 + f_dev/fc).
inline CVector horizontal_steering(double theta, double phi, double f_dev, double carrier_hz,
                                   int elements_h) {
  return detail::ula_response(std::sin(theta) * std::cos(phi) * (1.0 + f_dev / carrier_hz),
                              elements_h);
}

/// Vertical steering vector; phase progression cos(theta) (1 + f_dev/fc).
inline CVector vertical_steering(double theta, double f_dev, double carrier_hz, int elements_v) {
  return detail::ula_response(std::cos(theta) * (1.0 + f_dev / carrier_hz), elements_v);
}

/// Kronecker product with horizontal-major ordering: index = m_h * M_v + m_v.
inline CVector kron(const CVector& horizontal, const CVector& vertical) {
  const Eigen::Index mv = vertical.size();
  CVector out(horizontal.size() * mv);
  for (Eigen::Index h = 0; h < horizontal.size(); ++h) {
    out.segment(h * mv, mv) = horizontal[h] * vertical;
  }
  return out;
}

struct SteeringVector {
  CVector entries;
  double theta = 0.0;
  double phi = 0.0;
  double f_dev = 0.0;
};

inline SteeringVector upa_steering(const SystemConfig& cfg, double theta, double phi,
                                   double f_dev) {
  return {kron(horizontal_steering(theta, phi, f_dev, cfg.carrier_hz, cfg.elements_h),
               vertical_steering(theta, f_dev, cfg.carrier_hz, cfg.elements_v)),
          theta, phi, f_dev};
}

/// Direction (elevation, azimuth) in radians.
struct GridPoint {
  double theta = 0.0;
  double phi = 0.0;
};

/// Horizontal distance between the ground points seen at two directions from an
/// array mounted at height h: (x, y) = h tan(theta) (cos phi, sin phi).
inline double ground_distance(double h, const GridPoint& a, const GridPoint& b) {
  const double ra = h * std::tan(a.theta);
  const double rb = h * std::tan(b.theta);
  return std::hypot(ra * std::cos(a.phi) - rb * std::cos(b.phi),
                    ra * std::sin(a.phi) - rb * std::sin(b.phi));
}

/// Composite angle-of-departure interval swept by the horizontal aperture over the ROI.
struct AodInterval {
  double psi_min = 0.0;
  double psi_max = 0.0;
  double width() const { return psi_max - psi_min; }
};

inline AodInterval composite_aod_bounds(const SystemConfig& cfg) {
  const double lo = checked_acos(std::sin(cfg.theta_max) * std::cos(cfg.phi_min), "psi_min");
  const double hi = checked_acos(
      std::sin(cfg.theta_max) * std::cos(cfg.phi_max) * (1.0 + cfg.fractional_bandwidth()),
      "psi_max");
  AodInterval out{std::min(lo, hi), std::max(lo, hi)};
  if (!(out.width() > 0.0)) {
    throw ConfigError("composite AoD interval is degenerate (phi_min == phi_max?)");
  }
  return out;
}

/// Constant horizontal gain magnitude of an ideal flat beam whose squared gain
/// integrates to 2*pi/M_h over the composite AoD interval.
inline double flat_horizontal_gain(const SystemConfig& cfg) {
  const double width = composite_aod_bounds(cfg).width();
  return std::sqrt(2.0 * std::numbers::pi / (static_cast<double>(cfg.elements_h) * width));
}

}  // namespace squint
