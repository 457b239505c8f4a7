#pragma once

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <string>
#include <numbers>
#include <random>
#include <vector>

#include "squintsense/beamforming.hpp"
#include "squintsense/config.hpp"
#include "squintsense/geometry.hpp"

namespace squint {

struct Target {
  double theta = 0.0;
  double phi = 0.0;
  double distance = 0.0;
  double rcs = 0.0;
};

/// Swerling-I clutter scatterer; `fading` is drawn once per trial.
struct Clutterer {
  double theta = 0.0;
  double phi = 0.0;
  double distance = 0.0;
  double rcs = 0.0;
  cplx fading{0.0, 0.0};
};

struct User {
  double theta = 0.0;
  double phi = 0.0;
  double distance = 0.0;
  double noise_var = 0.0;
};

struct Scene {
  std::vector<Target> targets;
  std::vector<Clutterer> clutterers;
  std::vector<User> users;
  std::uint64_t rng_seed = 0;
};

/// Round-trip amplitude of a point target: sqrt(lambda^2 M^2 rcs / ((4 pi)^3 l^4)).
inline double sensing_attenuation(const SystemConfig& cfg, double distance, double rcs) {
  const double lambda = cfg.wavelength();
  const double m = cfg.element_count();
  const double four_pi = 4.0 * std::numbers::pi;
  return std::sqrt(lambda * lambda * m * m * rcs / (four_pi * four_pi * four_pi)) /
         (distance * distance);
}

/// One-way amplitude: sqrt(lambda^2 M) / (4 pi l).
inline double comm_attenuation(const SystemConfig& cfg, double distance) {
  return std::sqrt(cfg.wavelength() * cfg.wavelength() * cfg.element_count()) /
         (4.0 * std::numbers::pi * distance);
}

/// Round-trip carrier phase e^{-j 4 pi l / lambda}.
inline cplx round_trip_phase(const SystemConfig& cfg, double distance) {
  return std::polar(1.0, -4.0 * std::numbers::pi * distance / cfg.wavelength());
}

/// b^H G_n b for the scene's targets and (optionally) clutter, evaluated through
/// the rank-1 structure of each scatterer.
inline cplx echo_gain(const SystemConfig& cfg, const Scene& scene, const BeamformerWeights& w,
                      int n, bool include_clutter) {
  cplx los(0.0, 0.0);
  for (const auto& t : scene.targets) {
    const double g = std::norm(w.gain(t.theta, t.phi, n));
    los += sensing_attenuation(cfg, t.distance, t.rcs) * round_trip_phase(cfg, t.distance) * g;
  }
  if (!include_clutter) return los;
  const double kappa = cfg.rician_k();
  cplx out = std::sqrt(kappa / (1.0 + kappa)) * los;
  if (!scene.clutterers.empty()) {
    cplx nlos(0.0, 0.0);
    for (const auto& c : scene.clutterers) {
      const double g = std::norm(w.gain(c.theta, c.phi, n));
      nlos += sensing_attenuation(cfg, c.distance, c.rcs) * c.fading * g;
    }
    out += std::sqrt(1.0 / (1.0 + kappa)) / std::sqrt(static_cast<double>(scene.clutterers.size())) *
           nlos;
  }
  return out;
}

/// h_n(user) * w_n = beta e^{-j 2 pi l / lambda} a(theta, phi, f_n) w_n.
inline cplx comm_gain(const SystemConfig& cfg, const User& user, const BeamformerWeights& w, int n) {
  const cplx path = comm_attenuation(cfg, user.distance) *
                    std::polar(1.0, -2.0 * std::numbers::pi * user.distance / cfg.wavelength());
  return path * w.gain(user.theta, user.phi, n);
}

/// Same as above against an explicit length-M weight vector.
inline cplx comm_gain(const SystemConfig& cfg, const User& user, const CVector& w, double f_dev) {
  const cplx path = comm_attenuation(cfg, user.distance) *
                    std::polar(1.0, -2.0 * std::numbers::pi * user.distance / cfg.wavelength());
  return path * array_gain(upa_steering(cfg, user.theta, user.phi, f_dev), w);
}

inline double subcarrier_noise_variance(const SystemConfig& cfg) { return cfg.noise_variance(); }

/// splitmix64 finalizer; used to derive independent RNG streams from one seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix_seed(mix_seed(seed) ^ mix_seed(stream + 0x51ed270b27a3bULL));
}

/// Angle between the unit direction vectors of two (theta, phi) pairs.
inline double angular_separation(double theta_a, double phi_a, double theta_b, double phi_b) {
  const double dot = std::sin(theta_a) * std::sin(theta_b) * std::cos(phi_a - phi_b) +
                     std::cos(theta_a) * std::cos(theta_b);
  return std::acos(std::clamp(dot, -1.0, 1.0));
}

/// Draws targets, clutter, and users uniformly in (theta, phi) over the ROI.
///
/// Each population uses its own RNG stream derived from `seed`, so changing
/// the user count leaves the targets and clutter unchanged.
inline Scene generate_scene(const SystemConfig& cfg, int q, int k, std::uint64_t seed) {
  if (q < 0 || k < 0) throw ConfigError("generate_scene: counts must be non-negative");
  Scene scene;
  scene.rng_seed = seed;
  std::uniform_real_distribution<double> theta_dist(cfg.theta_min, cfg.theta_max);
  std::uniform_real_distribution<double> phi_dist(cfg.phi_min, cfg.phi_max);

  std::mt19937_64 target_rng(derive_seed(seed, 1));
  for (int i = 0; i < q; ++i) {
    Target t;
    t.theta = theta_dist(target_rng);
    t.phi = phi_dist(target_rng);
    t.distance = cfg.distance(t.theta);
    t.rcs = cfg.target_rcs_m2();
    scene.targets.push_back(t);
  }

  std::mt19937_64 clutter_rng(derive_seed(seed, 2));
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  for (int i = 0; i < cfg.clutter_count; ++i) {
    Clutterer c;
    c.theta = theta_dist(clutter_rng);
    c.phi = phi_dist(clutter_rng);
    c.distance = cfg.distance(c.theta);
    c.rcs = cfg.clutter_rcs_m2();
    const double re = normal(clutter_rng);
    c.fading = cplx(re, normal(clutter_rng));
    scene.clutterers.push_back(c);
  }

  std::mt19937_64 user_rng(derive_seed(seed, 3));
  constexpr int kMaxDraws = 10000;
  for (int i = 0; i < k; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxDraws && !placed; ++attempt) {
      User u;
      u.theta = theta_dist(user_rng);
      u.phi = phi_dist(user_rng);
      bool ok = true;
      for (const auto& other : scene.users) {
        if (angular_separation(u.theta, u.phi, other.theta, other.phi) < cfg.user_separation) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      u.distance = cfg.distance(u.theta);
      u.noise_var = cfg.noise_variance();
      scene.users.push_back(u);
      placed = true;
    }
    if (!placed) {
      throw ConfigError("generate_scene: cannot place " + std::to_string(k) +
                        " users with the requested separation");
    }
  }
  return scene;
}

}  // namespace squint
