#pragma once

// Chlorine transport coefficients in a pipe: Taylor-type dispersion with a
// laminar/turbulent switch and bulk plus mass-transfer-limited wall decay.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "adrmor/errors.hpp"

namespace adrmor {

struct WaterQualityParams {
  double a = 0.5;              // pipe radius, m
  double D0 = 1.2e-9;          // molecular diffusivity, m^2/s
  double c1 = 4110.0;
  double c2 = 0.062;
  double k_b = 6.36e-5;        // bulk decay, 1/s
  double k_w = 8.33e-5;        // wall decay, m/s
  double nu = 1.004e-6;        // kinematic viscosity (water, 20 C), m^2/s
  double L = 1000.0;           // path length, m
  double Re_threshold = 2400.0;
  double tau_cap = 1e6;        // s, used when no positive velocity has been seen

  void validate() const {
    const std::pair<const char*, double> all[] = {{"a", a},   {"D0", D0},   {"c1", c1}, {"c2", c2},
                                                  {"k_b", k_b}, {"k_w", k_w}, {"nu", nu}, {"L", L},
                                                  {"Re_threshold", Re_threshold}, {"tau_cap", tau_cap}};
    for (const auto& [name, v] : all) {
      detail::require(std::isfinite(v) && v > 0.0, std::string("water quality parameter ") + name + " must be > 0");
    }
  }

  double schmidt() const { return nu / D0; }
  /// Velocity at which the Reynolds number reaches the regime threshold.
  double critical_velocity() const { return Re_threshold * nu / (2.0 * a); }
};

/// Diameter-based Reynolds number.
inline double reynolds(double v, const WaterQualityParams& p) {
  detail::require(v >= 0.0, "velocity must be >= 0");
  return v * 2.0 * p.a / p.nu;
}

inline bool is_laminar(double v, const WaterQualityParams& p) { return reynolds(v, p) < p.Re_threshold; }

/// Longitudinal dispersion coefficient. tau is the Lagrangian travel time.
inline double dispersion(double v, double tau, const WaterQualityParams& p) {
  detail::require(v >= 0.0, "velocity must be >= 0");
  detail::require(tau > 0.0, "Lagrangian time must be > 0");
  if (v == 0.0) return p.D0;
  const double re = reynolds(v, p);
  if (re < p.Re_threshold) {
    return p.a * p.a * v * v / (48.0 * p.D0) * (1.0 - std::exp(-12.425 * tau * p.D0 / (p.a * p.a)));
  }
  return p.c1 * (2.0 * v + p.c2) / (re * v);
}

inline double sherwood(double v, const WaterQualityParams& p) {
  const double re = reynolds(v, p);
  const double sc = p.schmidt();
  if (re < p.Re_threshold) {
    const double gz = (p.a / p.L) * re * sc;
    return 3.65 + 0.0668 * gz / (1.0 + std::pow(0.04 * gz, 2.0 / 3.0));
  }
  return 0.023 * std::pow(re, 0.83) * std::pow(sc, 0.333);
}

/// Mass transfer coefficient k_f = Sh D0 / (2a), m/s.
inline double mass_transfer_coefficient(double v, const WaterQualityParams& p) {
  return sherwood(v, p) * p.D0 / (2.0 * p.a);
}

/// Decay-rate magnitude k_b + k_w k_f / (a (k_w + k_f)), 1/s. The ADR reaction
/// term is its negative.
inline double reaction(double v, const WaterQualityParams& p) {
  detail::require(v >= 0.0, "velocity must be >= 0");
  const double kf = mass_transfer_coefficient(v, p);
  return p.k_b + p.k_w * kf / (p.a * (p.k_w + kf));
}

struct LagrangianTime {
  double tau = 0.0;
  bool capped = false;
};

/// tau = L / mean(max(v, 0)); capped when the history carries no flow.
inline LagrangianTime lagrangian_time(std::span<const double> v_history, const WaterQualityParams& p) {
  detail::require(!v_history.empty(), "velocity history must be nonempty");
  double sum = 0.0;
  for (double v : v_history) sum += std::max(v, 0.0);
  const double mean = sum / static_cast<double>(v_history.size());
  if (!(mean > 0.0)) return {p.tau_cap, true};
  return {std::min(p.L / mean, p.tau_cap), p.L / mean > p.tau_cap};
}

/// Size of the coefficient jumps across Re = Re_threshold (laminar side at
/// (1 - eps) v_c, turbulent side at v_c), for a given tau.
struct RegimeJump {
  double velocity = 0.0;
  double dispersion_laminar = 0.0;
  double dispersion_turbulent = 0.0;
  double reaction_laminar = 0.0;
  double reaction_turbulent = 0.0;
};

inline RegimeJump regime_jump(double tau, const WaterQualityParams& p) {
  const double vc = p.critical_velocity();
  const double below = vc * (1.0 - 1e-12);
  return {vc, dispersion(below, tau, p), dispersion(vc, tau, p), reaction(below, p), reaction(vc, p)};
}

}  // namespace adrmor
