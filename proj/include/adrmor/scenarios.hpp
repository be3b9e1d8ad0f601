#pragma once

// Evaluation scenarios: periodic-coefficient sweeps over Peclet number with
// several boundary injections, and the 48 h water-quality injection case.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adrmor/errors.hpp"
#include "adrmor/signals.hpp"
#include "adrmor/waterquality.hpp"

namespace adrmor {

enum class ScenarioKind { Step, Pulse, Random, Chirp, Multisine, WaterQuality };

inline std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Step: return "step";
    case ScenarioKind::Pulse: return "pulse";
    case ScenarioKind::Random: return "random";
    case ScenarioKind::Chirp: return "chirp";
    case ScenarioKind::Multisine: return "multisine";
    case ScenarioKind::WaterQuality: return "waterquality";
  }
  return "?";
}

inline ScenarioKind scenario_kind_from_string(std::string_view s) {
  for (ScenarioKind k : {ScenarioKind::Step, ScenarioKind::Pulse, ScenarioKind::Random, ScenarioKind::Chirp,
                         ScenarioKind::Multisine, ScenarioKind::WaterQuality}) {
    if (to_string(k) == s) return k;
  }
  throw ValidationError("unknown scenario kind '" + std::string(s) +
                        "' (expected step, pulse, random, chirp, multisine or waterquality)");
}

/// Demand pattern and injection profile of the water-quality case.
struct WaterQualityScenario {
  double demand_low = 0.4;       // multiples of the critical velocity
  double demand_high = 4.0;
  double demand_interval = 3600.0;  // s
  double pulse_level = 10.0;     // mg/L
  double pulse_end = 3600.0;     // s
  double zero_end = 17.0 * 3600.0;
  double step_level = 1.0;       // mg/L
  double noise_amplitude = 0.1;  // mg/L, uniform in [-a, a]
  double noise_hold = 600.0;     // s
  int max_attempts = 10;
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::Step;
  double Pe_target = 10.0;
  double horizon = 3.0;
  double dt = 1e-3;
  std::uint64_t seed = 1;

  // Sweep coefficients: v = v_mean (1 + v_amp sin(2 pi 2 t/T)),
  // D = D_mean (1 + D_amp sin(2 pi 3 t/T + 1)), r = r_mean (1 + r_amp sin(2 pi 4 t/T)).
  double length = 1.0;
  double v_mean = 1.0;
  double v_amp = 0.3;
  double D_amp = 0.3;
  double r_mean = -0.1;
  double r_amp = 0.5;
  // Boundary injections.
  double amplitude = 1.0;
  double pulse_width = 0.3;    // s
  int random_knots = 40;
  double chirp_f0 = 0.5;       // Hz
  double chirp_rate = 1.0;     // Hz/s: instantaneous frequency f0 + 2 rate t
  int multisine_tones = 5;

  std::optional<WaterQualityParams> wq_params;
  WaterQualityScenario wq;

  void validate_sweep() const {
    detail::require(kind != ScenarioKind::WaterQuality, "sweep signals need a sweep kind");
    detail::require(std::isfinite(Pe_target) && Pe_target >= 1.0 && Pe_target <= 1e5,
                    "Pe_target must lie in [1, 1e5]");
    detail::require(horizon > 0.0 && dt > 0.0 && dt <= horizon, "need 0 < dt <= horizon");
    detail::require(length > 0.0 && v_mean > 0.0, "length and mean velocity must be > 0");
    detail::require(v_amp >= 0.0 && v_amp < 1.0, "velocity amplitude must lie in [0, 1) to keep v > 0");
    detail::require(D_amp >= 0.0 && D_amp < 1.0, "diffusivity amplitude must lie in [0, 1) to keep D > 0");
    detail::require(r_amp >= 0.0 && std::isfinite(r_mean), "reaction descriptors must be finite");
    detail::require(amplitude >= 0.0, "injection amplitude must be >= 0");
    detail::require(kind != ScenarioKind::Pulse || (pulse_width > 0.0 && pulse_width <= horizon),
                    "pulse width must lie in (0, horizon]");
    detail::require(random_knots >= 2, "random injection needs >= 2 knots");
    detail::require(multisine_tones >= 1, "multisine needs >= 1 tone");
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Portable uniform draw in [0, 1); std::uniform_real_distribution is not
/// specified bit-for-bit across standard libraries.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(tag)));
}

}  // namespace detail

inline double peclet(double v, double L, double D) {
  detail::require(std::isfinite(D) && D > 0.0, "Peclet number needs D > 0");
  return v * L / D;
}

/// Mean diffusivity that realizes cfg.Pe_target with the mean velocity.
inline double sweep_mean_diffusivity(const ScenarioConfig& cfg) { return cfg.v_mean * cfg.length / cfg.Pe_target; }

/// Boundary injection g(t) for a sweep kind.
inline Signal sweep_injection(const ScenarioConfig& cfg) {
  const double T = cfg.horizon;
  const double amp = cfg.amplitude;
  switch (cfg.kind) {
    case ScenarioKind::Step:
      return Signal::constant(amp);
    case ScenarioKind::Pulse: {
      const double w = cfg.pulse_width;
      return Signal::function([amp, w](double t) { return t < w ? amp : 0.0; });
    }
    case ScenarioKind::Random: {
      auto rng = detail::stream(cfg.seed, 0x72616e64);
      std::vector<double> times(static_cast<std::size_t>(cfg.random_knots) + 1);
      std::vector<double> values(times.size());
      for (std::size_t k = 0; k < times.size(); ++k) {
        times[k] = T * static_cast<double>(k) / cfg.random_knots;
        values[k] = amp * detail::uniform01(rng);
      }
      return Signal::sampled(std::move(times), std::move(values), Interpolation::Linear);
    }
    case ScenarioKind::Chirp: {
      const double f0 = cfg.chirp_f0, k = cfg.chirp_rate;
      return Signal::function([=](double t) {
        return 0.5 * amp * (1.0 + std::sin(2.0 * std::numbers::pi * (f0 * t + k * t * t)));
      });
    }
    case ScenarioKind::Multisine: {
      auto rng = detail::stream(cfg.seed, 0x6d756c74);
      const int m = cfg.multisine_tones;
      std::vector<double> phase(static_cast<std::size_t>(m));
      for (double& p : phase) p = 2.0 * std::numbers::pi * detail::uniform01(rng);
      return Signal::function([=](double t) {
        double acc = 0.0;
        for (int j = 0; j < m; ++j) acc += std::sin(2.0 * std::numbers::pi * (j + 1) * t / T + phase[j]);
        return amp * (0.5 + 0.5 * acc / m);
      });
    }
    case ScenarioKind::WaterQuality:
      break;
  }
  throw ValidationError("water-quality kind has no sweep injection");
}

/// Periodic v, D, r around the Pe-matched means; s = 0 and g from the kind.
inline CoefficientSignals make_sweep_signals(const ScenarioConfig& cfg) {
  cfg.validate_sweep();
  const double T = cfg.horizon;
  const double vb = cfg.v_mean, va = cfg.v_amp;
  const double Db = sweep_mean_diffusivity(cfg), Da = cfg.D_amp;
  const double rb = cfg.r_mean, ra = cfg.r_amp;
  const double w = 2.0 * std::numbers::pi / T;
  CoefficientSignals sig;
  sig.velocity = Signal::function([=](double t) { return vb * (1.0 + va * std::sin(2.0 * w * t)); });
  sig.diffusivity = Signal::function([=](double t) { return Db * (1.0 + Da * std::sin(3.0 * w * t + 1.0)); });
  sig.reaction = Signal::function([=](double t) { return rb * (1.0 + ra * std::sin(4.0 * w * t)); });
  sig.source = Signal::constant(0.0);
  sig.boundary = sweep_injection(cfg);
  sig.t0 = 0.0;
  sig.t_end = T;
  return sig;
}

/// POD training set: the sweep coefficients with no boundary injection and a
/// chirp distributed source instead.
inline CoefficientSignals make_pod_training_signals(const ScenarioConfig& cfg) {
  CoefficientSignals sig = make_sweep_signals(cfg);
  ScenarioConfig chirp = cfg;
  chirp.kind = ScenarioKind::Chirp;
  sig.source = sweep_injection(chirp);
  sig.boundary = Signal::constant(0.0);
  return sig;
}

struct WqScenarioResult {
  CoefficientSignals signals;
  std::vector<double> hourly_velocity;  // m/s, one value per demand interval
  double laminar_fraction = 0.0;
  double turbulent_fraction = 0.0;
  int attempts = 0;
  std::uint64_t sub_seed = 0;
  WaterQualityParams params;
};

namespace detail {

/// Causal running mean of a piecewise-constant velocity, then tau = L / mean.
class RunningTau {
 public:
  RunningTau(std::vector<double> v, double interval, const WaterQualityParams& p)
      : v_(std::move(v)), dt_(interval), p_(p) {
    cum_.resize(v_.size() + 1, 0.0);
    for (std::size_t k = 0; k < v_.size(); ++k) cum_[k + 1] = cum_[k] + std::max(v_[k], 0.0) * dt_;
  }
  double velocity(double t) const { return v_[index(t)]; }
  LagrangianTime tau(double t) const {
    const std::size_t k = index(t);
    if (t <= 0.0) {
      const double one = v_.front();
      return lagrangian_time(std::span<const double>(&one, 1), p_);
    }
    const double mean = (cum_[k] + std::max(v_[k], 0.0) * (t - dt_ * static_cast<double>(k))) / t;
    return lagrangian_time(std::span<const double>(&mean, 1), p_);
  }

 private:
  std::size_t index(double t) const {
    if (t <= 0.0) return 0;
    const auto k = static_cast<std::size_t>(std::floor(t / dt_));
    return std::min(k, v_.size() - 1);
  }
  std::vector<double> v_;
  std::vector<double> cum_;
  double dt_;
  WaterQualityParams p_;
};

}  // namespace detail

/// 48 h chlorine injection through one pipe under a random hourly demand.
inline WqScenarioResult make_wq_scenario(const ScenarioConfig& cfg) {
  detail::require(cfg.wq_params.has_value(), "water-quality scenario needs wq_params");
  const WaterQualityParams p = *cfg.wq_params;
  p.validate();
  const WaterQualityScenario& s = cfg.wq;
  detail::require(cfg.horizon > 0.0, "horizon must be > 0");
  detail::require(s.demand_low > 0.0 && s.demand_high > s.demand_low, "need 0 < demand_low < demand_high");
  detail::require(s.demand_interval > 0.0 && s.noise_hold > 0.0, "demand interval and noise hold must be > 0");
  detail::require(s.noise_amplitude >= 0.0, "noise amplitude must be >= 0");
  detail::require(0.0 < s.pulse_end && s.pulse_end <= s.zero_end && s.zero_end <= cfg.horizon,
                  "need 0 < pulse_end <= zero_end <= horizon");
  detail::require(s.max_attempts >= 1, "max_attempts must be >= 1");

  const double vc = p.critical_velocity();
  const auto intervals = static_cast<std::size_t>(std::ceil(cfg.horizon / s.demand_interval - 1e-9));
  WqScenarioResult out;
  out.params = p;
  std::vector<double> v(intervals);
  bool ok = false;
  for (int attempt = 0; attempt < s.max_attempts && !ok; ++attempt) {
    out.attempts = attempt + 1;
    out.sub_seed = detail::splitmix64(cfg.seed + 0x1000u * static_cast<std::uint64_t>(attempt));
    std::mt19937_64 rng(out.sub_seed);
    const double lo = std::log(s.demand_low), hi = std::log(s.demand_high);
    for (double& x : v) x = vc * std::exp(lo + (hi - lo) * detail::uniform01(rng));
    // Time fractions, the last interval may be truncated by the horizon.
    double lam = 0.0, tur = 0.0;
    for (std::size_t k = 0; k < intervals; ++k) {
      const double len = std::min(s.demand_interval, cfg.horizon - s.demand_interval * static_cast<double>(k));
      (is_laminar(v[k], p) ? lam : tur) += len;
    }
    out.laminar_fraction = lam / cfg.horizon;
    out.turbulent_fraction = tur / cfg.horizon;
    ok = lam > 0.0 && tur > 0.0;
  }
  if (!ok) {
    throw ValidationError("demand pattern did not cover both flow regimes after " + std::to_string(s.max_attempts) +
                          " attempts (seed " + std::to_string(cfg.seed) + ")");
  }
  out.hourly_velocity = v;

  auto tau = std::make_shared<const detail::RunningTau>(v, s.demand_interval, p);
  CoefficientSignals& sig = out.signals;
  sig.velocity = Signal::function([tau](double t) { return tau->velocity(t); });
  sig.diffusivity = Signal::function([tau, p](double t) { return dispersion(tau->velocity(t), tau->tau(t).tau, p); });
  sig.reaction = Signal::function([tau, p](double t) { return -reaction(tau->velocity(t), p); });
  sig.source = Signal::constant(0.0);

  const auto holds = static_cast<std::size_t>(std::ceil((cfg.horizon - s.zero_end) / s.noise_hold - 1e-9)) + 1;
  std::vector<double> noise(holds);
  auto rng = detail::stream(out.sub_seed, 0x6e6f6973);
  for (double& x : noise) x = s.noise_amplitude * (2.0 * detail::uniform01(rng) - 1.0);
  sig.boundary = Signal::function([s, noise = std::move(noise)](double t) {
    if (t < s.pulse_end) return s.pulse_level;
    if (t < s.zero_end) return 0.0;
    const auto k = std::min(static_cast<std::size_t>(std::floor((t - s.zero_end) / s.noise_hold)), noise.size() - 1);
    return s.step_level + noise[k];
  });
  sig.t0 = 0.0;
  sig.t_end = cfg.horizon;
  return out;
}

/// Default water-quality case: 48 h, 1 s steps, Table-style parameters.
inline ScenarioConfig default_wq_config(std::uint64_t seed = 1) {
  ScenarioConfig c;
  c.kind = ScenarioKind::WaterQuality;
  c.horizon = 48.0 * 3600.0;
  c.dt = 1.0;
  c.seed = seed;
  c.wq_params = WaterQualityParams{};
  return c;
}

struct SweepCase {
  double Pe = 1.0;
  ScenarioKind kind = ScenarioKind::Step;
};

/// Six Peclet decades times {step, pulse, random}.
inline std::vector<SweepCase> sweep_grid() {
  std::vector<SweepCase> out;
  for (int d = 0; d <= 5; ++d) {
    for (ScenarioKind k : {ScenarioKind::Step, ScenarioKind::Pulse, ScenarioKind::Random}) {
      out.push_back({std::pow(10.0, d), k});
    }
  }
  return out;
}

}  // namespace adrmor
