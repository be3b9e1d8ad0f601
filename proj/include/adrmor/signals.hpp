#pragma once

// Time signals for the ADR coefficients: closed-form generators or sampled
// series with a per-signal interpolation rule.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "adrmor/errors.hpp"

namespace adrmor {

enum class Interpolation { Linear, ZeroOrderHold };

class Signal {
 public:
  Signal() : fn_(std::make_shared<std::function<double(double)>>([](double) { return 0.0; })) {}

  static Signal constant(double value) {
    Signal s;
    s.fn_ = std::make_shared<std::function<double(double)>>([value](double) { return value; });
    return s;
  }

  static Signal function(std::function<double(double)> f) {
    detail::require(static_cast<bool>(f), "signal function must be callable");
    Signal s;
    s.fn_ = std::make_shared<std::function<double(double)>>(std::move(f));
    return s;
  }

  /// Sampled series; defined on [times.front(), times.back()]. With
  /// ZeroOrderHold, value i holds on [t_i, t_{i+1}) and the last value holds at t_back.
  static Signal sampled(std::vector<double> times, std::vector<double> values,
                        Interpolation rule) {
    detail::require(!times.empty() && times.size() == values.size(),
                    "sampled signal needs equally many (>0) times and values");
    for (std::size_t i = 1; i < times.size(); ++i) {
      detail::require(times[i] > times[i - 1], "sampled signal times must be strictly increasing");
    }
    Signal s;
    s.lo_ = times.front();
    s.hi_ = times.back();
    auto t = std::make_shared<const std::vector<double>>(std::move(times));
    auto v = std::make_shared<const std::vector<double>>(std::move(values));
    s.fn_ = std::make_shared<std::function<double(double)>>([t, v, rule](double x) {
      const auto& ts = *t;
      const auto& vs = *v;
      if (x <= ts.front()) return vs.front();
      if (x >= ts.back()) return vs.back();
      const auto it = std::upper_bound(ts.begin(), ts.end(), x);
      const std::size_t k = static_cast<std::size_t>(it - ts.begin()) - 1;
      if (rule == Interpolation::ZeroOrderHold) return vs[k];
      const double w = (x - ts[k]) / (ts[k + 1] - ts[k]);
      return (1.0 - w) * vs[k] + w * vs[k + 1];
    });
    return s;
  }

  double operator()(double t) const { return (*fn_)(t); }

  double domain_begin() const { return lo_; }
  double domain_end() const { return hi_; }
  bool covers(double t0, double t1) const {
    const double tol = 1e-12 * std::max({1.0, std::abs(t0), std::abs(t1)});
    return lo_ <= t0 + tol && hi_ >= t1 - tol;
  }

  /// Returns t -> value_scale * f(time_scale * t); the domain is mapped accordingly.
  Signal rescaled(double time_scale, double value_scale) const {
    detail::require(time_scale > 0.0, "time scale must be positive");
    Signal s;
    auto f = fn_;
    s.fn_ = std::make_shared<std::function<double(double)>>(
        [f, time_scale, value_scale](double t) { return value_scale * (*f)(time_scale * t); });
    s.lo_ = lo_ / time_scale;
    s.hi_ = hi_ / time_scale;
    return s;
  }

 private:
  std::shared_ptr<const std::function<double(double)>> fn_;
  double lo_ = -std::numeric_limits<double>::infinity();
  double hi_ = std::numeric_limits<double>::infinity();
};

/// v(t), D(t), r(t), s(t) and the inflow boundary value g(t) on [t0, t_end].
struct CoefficientSignals {
  Signal velocity;
  Signal diffusivity;
  Signal reaction;  // raw r(t); the +1 shift happens in augment_input
  Signal source;
  Signal boundary;
  double t0 = 0.0;
  double t_end = 1.0;

  /// Checks horizon coverage, finiteness and v >= 0 on `samples` + 1 uniform points.
  void validate(int samples = 2000) const {
    detail::require(std::isfinite(t0) && std::isfinite(t_end) && t_end > t0,
                    "signal horizon must satisfy t_end > t0");
    const std::pair<const char*, const Signal*> all[] = {
        {"v", &velocity}, {"D", &diffusivity}, {"r", &reaction}, {"s", &source}, {"g", &boundary}};
    for (const auto& [name, sig] : all) {
      detail::require(sig->covers(t0, t_end),
                      std::string("signal ") + name + " does not cover the horizon");
    }
    for (int k = 0; k <= samples; ++k) {
      const double t = t0 + (t_end - t0) * k / samples;
      for (const auto& [name, sig] : all) {
        detail::require(std::isfinite((*sig)(t)),
                        std::string("signal ") + name + " is not finite at t=" + std::to_string(t));
      }
      detail::require(velocity(t) >= 0.0,
                      "negative velocity at t=" + std::to_string(t) + " (upwind stencil needs v >= 0)");
      detail::require(diffusivity(t) >= 0.0, "negative diffusivity at t=" + std::to_string(t));
    }
  }
};

}  // namespace adrmor
