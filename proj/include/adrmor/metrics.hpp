#pragma once

// ROM fidelity and runtime metrics.

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <string>

#include "adrmor/errors.hpp"
#include "adrmor/simulate.hpp"

namespace adrmor {

/// 100 ||y - y_ref||_F^2 / ||y_ref||_F^2 over all samples.
inline double nmse(const Eigen::MatrixXd& y, const Eigen::MatrixXd& y_ref) {
  detail::require(y.rows() == y_ref.rows() && y.cols() == y_ref.cols(),
                  "nmse needs equal shapes, got " + std::to_string(y.rows()) + "x" + std::to_string(y.cols()) +
                      " and " + std::to_string(y_ref.rows()) + "x" + std::to_string(y_ref.cols()));
  detail::require(y_ref.size() > 0, "nmse needs nonempty data");
  // Scale by the largest reference entry so tiny or huge magnitudes do not under/overflow.
  const double s = y_ref.cwiseAbs().maxCoeff();
  detail::require(s > 0.0, "nmse reference is identically zero");
  detail::require(std::isfinite(s) && y.allFinite(), "nmse inputs must be finite");
  const double num = ((y - y_ref) / s).squaredNorm();
  const double den = (y_ref / s).squaredNorm();
  return 100.0 * num / den;
}

struct ComparisonMeta {
  std::string scenario;
  std::string method;
  Index full_order = 0;
  Index reduced_order = 0;
};

struct ComparisonReport {
  double nmse_percent = 0.0;
  double max_abs_error = 0.0;
  double wall_time_fom = 0.0;
  double wall_time_rom = 0.0;
  double speedup = 0.0;
  ComparisonMeta meta;
  // The NMSE here is the global Frobenius ratio, not a per-node average.
  static constexpr const char* nmse_definition = "frobenius-global";
};

/// Compares a reduced trajectory against a reference on an identical time grid.
inline ComparisonReport compare(const Trajectory& reference, const Trajectory& reduced, ComparisonMeta meta = {}) {
  detail::require(reference.times.size() == reduced.times.size(),
                  "time grids differ in length (" + std::to_string(reference.times.size()) + " vs " +
                      std::to_string(reduced.times.size()) + ")");
  for (std::size_t k = 0; k < reference.times.size(); ++k) {
    if (reference.times[k] != reduced.times[k]) {
      std::ostringstream os;
      os.precision(17);
      os << "time grids differ at sample " << k << ": " << reference.times[k] << " vs " << reduced.times[k];
      throw ValidationError(os.str());
    }
  }
  ComparisonReport r;
  r.nmse_percent = nmse(reduced.outputs, reference.outputs);
  r.max_abs_error = (reduced.outputs - reference.outputs).cwiseAbs().maxCoeff();
  r.wall_time_fom = reference.wall_time;
  r.wall_time_rom = reduced.wall_time;
  detail::require(r.wall_time_fom > 0.0 && r.wall_time_rom > 0.0, "speedup needs positive wall times");
  r.speedup = r.wall_time_fom / r.wall_time_rom;
  r.meta = std::move(meta);
  return r;
}

}  // namespace adrmor
