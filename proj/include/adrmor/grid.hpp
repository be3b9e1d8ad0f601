#pragma once

// Method-of-lines semi-discretization of the 1-D advection-diffusion-reaction
// equation: first-order upwind convection, central diffusion, ghost points at
// the inflow (Dirichlet-type g(t)) and at the open outflow boundary.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "adrmor/errors.hpp"

namespace adrmor {

using Index = Eigen::Index;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Uniform grid of `nodes` points on [0, length].
struct GridSpec {
  double length = 1.0;
  Index nodes = 2;
  bool scaled = false;  // true when the domain has been mapped onto [0, 1]

  static GridSpec uniform(double length, Index nodes, bool scaled = false) {
    GridSpec g{length, nodes, scaled};
    g.validate();
    return g;
  }

  /// Builds a grid from explicit node coordinates; only uniform spacing is accepted.
  static GridSpec from_coordinates(const Eigen::VectorXd& x) {
    detail::require(x.size() >= 2, "grid needs at least 2 nodes, got " + std::to_string(x.size()));
    detail::require(std::abs(x(0)) <= 1e-12 * std::abs(x(x.size() - 1)),
                    "grid must start at x = 0");
    const double h = (x(x.size() - 1) - x(0)) / static_cast<double>(x.size() - 1);
    for (Index i = 1; i < x.size(); ++i) {
      if (std::abs((x(i) - x(i - 1)) - h) > 1e-9 * h) {
        throw ValidationError("non-uniform grid rejected (spacing differs at node " +
                              std::to_string(i) + ")");
      }
    }
    return uniform(x(x.size() - 1) - x(0), x.size());
  }

  double dx() const { return length / static_cast<double>(nodes - 1); }

  Eigen::VectorXd coordinates() const {
    return Eigen::VectorXd::LinSpaced(nodes, 0.0, length);
  }

  void validate() const {
    detail::require(nodes >= 2, "grid needs at least 2 nodes, got " + std::to_string(nodes));
    detail::require(std::isfinite(length) && length > 0.0, "grid length must be positive");
  }
};

enum class RightBoundary { Open };

/// Boundary configuration of one pipe segment. For the series path the inflow
/// and outflow index sets of the junction balance are singletons.
struct BoundarySpec {
  std::function<double(double)> inflow = [](double) { return 0.0; };
  RightBoundary right = RightBoundary::Open;
  std::vector<int> inflow_set{0};
  std::vector<int> outflow_set{1};

  void validate() const {
    for (int i : inflow_set) {
      for (int o : outflow_set) {
        detail::require(i != o, "junction inflow and outflow sets must be disjoint (index " +
                                    std::to_string(i) + " in both)");
      }
    }
  }
};

/// Upwind convection operator: -1/dx on the diagonal, +1/dx on the first subdiagonal.
inline SparseMatrix build_q1(const GridSpec& grid) {
  grid.validate();
  const Index n = grid.nodes;
  const double w = 1.0 / grid.dx();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(2 * n));
  for (Index i = 0; i < n; ++i) {
    t.emplace_back(i, i, -w);
    if (i > 0) t.emplace_back(i, i - 1, w);
  }
  SparseMatrix q(n, n);
  q.setFromTriplets(t.begin(), t.end());
  return q;
}

/// Central diffusion operator scaled by 1/dx^2; the last diagonal entry is -1
/// (zero-gradient ghost point at the open outflow).
inline SparseMatrix build_q2(const GridSpec& grid) {
  grid.validate();
  const Index n = grid.nodes;
  const double w = 1.0 / (grid.dx() * grid.dx());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(3 * n));
  for (Index i = 0; i < n; ++i) {
    t.emplace_back(i, i, (i == n - 1 ? -1.0 : -2.0) * w);
    if (i > 0) t.emplace_back(i, i - 1, w);
    if (i + 1 < n) t.emplace_back(i, i + 1, w);
  }
  SparseMatrix q(n, n);
  q.setFromTriplets(t.begin(), t.end());
  return q;
}

struct InputVectors {
  Eigen::VectorXd source;    // b1, distributes s(t) to every node
  Eigen::VectorXd boundary;  // b2, carries the inflow term phi(t) into node 1
};

inline InputVectors build_input_vectors(const GridSpec& grid) {
  grid.validate();
  InputVectors b{Eigen::VectorXd::Ones(grid.nodes), Eigen::VectorXd::Zero(grid.nodes)};
  b.boundary(0) = 1.0 / (grid.dx() * grid.dx());
  return b;
}

/// Inflow ghost-point term phi = dx*v*g + D*g.
inline double boundary_input_phi(double velocity, double diffusivity, double boundary_value,
                                 double dx) {
  detail::require(dx > 0.0, "dx must be positive");
  return dx * velocity * boundary_value + diffusivity * boundary_value;
}

/// Advective-diffusive flux v*q - D*dq/dx.
inline double flux(double q, double dq_dx, double velocity, double diffusivity) {
  return velocity * q - diffusivity * dq_dx;
}

inline double junction_residual(std::span<const double> influxes,
                                std::span<const double> outfluxes) {
  return std::accumulate(influxes.begin(), influxes.end(), 0.0) -
         std::accumulate(outfluxes.begin(), outfluxes.end(), 0.0);
}

/// Boundary value g_b of a downstream pipe in a series junction. The
/// downstream inflow flux through its ghost point is
///   v*g_b - D*(q_1 - g_b)/dx,
/// which is linear in g_b, so the balance against `upstream_flux` is solved directly.
inline double series_junction_value(double upstream_flux, double velocity, double diffusivity,
                                    double first_node_value, double dx) {
  detail::require(dx > 0.0, "dx must be positive");
  const double slope = velocity + diffusivity / dx;
  detail::require(slope > 0.0, "series junction needs v + D/dx > 0");
  return (upstream_flux + diffusivity * first_node_value / dx) / slope;
}

/// Flux entering the first node of a pipe through the inflow ghost point.
inline double inflow_flux(double boundary_value, double first_node_value, double velocity,
                          double diffusivity, double dx) {
  return flux(boundary_value, (first_node_value - boundary_value) / dx, velocity, diffusivity);
}

}  // namespace adrmor
