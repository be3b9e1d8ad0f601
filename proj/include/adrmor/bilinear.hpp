#pragma once

// Standard bilinear state-space model
//   dq/dt = A q + sum_i u_i Q_i q + B u,   y = C q
// with the input-major Kronecker convention: the mode-1 matricization
// [Q_1 Q_2 ... Q_m] applied to u (x) q equals sum_i u_i Q_i q.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <string>
#include <vector>

#include "adrmor/errors.hpp"
#include "adrmor/grid.hpp"
#include "adrmor/signals.hpp"

namespace adrmor {

using Vector5 = Eigen::Matrix<double, 5, 1>;

struct BilinearSystem {
  Eigen::MatrixXd A;
  std::vector<SparseMatrix> slices;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
  std::vector<std::string> input_labels;
  double dx = 0.0;  // grid spacing used for the phi channel; 0 when not grid-based

  Index state_dim() const { return A.rows(); }
  Index input_dim() const { return B.cols(); }
  Index output_dim() const { return C.rows(); }

  void validate() const {
    const Index n = A.rows();
    detail::require(n > 0 && A.cols() == n, "A must be square and nonempty");
    detail::require(static_cast<Index>(slices.size()) == B.cols(),
                    "slice count (" + std::to_string(slices.size()) + ") must equal input dimension (" +
                        std::to_string(B.cols()) + ")");
    detail::require(B.rows() == n, "B row count must equal state dimension");
    detail::require(C.cols() == n, "C column count must equal state dimension");
    for (std::size_t i = 0; i < slices.size(); ++i) {
      detail::require(slices[i].rows() == n && slices[i].cols() == n,
                      "slice " + std::to_string(i) + " must be n x n");
    }
    detail::require(input_labels.empty() || input_labels.size() == slices.size(),
                    "input label count must equal input dimension");
  }

  Eigen::MatrixXd dense_slice(std::size_t i) const { return Eigen::MatrixXd(slices.at(i)); }

  /// Mode-1 matricization [Q_1 ... Q_m], n x (n*m).
  Eigen::MatrixXd matricized() const {
    const Index n = state_dim();
    Eigen::MatrixXd out(n, n * static_cast<Index>(slices.size()));
    for (std::size_t i = 0; i < slices.size(); ++i) {
      out.middleCols(static_cast<Index>(i) * n, n) = dense_slice(i);
    }
    return out;
  }

  double spectral_abscissa() const {
    return A.eigenvalues().real().maxCoeff();
  }
};

inline const std::vector<std::string>& adr_input_labels() {
  static const std::vector<std::string> labels{"v", "D", "r+1", "s", "phi"};
  return labels;
}

/// Bilinear FOM of the discretized ADR equation: A = -I, slices [Q1, Q2, I, 0, 0],
/// B = [0 0 0 b1 b2], C = I.
inline BilinearSystem assemble_fom(const GridSpec& grid, const BoundarySpec& bc = {}) {
  grid.validate();
  bc.validate();
  const Index n = grid.nodes;
  BilinearSystem sys;
  sys.A = -Eigen::MatrixXd::Identity(n, n);
  SparseMatrix eye(n, n);
  eye.setIdentity();
  sys.slices = {build_q1(grid), build_q2(grid), eye, SparseMatrix(n, n), SparseMatrix(n, n)};
  const InputVectors b = build_input_vectors(grid);
  sys.B = Eigen::MatrixXd::Zero(n, 5);
  sys.B.col(3) = b.source;
  sys.B.col(4) = b.boundary;
  sys.C = Eigen::MatrixXd::Identity(n, n);
  sys.input_labels = adr_input_labels();
  sys.dx = grid.dx();
  return sys;
}

struct AugmentedInput {
  Vector5 values;  // [v, D, r+1, s, phi]
  double raw_reaction = 0.0;
};

inline AugmentedInput augment_input(double v, double D, double r, double s, double g, double dx) {
  detail::require(dx > 0.0, "dx must be positive");
  if (v < 0.0) {
    throw ValidationError("negative velocity " + std::to_string(v) +
                          " rejected: the upwind stencil assumes flow in +x");
  }
  AugmentedInput u;
  u.values << v, D, r + 1.0, s, boundary_input_phi(v, D, g, dx);
  u.raw_reaction = r;
  return u;
}

inline AugmentedInput augment_input(const CoefficientSignals& sig, double t, double dx) {
  return augment_input(sig.velocity(t), sig.diffusivity(t), sig.reaction(t), sig.source(t),
                       sig.boundary(t), dx);
}

inline Eigen::VectorXd rhs(const BilinearSystem& sys, const Eigen::VectorXd& q,
                           const Eigen::VectorXd& u) {
  detail::require(q.size() == sys.state_dim(), "state dimension mismatch in rhs");
  detail::require(u.size() == sys.input_dim(), "input dimension mismatch in rhs");
  Eigen::VectorXd out = sys.A * q + sys.B * u;
  for (std::size_t i = 0; i < sys.slices.size(); ++i) {
    const double ui = u(static_cast<Index>(i));
    if (ui != 0.0) out += ui * (sys.slices[i] * q);
  }
  return out;
}

/// Maps physical (x, t) onto x/L in [0, 1] and t/t_ref.
struct ScaleMap {
  double length = 1.0;
  double t_ref = 1.0;

  double time_to_scaled(double t) const { return t / t_ref; }
  double time_to_physical(double tau) const { return tau * t_ref; }
};

struct ScaledProblem {
  GridSpec grid;
  CoefficientSignals signals;
  ScaleMap map;
};

/// v <- v t_ref/L, D <- D t_ref/L^2, r <- r t_ref, s <- s t_ref; g unchanged.
inline ScaledProblem scale_system(const GridSpec& grid, const CoefficientSignals& sig, double t_ref) {
  grid.validate();
  detail::require(std::isfinite(t_ref) && t_ref > 0.0, "t_ref must be positive");
  const double L = grid.length;
  ScaledProblem p;
  p.map = {L, t_ref};
  p.grid = GridSpec::uniform(1.0, grid.nodes, true);
  p.signals.velocity = sig.velocity.rescaled(t_ref, t_ref / L);
  p.signals.diffusivity = sig.diffusivity.rescaled(t_ref, t_ref / (L * L));
  p.signals.reaction = sig.reaction.rescaled(t_ref, t_ref);
  p.signals.source = sig.source.rescaled(t_ref, t_ref);
  p.signals.boundary = sig.boundary.rescaled(t_ref, 1.0);
  p.signals.t0 = sig.t0 / t_ref;
  p.signals.t_end = sig.t_end / t_ref;
  return p;
}

/// Inverse of scale_system for the grid and the signals.
inline std::pair<GridSpec, CoefficientSignals> unscale_system(const ScaledProblem& p) {
  const double L = p.map.length;
  const double t_ref = p.map.t_ref;
  const double inv = 1.0 / t_ref;
  CoefficientSignals sig;
  sig.velocity = p.signals.velocity.rescaled(inv, L / t_ref);
  sig.diffusivity = p.signals.diffusivity.rescaled(inv, L * L / t_ref);
  sig.reaction = p.signals.reaction.rescaled(inv, 1.0 / t_ref);
  sig.source = p.signals.source.rescaled(inv, 1.0 / t_ref);
  sig.boundary = p.signals.boundary.rescaled(inv, 1.0);
  sig.t0 = p.signals.t0 * t_ref;
  sig.t_end = p.signals.t_end * t_ref;
  return {GridSpec::uniform(L, p.grid.nodes, false), sig};
}

/// Default reference time: L over the peak velocity sampled on the horizon.
inline double default_t_ref(const GridSpec& grid, const CoefficientSignals& sig, int samples = 4000) {
  double vmax = 0.0;
  for (int k = 0; k <= samples; ++k) {
    vmax = std::max(vmax, sig.velocity(sig.t0 + (sig.t_end - sig.t0) * k / samples));
  }
  detail::require(vmax > 0.0, "default t_ref needs a positive peak velocity");
  return grid.length / vmax;
}

}  // namespace adrmor
