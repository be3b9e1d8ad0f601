#pragma once

// Dense Lyapunov/Sylvester solvers (complex Schur back-substitution), their
// generalized bilinear counterparts (fixed point), Gramians and H2 norms.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "adrmor/bilinear.hpp"
#include "adrmor/errors.hpp"

namespace adrmor {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;

/// M = U T U^* with T upper triangular.
struct SchurFactor {
  MatrixXcd U;
  MatrixXcd T;

  static SchurFactor of(const MatrixXd& M) {
    detail::require(M.rows() == M.cols() && M.rows() > 0, "Schur factor needs a square matrix");
    detail::require(M.allFinite(), "Schur factor needs a finite matrix");
    Eigen::ComplexSchur<MatrixXcd> schur(M.cast<std::complex<double>>());
    if (schur.info() != Eigen::Success) throw NumericalError("complex Schur decomposition did not converge");
    return {schur.matrixU(), schur.matrixT()};
  }

  double spectral_abscissa() const { return T.diagonal().real().maxCoeff(); }
};

/// Solves A X + X B^T + F = 0 for X (n x r), reusing Schur factors of A and B.
class SylvesterSolver {
 public:
  SylvesterSolver(const MatrixXd& A, const MatrixXd& B)
      : left_(std::make_shared<SchurFactor>(SchurFactor::of(A))),
        right_(A.rows() == B.rows() && A == B ? left_ : std::make_shared<SchurFactor>(SchurFactor::of(B))) {}

  SylvesterSolver(std::shared_ptr<const SchurFactor> left, std::shared_ptr<const SchurFactor> right)
      : left_(std::move(left)), right_(std::move(right)) {}

  Index rows() const { return left_->T.rows(); }
  Index cols() const { return right_->T.rows(); }
  const SchurFactor& left() const { return *left_; }
  const SchurFactor& right() const { return *right_; }
  std::shared_ptr<const SchurFactor> left_ptr() const { return left_; }

  MatrixXd solve(const MatrixXd& F) const {
    const Index n = rows();
    const Index r = cols();
    detail::require(F.rows() == n && F.cols() == r, "Sylvester right-hand side has wrong shape");
    const MatrixXcd& T = left_->T;
    const MatrixXcd& S = right_->T;
    // With A = U T U^*, B = Z S Z^*, X = U Y Z^T:  T Y + Y S^T = -U^* F conj(Z).
    MatrixXcd G = -(left_->U.adjoint() * F.cast<std::complex<double>>()) * right_->U.conjugate();
    MatrixXcd Y(n, r);
    const double scale = T.cwiseAbs().maxCoeff() + S.cwiseAbs().maxCoeff();
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::max(scale, 1e-300);
    Eigen::VectorXcd y(n);
    for (Index k = r - 1; k >= 0; --k) {
      y = G.col(k);
      if (k + 1 < r) y.noalias() -= Y.rightCols(r - k - 1) * S.row(k).tail(r - k - 1).transpose();
      const std::complex<double> shift = S(k, k);
      for (Index j = n - 1; j >= 0; --j) {
        const std::complex<double> d = T(j, j) + shift;
        if (std::abs(d) <= floor) {
          std::ostringstream msg;
          msg << "Sylvester breakdown: eigenvalues " << T(j, j) << " of the left and " << -shift
              << " of the negated right coefficient coincide";
          throw NumericalError(msg.str());
        }
        y(j) /= d;
        if (j > 0) y.head(j).noalias() -= T.col(j).head(j) * y(j);
      }
      Y.col(k) = y;
    }
    return (left_->U * Y * right_->U.transpose()).real();
  }

 private:
  std::shared_ptr<const SchurFactor> left_;
  std::shared_ptr<const SchurFactor> right_;
};

namespace detail {

inline void require_stable(const SchurFactor& f, const char* what) {
  const double a = f.spectral_abscissa();
  if (!(a < 0.0)) {
    throw ValidationError(std::string(what) + " is not stable (max real eigenvalue part " +
                          std::to_string(a) + ")");
  }
}

inline bool is_zero_slice(const SparseMatrix& m) {
  for (Index k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      if (it.value() != 0.0) return false;
    }
  }
  return true;
}
inline bool is_zero_slice(const MatrixXd& m) { return m.isZero(0.0); }

/// sum_i N_i X Nh_i^T over the nonzero slice pairs.
template <typename L, typename R>
MatrixXd bilinear_term(const std::vector<L>& N, const std::vector<R>& Nh, const MatrixXd& X,
                       const std::vector<char>& active) {
  MatrixXd out = MatrixXd::Zero(X.rows(), X.cols());
  for (std::size_t i = 0; i < N.size(); ++i) {
    if (!active[i]) continue;
    MatrixXd t = N[i] * X;
    out.noalias() += t * Nh[i].transpose();
  }
  return out;
}

template <typename L, typename R>
std::vector<char> active_pairs(const std::vector<L>& N, const std::vector<R>& Nh) {
  require(N.size() == Nh.size(), "slice lists must have equal length");
  std::vector<char> a(N.size());
  for (std::size_t i = 0; i < N.size(); ++i) a[i] = !(is_zero_slice(N[i]) || is_zero_slice(Nh[i]));
  return a;
}

}  // namespace detail

inline MatrixXd solve_sylvester(const MatrixXd& A, const MatrixXd& Ahat, const MatrixXd& RHS) {
  return SylvesterSolver(A, Ahat).solve(RHS);
}

/// A X + X A^T + RHS = 0 for stable A.
inline MatrixXd solve_lyapunov(const MatrixXd& A, const MatrixXd& RHS) {
  SylvesterSolver s(A, A);
  detail::require_stable(s.left(), "Lyapunov coefficient A");
  MatrixXd X = s.solve(RHS);
  return 0.5 * (X + X.transpose());
}

struct SolveOptions {
  double tol = 1e-8;
  int max_iter = 500;
};

struct SolveReport {
  int iterations = 0;
  double residual = 0.0;           // relative to ||RHS||_F
  std::vector<double> history;     // residual after each fixed-point sweep
  bool converged = false;
};

/// Fixed point for A X + X Ah^T + sum_i N_i X Nh_i^T + RHS = 0 on top of a
/// prepared standard solver. `symmetric` symmetrizes each iterate.
template <typename L, typename R>
MatrixXd solve_generalized(const SylvesterSolver& base, const std::vector<L>& N,
                           const std::vector<R>& Nh, const MatrixXd& RHS, bool symmetric,
                           const SolveOptions& opt = {}, SolveReport* report = nullptr) {
  const std::vector<char> active = detail::active_pairs(N, Nh);
  SolveReport rep;
  const double fnorm = RHS.norm();
  auto sym = [&](MatrixXd& X) {
    if (symmetric) X = 0.5 * (X + X.transpose()).eval();
  };
  MatrixXd X = base.solve(RHS);
  sym(X);
  const bool any = std::any_of(active.begin(), active.end(), [](char c) { return c != 0; });
  if (fnorm == 0.0 || !any) {
    rep.converged = true;
    rep.iterations = 1;
    if (report) *report = rep;
    return X;
  }
  MatrixXd pi_prev = MatrixXd::Zero(X.rows(), X.cols());
  double best = std::numeric_limits<double>::infinity();
  for (int it = 1;; ++it) {
    MatrixXd pi = detail::bilinear_term(N, Nh, X, active);
    const double res = (pi - pi_prev).norm() / fnorm;
    rep.history.push_back(res);
    rep.residual = res;
    rep.iterations = it;
    if (res <= opt.tol) {
      rep.converged = true;
      break;
    }
    if (!std::isfinite(res) || res > 1e3 * best) {
      if (report) *report = rep;
      std::ostringstream msg;
      msg << "generalized matrix equation diverged at iteration " << it << " (residual " << res
          << "); the bilinear term is not contractive, scale time (larger t_ref) or damp the inputs";
      throw NumericalError(msg.str());
    }
    best = std::min(best, res);
    if (it >= opt.max_iter) {
      if (report) *report = rep;
      std::ostringstream msg;
      msg << "generalized matrix equation did not converge in " << opt.max_iter
          << " iterations (last residual " << res << "); try stronger time scaling";
      throw NumericalError(msg.str());
    }
    X = base.solve(RHS + pi);
    sym(X);
    pi_prev = std::move(pi);
  }
  if (report) *report = rep;
  return X;
}

template <typename S>
MatrixXd solve_generalized_lyapunov(const MatrixXd& A, const std::vector<S>& N, const MatrixXd& RHS,
                                    const SolveOptions& opt = {}, SolveReport* report = nullptr) {
  SylvesterSolver s(A, A);
  detail::require_stable(s.left(), "Lyapunov coefficient A");
  return solve_generalized(s, N, N, RHS, true, opt, report);
}

template <typename L, typename R>
MatrixXd solve_generalized_sylvester(const MatrixXd& A, const std::vector<L>& N, const MatrixXd& Ahat,
                                     const std::vector<R>& Nhat, const MatrixXd& RHS,
                                     const SolveOptions& opt = {}, SolveReport* report = nullptr) {
  SylvesterSolver s(A, Ahat);
  return solve_generalized(s, N, Nhat, RHS, false, opt, report);
}

struct GramianPair {
  MatrixXd P;
  MatrixXd Q_obs;
  double residual_P = 0.0;
  double residual_Q = 0.0;
};

inline std::vector<SparseMatrix> transposed(const std::vector<SparseMatrix>& N) {
  std::vector<SparseMatrix> out;
  out.reserve(N.size());
  for (const auto& m : N) out.emplace_back(m.transpose());
  return out;
}

inline std::vector<MatrixXd> transposed(const std::vector<MatrixXd>& N) {
  std::vector<MatrixXd> out;
  out.reserve(N.size());
  for (const auto& m : N) out.emplace_back(m.transpose());
  return out;
}

/// Frobenius residual of A X + X Ah^T + sum N X Nh^T + F relative to ||F||.
template <typename L, typename R>
double generalized_residual(const MatrixXd& A, const std::vector<L>& N, const MatrixXd& Ah,
                            const std::vector<R>& Nh, const MatrixXd& F, const MatrixXd& X) {
  MatrixXd r = A * X + X * Ah.transpose() + F;
  for (std::size_t i = 0; i < N.size(); ++i) {
    MatrixXd t = N[i] * X;
    r.noalias() += t * Nh[i].transpose();
  }
  const double f = F.norm();
  return f > 0.0 ? r.norm() / f : r.norm();
}

inline GramianPair gramians(const BilinearSystem& sys, const SolveOptions& opt = {}) {
  sys.validate();
  GramianPair g;
  const MatrixXd BBt = sys.B * sys.B.transpose();
  const MatrixXd CtC = sys.C.transpose() * sys.C;
  g.P = solve_generalized_lyapunov(sys.A, sys.slices, BBt, opt);
  const MatrixXd At = sys.A.transpose();
  const auto Nt = transposed(sys.slices);
  g.Q_obs = solve_generalized_lyapunov(At, Nt, CtC, opt);
  g.residual_P = generalized_residual(sys.A, sys.slices, sys.A, sys.slices, BBt, g.P);
  g.residual_Q = generalized_residual(At, Nt, At, Nt, CtC, g.Q_obs);
  return g;
}

inline double h2_norm(const BilinearSystem& sys, const SolveOptions& opt = {}) {
  sys.validate();
  if (sys.C.isZero(0.0) || sys.B.isZero(0.0)) return 0.0;
  const MatrixXd P = solve_generalized_lyapunov(sys.A, sys.slices, sys.B * sys.B.transpose(), opt);
  return std::sqrt(std::max(0.0, (sys.C * P * sys.C.transpose()).trace()));
}

/// H2 norm of the explicitly assembled error system diag(fom, rom) with output C_e = [C, -Chat].
inline double h2_error(const BilinearSystem& fom, const BilinearSystem& rom, const SolveOptions& opt = {}) {
  fom.validate();
  rom.validate();
  detail::require(fom.input_dim() == rom.input_dim(), "h2_error: input dimensions differ");
  detail::require(fom.output_dim() == rom.output_dim(), "h2_error: output dimensions differ");
  const Index n = fom.state_dim();
  const Index r = rom.state_dim();
  BilinearSystem e;
  e.A = MatrixXd::Zero(n + r, n + r);
  e.A.topLeftCorner(n, n) = fom.A;
  e.A.bottomRightCorner(r, r) = rom.A;
  for (std::size_t i = 0; i < fom.slices.size(); ++i) {
    MatrixXd blk = MatrixXd::Zero(n + r, n + r);
    blk.topLeftCorner(n, n) = fom.dense_slice(i);
    blk.bottomRightCorner(r, r) = rom.dense_slice(i);
    e.slices.push_back(blk.sparseView());
  }
  e.B.resize(n + r, fom.input_dim());
  e.B << fom.B, rom.B;
  e.C.resize(fom.output_dim(), n + r);
  e.C << fom.C, -rom.C;
  return h2_norm(e, opt);
}

/// Block evaluator of the same error norm that caches the FOM Gramian:
/// E^2 = tr(C P C^T) - 2 tr(C X Ch^T) + tr(Ch Ph Ch^T).
class H2ErrorEvaluator {
 public:
  template <typename S>
  H2ErrorEvaluator(const MatrixXd& A, const std::vector<S>& N, const MatrixXd& B, const MatrixXd& C,
                   const SolveOptions& opt = {})
      : opt_(opt), C_(C) {
    SylvesterSolver s(A, A);
    detail::require_stable(s.left(), "state matrix");
    P_ = solve_generalized(s, N, N, B * B.transpose(), true, opt, &report_);
    fom_sq_ = std::max(0.0, (C * P_ * C.transpose()).trace());
  }

  const MatrixXd& fom_gramian() const { return P_; }
  const SolveReport& fom_report() const { return report_; }
  double fom_norm() const { return std::sqrt(fom_sq_); }

  /// `cross` solves A X + X Ah^T + sum N X Nh^T + B Bh^T = 0.
  double evaluate(const MatrixXd& Ah, const std::vector<MatrixXd>& Nh, const MatrixXd& Bh,
                  const MatrixXd& Ch, const MatrixXd& cross) const {
    const MatrixXd Ph = solve_generalized_lyapunov(Ah, Nh, Bh * Bh.transpose(), opt_);
    const double e2 = fom_sq_ - 2.0 * (C_ * cross * Ch.transpose()).trace() +
                      (Ch * Ph * Ch.transpose()).trace();
    return std::sqrt(std::max(0.0, e2));
  }

 private:
  SolveOptions opt_;
  MatrixXd C_;
  MatrixXd P_;
  SolveReport report_;
  double fom_sq_ = 0.0;
};

/// Power-iteration estimate of the spectral radius of X -> L_A^{-1}(sum N X N^T),
/// L_A(X) = A X + X A^T; the generalized Gramian exists iff this is < 1 (A stable).
template <typename S>
double estimate_contraction(const SylvesterSolver& lyap, const std::vector<S>& N, int iterations = 60) {
  const std::vector<char> active = detail::active_pairs(N, N);
  const Index n = lyap.rows();
  MatrixXd X = MatrixXd::Identity(n, n) / std::sqrt(static_cast<double>(n));
  double rho = 0.0;
  for (int k = 0; k < iterations; ++k) {
    MatrixXd Y = lyap.solve(detail::bilinear_term(N, N, X, active));
    Y = 0.5 * (Y + Y.transpose()).eval();
    const double ny = Y.norm();
    rho = ny;  // ||X|| == 1
    if (!(ny > 0.0) || !std::isfinite(ny)) break;
    X = Y / ny;
  }
  return rho;
}

inline MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  }
  return k;
}

/// Exact spectral radius of (I (x) A + A (x) I)^{-1} sum N (x) N; small systems only.
inline double exact_contraction(const MatrixXd& A, const std::vector<MatrixXd>& N) {
  const Index n = A.rows();
  detail::require(n <= 40, "exact_contraction is meant for small systems");
  const MatrixXd I = MatrixXd::Identity(n, n);
  const MatrixXd L = kron(I, A) + kron(A, I);
  MatrixXd Pi = MatrixXd::Zero(n * n, n * n);
  for (const auto& m : N) Pi += kron(m, m);
  const MatrixXd M = L.partialPivLu().solve(Pi);
  return M.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace adrmor
