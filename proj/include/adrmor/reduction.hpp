#pragma once

// Petrov-Galerkin projection, H2-optimal bilinear reduction by two-sided
// Sylvester iteration, and the POD-Galerkin baseline.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "adrmor/bilinear.hpp"
#include "adrmor/errors.hpp"
#include "adrmor/matrix_equations.hpp"

namespace adrmor {

struct ReductionResult {
  MatrixXd V;
  MatrixXd W;
  MatrixXd T;
  BilinearSystem rom;
  std::vector<double> error_history;
  bool converged = false;
  int iterations = 0;
  int restarts = 0;
  double basis_condition = 1.0;  // cond(W^T V)
  double captured_energy = std::numeric_limits<double>::quiet_NaN();  // POD only
  double frame_contraction = 0.0;
};

namespace detail {

inline double condition_number(const MatrixXd& M) {
  Eigen::JacobiSVD<MatrixXd> svd(M);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 1.0;
  const double lo = s(s.size() - 1);
  return lo > 0.0 ? s(0) / lo : std::numeric_limits<double>::infinity();
}

/// Makes the first entry of each column with magnitude above the noise floor positive.
inline void fix_signs(MatrixXd& V) {
  for (Index j = 0; j < V.cols(); ++j) {
    const double floor = 1e-12 * V.col(j).cwiseAbs().maxCoeff();
    for (Index i = 0; i < V.rows(); ++i) {
      if (std::abs(V(i, j)) > floor) {
        if (V(i, j) < 0.0) V.col(j) *= -1.0;
        break;
      }
    }
  }
}

inline MatrixXd orthonormalize(const MatrixXd& X) {
  Eigen::HouseholderQR<MatrixXd> qr(X);
  MatrixXd Q = qr.householderQ() * MatrixXd::Identity(X.rows(), X.cols());
  fix_signs(Q);
  return Q;
}

inline MatrixXd petrov_galerkin_left(const MatrixXd& V, const MatrixXd& W, double* cond) {
  detail::require(V.rows() == W.rows() && V.cols() == W.cols(), "V and W must have equal shapes");
  detail::require(V.cols() >= 1 && V.cols() <= V.rows(), "basis must have 1 <= n <= N columns");
  const MatrixXd WtV = W.transpose() * V;
  const double c = condition_number(WtV);
  if (cond) *cond = c;
  if (!(c <= 1e12)) {
    std::ostringstream msg;
    msg << "W^T V is numerically singular (condition number " << c << ")";
    throw NumericalError(msg.str());
  }
  return WtV.partialPivLu().solve(W.transpose());
}

}  // namespace detail

/// Ahat = T A V, Qhat_i = T Q_i V, Bhat = T B, Chat = C V with T = (W^T V)^{-1} W^T.
inline BilinearSystem project(const BilinearSystem& fom, const MatrixXd& V, const MatrixXd& W,
                              double* condition = nullptr, MatrixXd* T_out = nullptr) {
  fom.validate();
  detail::require(V.rows() == fom.state_dim(), "basis row count must equal the FOM state dimension");
  const MatrixXd T = detail::petrov_galerkin_left(V, W, condition);
  BilinearSystem rom;
  rom.A = T * fom.A * V;
  for (const auto& q : fom.slices) {
    const MatrixXd qv = q * V;
    rom.slices.push_back(MatrixXd(T * qv).sparseView());
  }
  rom.B = T * fom.B;
  rom.C = fom.C * V;
  rom.input_labels = fom.input_labels;
  rom.dx = fom.dx;
  if (T_out) *T_out = T;
  return rom;
}

/// Per-channel mean, standard deviation and RMS of an input history (channels x samples).
struct InputStatistics {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
  Eigen::VectorXd rms;

  static InputStatistics from_samples(const MatrixXd& U) {
    detail::require(U.cols() > 0, "input statistics need at least one sample");
    InputStatistics s;
    const double k = static_cast<double>(U.cols());
    s.mean = U.rowwise().sum() / k;
    s.rms = (U.array().square().rowwise().sum() / k).sqrt();
    s.stddev = (s.rms.array().square() - s.mean.array().square()).max(0.0).sqrt();
    return s;
  }
};

struct FrameOptions {
  double kappa = 0.5;                // target log-norm of the shifted A, relative to the nominal operator
  double target_contraction = 0.1;   // bilinear term gain after uniform input rescaling
  double variation_floor = 0.05;     // minimum slice weight relative to |mean|
  double input_floor = 1e-3;         // minimum B-channel weight relative to the largest
  int power_iterations = 60;
};

/// Input-output equivalent realization used to compute the bases:
///   A' = A + sum_i offset_i N_i,  N_i' = gamma_i N_i,  B' = B diag(gamma),
/// driven by (u - offset) / gamma. Offsets only act on channels without a B column.
struct ReductionFrame {
  Eigen::VectorXd offset;
  Eigen::VectorXd gamma;
  MatrixXd A;
  std::vector<SparseMatrix> slices;
  MatrixXd B;
  MatrixXd C;
  double contraction = 0.0;
  double nominal_log_norm = 0.0;
  double log_norm = 0.0;
  std::shared_ptr<const SylvesterSolver> lyap;
};

namespace detail {

inline double log_norm(const MatrixXd& A) {
  const MatrixXd S = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

/// c if M == c I exactly, otherwise nullopt.
inline std::optional<double> identity_multiple(const SparseMatrix& M) {
  if (M.rows() != M.cols() || M.rows() == 0) return std::nullopt;
  std::vector<double> diag(static_cast<std::size_t>(M.rows()), 0.0);
  for (Index j = 0; j < M.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(M, j); it; ++it) {
      if (it.value() == 0.0) continue;
      if (it.row() != j) return std::nullopt;
      diag[static_cast<std::size_t>(j)] = it.value();
    }
  const double c = diag.front();
  if (c == 0.0) return std::nullopt;
  for (double d : diag)
    if (d != c) return std::nullopt;
  return c;
}

}  // namespace detail

inline ReductionFrame make_reduction_frame(const BilinearSystem& fom, const std::optional<InputStatistics>& stats,
                                           const FrameOptions& opt = {}, double gamma_scale = 1.0) {
  fom.validate();
  const Index m = fom.input_dim();
  if (stats) {
    detail::require(stats->mean.size() == m && stats->rms.size() == m && stats->stddev.size() == m,
                    "input statistics have the wrong number of channels");
  }
  std::vector<char> has_slice(static_cast<std::size_t>(m)), has_b(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    has_slice[static_cast<std::size_t>(i)] = !detail::is_zero_slice(fom.slices[static_cast<std::size_t>(i)]);
    has_b[static_cast<std::size_t>(i)] = !fom.B.col(i).isZero(0.0);
  }
  auto pure_slice = [&](Index i) { return has_slice[static_cast<std::size_t>(i)] && !has_b[static_cast<std::size_t>(i)]; };

  ReductionFrame f;
  f.offset = Eigen::VectorXd::Zero(m);
  f.gamma = Eigen::VectorXd::Ones(m);
  f.C = fom.C;

  MatrixXd A_nom = fom.A;
  if (stats) {
    std::optional<Index> id_channel;
    double id_coef = 0.0;
    for (Index i = 0; i < m; ++i) {
      if (!pure_slice(i)) continue;
      f.offset(i) = stats->mean(i);
      A_nom += stats->mean(i) * MatrixXd(fom.slices[static_cast<std::size_t>(i)]);
      if (!id_channel) {
        if (auto c = detail::identity_multiple(fom.slices[static_cast<std::size_t>(i)])) {
          id_channel = i;
          id_coef = *c;
        }
      }
    }
    f.nominal_log_norm = detail::log_norm(A_nom);
    if (id_channel) {
      const double mu = f.nominal_log_norm;
      const double target = mu < 0.0 ? opt.kappa * mu : -opt.kappa * std::max(std::abs(mu), 1.0);
      f.offset(*id_channel) += (target - mu) / id_coef;
    }
  } else {
    f.nominal_log_norm = detail::log_norm(A_nom);
  }

  f.A = fom.A;
  for (Index i = 0; i < m; ++i)
    if (f.offset(i) != 0.0) f.A += f.offset(i) * MatrixXd(fom.slices[static_cast<std::size_t>(i)]);
  auto schur = std::make_shared<SchurFactor>(SchurFactor::of(f.A));
  if (!(schur->spectral_abscissa() < 0.0)) {
    // Offsets destabilize the frame; fall back to the literal realization.
    f.offset.setZero();
    f.A = fom.A;
    schur = std::make_shared<SchurFactor>(SchurFactor::of(f.A));
  }
  detail::require_stable(*schur, "reduction frame state matrix");
  f.log_norm = detail::log_norm(f.A);
  f.lyap = std::make_shared<SylvesterSolver>(schur, schur);

  if (stats) {
    double max_b = 0.0;
    for (Index i = 0; i < m; ++i)
      if (has_b[static_cast<std::size_t>(i)]) max_b = std::max(max_b, stats->rms(i));
    for (Index i = 0; i < m; ++i) {
      if (has_b[static_cast<std::size_t>(i)]) {
        f.gamma(i) = max_b > 0.0 ? std::max(stats->rms(i), opt.input_floor * max_b) : 1.0;
      } else if (has_slice[static_cast<std::size_t>(i)]) {
        f.gamma(i) = std::max(std::sqrt(2.0) * stats->stddev(i), opt.variation_floor * std::abs(stats->mean(i)));
      } else {
        f.gamma(i) = 0.0;
      }
    }
  }

  auto scaled_slices = [&]() {
    std::vector<SparseMatrix> out;
    for (Index i = 0; i < m; ++i) {
      const double g = has_slice[static_cast<std::size_t>(i)] ? f.gamma(i) : 0.0;
      out.push_back(g * fom.slices[static_cast<std::size_t>(i)]);
    }
    return out;
  };
  f.slices = scaled_slices();
  const double rho = estimate_contraction(*f.lyap, f.slices, opt.power_iterations);
  const double s = (rho > 0.0 ? std::min(1.0, std::sqrt(opt.target_contraction / rho)) : 1.0) * gamma_scale;
  for (Index i = 0; i < m; ++i)
    if (has_slice[static_cast<std::size_t>(i)]) f.gamma(i) *= s;
  f.slices = scaled_slices();
  f.contraction = rho * s * s;
  f.B = fom.B * f.gamma.asDiagonal();
  return f;
}

struct H2Options {
  int order = 8;
  double tol = 1e-6;
  int max_iter = 100;
  int max_restarts = 3;
  unsigned long long seed = 0;
  SolveOptions solve{1e-8, 500};
  FrameOptions frame{};
  std::optional<InputStatistics> statistics;
  std::optional<MatrixXd> initial_V;
  std::optional<MatrixXd> initial_W;
};

namespace detail {

inline std::vector<MatrixXd> project_slices(const std::vector<SparseMatrix>& N, const MatrixXd& T, const MatrixXd& V) {
  std::vector<MatrixXd> out;
  out.reserve(N.size());
  for (const auto& q : N) {
    const MatrixXd qv = q * V;
    out.push_back(T * qv);
  }
  return out;
}

/// Mean-square stability of the frame ROM: Ahat Hurwitz and bilinear gain below one.
inline bool rom_ms_stable(const MatrixXd& Ah, const std::vector<MatrixXd>& Nh, double* gain) {
  const Eigen::VectorXcd ev = Ah.eigenvalues();
  if (!ev.allFinite() || !(ev.real().maxCoeff() < 0.0)) {
    *gain = std::numeric_limits<double>::infinity();
    return false;
  }
  std::vector<MatrixXd> active;
  for (const auto& n : Nh)
    if (!n.isZero(0.0)) active.push_back(n);
  if (active.empty()) {
    *gain = 0.0;
    return true;
  }
  *gain = Ah.rows() <= 20 ? exact_contraction(Ah, active) : estimate_contraction(SylvesterSolver(Ah, Ah), active, 200);
  return *gain < 1.0;
}

}  // namespace detail

/// H2-optimal reduction: alternate the two generalized Sylvester equations
/// for V and W, orthonormalize, project, and track the block H2 error of the
/// frame realization. Returns the lowest-error iterate.
inline ReductionResult reduce_h2(const BilinearSystem& fom, const H2Options& opt = {}) {
  fom.validate();
  const Index N = fom.state_dim();
  const Index n = opt.order;
  detail::require(n >= 1 && n <= N, "reduction order must satisfy 1 <= n <= N (n=" + std::to_string(n) +
                                        ", N=" + std::to_string(N) + ")");
  detail::require(opt.tol > 0.0 && opt.max_iter >= 1, "reduction needs tol > 0 and max_iter >= 1");
  detail::require(fom.spectral_abscissa() < 0.0, "FOM state matrix must be stable");

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss;
  std::ostringstream diag;
  for (int attempt = 0; attempt <= opt.max_restarts; ++attempt) {
    const double gscale = std::pow(std::sqrt(0.5), attempt);
    ReductionFrame frame;
    std::unique_ptr<H2ErrorEvaluator> eval;
    try {
      frame = make_reduction_frame(fom, opt.statistics, opt.frame, gscale);
      eval = std::make_unique<H2ErrorEvaluator>(frame.A, frame.slices, frame.B, frame.C, opt.solve);
    } catch (const NumericalError& e) {
      diag << " attempt " << attempt << ": frame Gramian failed (" << e.what() << ");";
      continue;
    }

    MatrixXd V, W;
    if (opt.initial_V) {
      V = *opt.initial_V;
      W = opt.initial_W ? *opt.initial_W : V;
      detail::require(V.rows() == N && V.cols() == n && W.rows() == N && W.cols() == n,
                      "initial bases must be N x n");
    } else {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(eval->fom_gramian());
      V = es.eigenvectors().rightCols(n).rowwise().reverse();
      W = V;
    }
    if (attempt > 0) {
      MatrixXd noise(N, n);
      for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < N; ++i) noise(i, j) = gauss(rng);
      V += 1e-3 * noise / std::sqrt(static_cast<double>(N));
      W = V;
    }
    V = detail::orthonormalize(V);
    W = detail::orthonormalize(W);

    const MatrixXd At = frame.A.transpose();
    auto lyap_t = std::make_shared<SchurFactor>(SchurFactor::of(At));
    const auto Nt = transposed(frame.slices);

    ReductionResult best;
    double best_err = std::numeric_limits<double>::infinity();
    std::vector<double> history;
    bool converged = false;
    bool failed = false;
    int it = 0;
    try {
      for (it = 1; it <= opt.max_iter; ++it) {
        double cond = 0.0;
        const MatrixXd T = detail::petrov_galerkin_left(V, W, &cond);
        const MatrixXd Ah = T * frame.A * V;
        const std::vector<MatrixXd> Nh = detail::project_slices(frame.slices, T, V);
        const MatrixXd Bh = T * frame.B;
        const MatrixXd Ch = frame.C * V;
        double gain = 0.0;
        if (!detail::rom_ms_stable(Ah, Nh, &gain)) {
          diag << " attempt " << attempt << ": unstable reduced model at iteration " << it << " (bilinear gain "
               << gain << ");";
          failed = true;
          break;
        }
        const SylvesterSolver sv(frame.lyap->left_ptr(), std::make_shared<SchurFactor>(SchurFactor::of(Ah)));
        const MatrixXd X = solve_generalized(sv, frame.slices, Nh, frame.B * Bh.transpose(), false, opt.solve);
        const double err = eval->evaluate(Ah, Nh, Bh, Ch, X);
        history.push_back(err);
        if (err < best_err) {
          best_err = err;
          best.V = V;
          best.W = W;
          best.basis_condition = cond;
        }
        if (err <= 1e-7 * eval->fom_norm()) {
          converged = true;
          break;
        }
        if (history.size() > 1 && std::abs(history[history.size() - 1] - history[history.size() - 2]) / err < opt.tol) {
          converged = true;
          break;
        }
        if (it == opt.max_iter) break;
        const MatrixXd AhT = Ah.transpose();
        const SylvesterSolver sw(lyap_t, std::make_shared<SchurFactor>(SchurFactor::of(AhT)));
        const MatrixXd Wn = solve_generalized(sw, Nt, transposed(Nh), frame.C.transpose() * Ch, false, opt.solve);
        V = detail::orthonormalize(X);
        W = detail::orthonormalize(Wn);
      }
    } catch (const NumericalError& e) {
      diag << " attempt " << attempt << ": " << e.what() << " at iteration " << it << ";";
      failed = true;
    }
    if (failed) continue;

    best.error_history = std::move(history);
    best.converged = converged;
    best.iterations = static_cast<int>(best.error_history.size());
    best.restarts = attempt;
    best.frame_contraction = frame.contraction;
    best.rom = project(fom, best.V, best.W, &best.basis_condition, &best.T);
    return best;
  }
  throw NumericalError("H2 reduction failed after " + std::to_string(opt.max_restarts) + " restarts:" + diag.str());
}

/// POD-Galerkin: V = W = leading left singular vectors of the snapshot matrix (N x K).
inline ReductionResult pod_galerkin(const BilinearSystem& fom, const MatrixXd& snapshots, Index n) {
  fom.validate();
  detail::require(snapshots.rows() == fom.state_dim(), "snapshot rows must equal the FOM state dimension");
  detail::require(n >= 1, "POD order must be positive");
  detail::require(snapshots.cols() >= n, "POD needs at least n snapshots (K=" + std::to_string(snapshots.cols()) +
                                             ", n=" + std::to_string(n) + ")");
  detail::require(snapshots.allFinite(), "snapshots contain non-finite values");
  Eigen::BDCSVD<MatrixXd> svd(snapshots, Eigen::ComputeThinU);
  const Eigen::VectorXd& s = svd.singularValues();
  const double tol = s.size() > 0 ? s(0) * std::numeric_limits<double>::epsilon() *
                                        static_cast<double>(std::max(snapshots.rows(), snapshots.cols()))
                                  : 0.0;
  Index rank = 0;
  while (rank < s.size() && s(rank) > tol) ++rank;
  if (rank < n) {
    throw ValidationError("snapshot matrix has rank " + std::to_string(rank) + " < n=" + std::to_string(n) +
                          "; achievable POD order is at most " + std::to_string(rank));
  }
  ReductionResult r;
  r.V = svd.matrixU().leftCols(n);
  detail::fix_signs(r.V);
  r.W = r.V;
  r.captured_energy = s.head(n).squaredNorm() / s.squaredNorm();
  r.rom = project(fom, r.V, r.W, &r.basis_condition, &r.T);
  r.converged = true;
  return r;
}

}  // namespace adrmor
