#pragma once

// Fixed-step implicit midpoint integration of bilinear systems, input held at
// the step midpoint:  (I - h/2 A_eff) q+ = (I + h/2 A_eff) q + h B u,
// A_eff = A + sum_i u_i Q_i.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "adrmor/banded.hpp"
#include "adrmor/bilinear.hpp"
#include "adrmor/errors.hpp"
#include "adrmor/signals.hpp"

namespace adrmor {

/// Midpoint-sampled inputs u(t0 + (k + 1/2) dt), one column per step.
struct InputSchedule {
  double t0 = 0.0;
  double dt = 0.0;
  Eigen::MatrixXd u;

  Index steps() const { return u.cols(); }
  double time(Index k) const { return t0 + static_cast<double>(k) * dt; }

  static InputSchedule from_function(Index inputs, double t0, double dt, Index steps,
                                     const std::function<Eigen::VectorXd(double)>& f) {
    detail::require(dt > 0.0 && std::isfinite(dt), "dt must be positive");
    detail::require(steps > 0, "schedule needs at least one step");
    InputSchedule s{t0, dt, Eigen::MatrixXd(inputs, steps)};
    for (Index k = 0; k < steps; ++k) {
      const Eigen::VectorXd v = f(t0 + (static_cast<double>(k) + 0.5) * dt);
      detail::require(v.size() == inputs, "input function returned the wrong length");
      s.u.col(k) = v;
    }
    return s;
  }
};

inline Index step_count(double t0, double t_end, double dt) {
  detail::require(dt > 0.0 && std::isfinite(dt), "dt must be positive");
  detail::require(t_end > t0, "horizon must satisfy t_end > t0");
  const double ratio = (t_end - t0) / dt;
  const double k = std::round(ratio);
  detail::require(k >= 1.0 && std::abs(ratio - k) <= 1e-9 * std::max(1.0, ratio),
                  "horizon must be an integer number of steps of dt");
  return static_cast<Index>(k);
}

/// Augmented ADR inputs [v, D, r+1, s, phi] sampled at step midpoints.
inline InputSchedule sample_inputs(const CoefficientSignals& sig, double dx, double t0, double t_end,
                                   double dt) {
  const Index steps = step_count(t0, t_end, dt);
  detail::require(t0 >= sig.t0 - 1e-12 * std::max(1.0, std::abs(sig.t0)) &&
                      t_end <= sig.t_end + 1e-12 * std::max(1.0, std::abs(sig.t_end)),
                  "integration horizon exceeds the signal horizon");
  return InputSchedule::from_function(5, t0, dt, steps, [&](double t) -> Eigen::VectorXd {
    return augment_input(sig, t, dx).values;
  });
}

struct Trajectory {
  std::vector<double> times;
  Eigen::MatrixXd states;   // one row per recorded time
  Eigen::MatrixXd outputs;  // one row per recorded time
  double wall_time = 0.0;   // integration only, seconds
};

struct IntegrateOptions {
  Index record_every = 1;
  bool keep_states = true;
};

namespace detail {

struct Recorder {
  Index every;
  Index steps;
  std::vector<Index> ks;
  Eigen::MatrixXd rows;

  Recorder(Index every_, Index steps_, Index n) : every(every_), steps(steps_) {
    const Index count = steps / every + 1 + (steps % every != 0 ? 1 : 0);
    rows.resize(count, n);
    ks.reserve(static_cast<std::size_t>(count));
  }
  bool due(Index k) const { return k % every == 0 || k == steps; }
  template <typename V>
  void put(Index k, const V& q) {
    rows.row(static_cast<Index>(ks.size())) = q.transpose();
    ks.push_back(k);
  }
};

[[noreturn]] inline void non_finite(Index k, double t) {
  std::ostringstream msg;
  msg << "non-finite state at step " << k << " (t=" << t << "); integration aborted";
  throw NumericalError(msg.str());
}

[[noreturn]] inline void singular_step(Index k, double rcond) {
  std::ostringstream msg;
  msg << "singular step matrix I - dt/2 A_eff at step " << k << " (reciprocal condition " << rcond << ")";
  throw NumericalError(msg.str());
}

/// In-place LU with partial pivoting on a row-major n x n array, then solves
/// for f. S > 0 fixes the size at compile time. Returns false on a zero pivot.
template <int S>
bool lu_solve(double* M, double* f, Index n_dyn) {
  const Index n = S > 0 ? S : n_dyn;
  for (Index k = 0; k < n; ++k) {
    Index p = k;
    double best = std::abs(M[k * n + k]);
    for (Index i = k + 1; i < n; ++i) {
      const double a = std::abs(M[i * n + k]);
      if (a > best) {
        best = a;
        p = i;
      }
    }
    if (best == 0.0) return false;
    if (p != k) {
      for (Index j = 0; j < n; ++j) std::swap(M[k * n + j], M[p * n + j]);
      std::swap(f[k], f[p]);
    }
    const double inv = 1.0 / M[k * n + k];
    for (Index i = k + 1; i < n; ++i) {
      const double l = M[i * n + k] * inv;
      for (Index j = k + 1; j < n; ++j) M[i * n + j] -= l * M[k * n + j];
      f[i] -= l * f[k];
    }
  }
  for (Index i = n - 1; i >= 0; --i) {
    double acc = f[i];
    for (Index j = i + 1; j < n; ++j) acc -= M[i * n + j] * f[j];
    f[i] = acc / M[i * n + i];
  }
  return true;
}

/// Dense midpoint loop for small systems: M = M0 - sum_j u_j H_j with
/// M0 = I - h/2 A and H_j = h/2 N_j. Slices equal to c I only shift the diagonal.
template <int S>
void run_dense(const BilinearSystem& sys, const InputSchedule& in, const Eigen::VectorXd& q0, Recorder& rec) {
  const Index n = sys.state_dim();
  const Index m = sys.input_dim();
  const Index nn = n * n;
  const double h = in.dt;
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMat M0 = RowMat::Identity(n, n) - (0.5 * h) * sys.A;
  std::vector<double> H;
  std::vector<Index> full_ch, diag_ch;
  std::vector<double> diag_coef;
  for (Index i = 0; i < m; ++i) {
    const Eigen::MatrixXd qi = sys.dense_slice(static_cast<std::size_t>(i));
    if (qi.isZero(0.0)) continue;
    const double c = qi(0, 0);
    if (qi.isApprox(c * Eigen::MatrixXd::Identity(n, n), 0.0)) {
      diag_ch.push_back(i);
      diag_coef.push_back(0.5 * h * c);
      continue;
    }
    const RowMat hq = (0.5 * h) * qi;
    H.insert(H.end(), hq.data(), hq.data() + nn);
    full_ch.push_back(i);
  }
  const RowMat hB = h * sys.B;
  std::vector<double> M(static_cast<std::size_t>(nn)), f(static_cast<std::size_t>(n));
  Eigen::VectorXd q = q0;
  rec.put(0, q);
  for (Index k = 0; k < in.steps(); ++k) {
    const double* u = in.u.col(k).data();
    std::copy(M0.data(), M0.data() + nn, M.begin());
    for (std::size_t j = 0; j < full_ch.size(); ++j) {
      const double c = u[full_ch[j]];
      const double* hj = H.data() + j * static_cast<std::size_t>(nn);
      for (Index e = 0; e < nn; ++e) M[e] -= c * hj[e];
    }
    double shift = 0.0;
    for (std::size_t j = 0; j < diag_ch.size(); ++j) shift += u[diag_ch[j]] * diag_coef[j];
    for (Index i = 0; i < n; ++i) {
      M[i * (n + 1)] -= shift;
      double acc = 2.0 * q(i);
      for (Index j = 0; j < m; ++j) acc += hB(i, j) * u[j];
      f[i] = acc;
    }
    if (!lu_solve<S>(M.data(), f.data(), n)) singular_step(k, 0.0);
    for (Index i = 0; i < n; ++i) q(i) = f[i] - q(i);
    if (!q.allFinite()) non_finite(k + 1, in.time(k + 1));
    if (rec.due(k + 1)) rec.put(k + 1, q);
  }
}

/// Nonzero diagonals of one term of A_eff; offset d = j - i, values indexed by column j.
struct BandTerm {
  Index input = -1;  // -1 for the constant term A
  std::vector<std::pair<Index, Eigen::VectorXd>> diags;
};

inline void band_extent(const Eigen::MatrixXd& M, Index& kl, Index& ku) {
  for (Index j = 0; j < M.cols(); ++j)
    for (Index i = 0; i < M.rows(); ++i)
      if (M(i, j) != 0.0) {
        kl = std::max(kl, i - j);
        ku = std::max(ku, j - i);
      }
}

inline void band_extent(const SparseMatrix& M, Index& kl, Index& ku) {
  for (Index j = 0; j < M.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(M, j); it; ++it)
      if (it.value() != 0.0) {
        kl = std::max(kl, it.row() - j);
        ku = std::max(ku, j - it.row());
      }
}

template <typename Mtx>
BandTerm make_band_term(const Mtx& M, Index input, Index kl, Index ku) {
  const Eigen::MatrixXd D = Eigen::MatrixXd(M);
  const Index n = D.rows();
  BandTerm t;
  t.input = input;
  for (Index d = -kl; d <= ku; ++d) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    bool any = false;
    for (Index j = std::max<Index>(0, d); j < std::min(n, n + d); ++j) {
      v(j) = D(j - d, j);
      any = any || v(j) != 0.0;
    }
    if (any) t.diags.emplace_back(d, std::move(v));
  }
  return t;
}

inline void run_banded(const BilinearSystem& sys, const InputSchedule& in, const Eigen::VectorXd& q0,
                       Index kl, Index ku, Recorder& rec) {
  const Index n = sys.state_dim();
  const Index m = sys.input_dim();
  const Index w = kl + ku + 1;
  std::vector<BandTerm> terms{make_band_term(sys.A, -1, kl, ku)};
  for (Index i = 0; i < m; ++i) {
    BandTerm t = make_band_term(sys.slices[static_cast<std::size_t>(i)], i, kl, ku);
    if (!t.diags.empty()) terms.push_back(std::move(t));
  }
  const SparseMatrix B = sys.B.sparseView();
  const double h = in.dt;
  // Aeff in band layout: aeff(ku + i - j, j) holds entry (i, j); column-major, w rows.
  Eigen::MatrixXd aeff(w, n);
  BandLU<double> lu(n, kl, ku);
  Eigen::VectorXd q = q0, f(n);
  rec.put(0, q);
  for (Index k = 0; k < in.steps(); ++k) {
    const auto u = in.u.col(k);
    aeff.setZero();
    for (const BandTerm& t : terms) {
      const double c = t.input < 0 ? 1.0 : u(t.input);
      if (c == 0.0) continue;
      for (const auto& [d, v] : t.diags) aeff.row(ku - d) += c * v.transpose();
    }
    lu.set_zero();
    for (Index j = 0; j < n; ++j) {
      const Index i0 = std::max<Index>(0, j - ku), i1 = std::min(n - 1, j + kl);
      for (Index i = i0; i <= i1; ++i) lu.at(i, j) = (i == j ? 1.0 : 0.0) - 0.5 * h * aeff(ku + i - j, j);
    }
    if (!lu.factorize()) singular_step(k, 0.0);
    f = 2.0 * q;
    f += h * (B * u);
    lu.solve_in_place(f);
    q = f - q;
    if (!q.allFinite()) non_finite(k + 1, in.time(k + 1));
    if (rec.due(k + 1)) rec.put(k + 1, q);
  }
}

template <int... Sizes>
bool dispatch_dense(Index n, const BilinearSystem& sys, const InputSchedule& in, const Eigen::VectorXd& q0,
                    Recorder& rec, std::integer_sequence<int, Sizes...>) {
  return ((n == Sizes + 1 ? (run_dense<Sizes + 1>(sys, in, q0, rec), true) : false) || ...);
}

}  // namespace detail

/// Integrates from q0 over the schedule. Large banded systems (the ADR FOM)
/// use a band LU, small systems fixed-size dense LU, everything else dense LU.
inline Trajectory integrate(const BilinearSystem& sys, const InputSchedule& in, const Eigen::VectorXd& q0,
                            const IntegrateOptions& opt = {}) {
  sys.validate();
  const Index n = sys.state_dim();
  detail::require(q0.size() == n, "initial state has dimension " + std::to_string(q0.size()) + ", expected " +
                                      std::to_string(n));
  detail::require(in.u.rows() == sys.input_dim(), "input schedule has the wrong number of channels");
  detail::require(in.dt > 0.0, "dt must be positive");
  detail::require(opt.record_every >= 1, "record_every must be >= 1");
  detail::require(in.u.allFinite(), "input schedule contains non-finite values");

  Index kl = 0, ku = 0;
  detail::band_extent(sys.A, kl, ku);
  for (const auto& s : sys.slices) detail::band_extent(s, kl, ku);

  detail::Recorder rec(opt.record_every, in.steps(), n);
  const auto start = std::chrono::steady_clock::now();
  if (n > 32 && 4 * (kl + ku + 1) <= n) {
    detail::run_banded(sys, in, q0, kl, ku, rec);
  } else if (!detail::dispatch_dense(n, sys, in, q0, rec, std::make_integer_sequence<int, 16>{})) {
    detail::run_dense<0>(sys, in, q0, rec);
  }
  Trajectory tr;
  tr.states = std::move(rec.rows);
  const bool identity_c = sys.C.rows() == n && sys.C.isIdentity(0.0);
  tr.outputs = identity_c ? tr.states : Eigen::MatrixXd(tr.states * sys.C.transpose());
  tr.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  tr.times.reserve(rec.ks.size());
  for (Index k : rec.ks) tr.times.push_back(in.time(k));
  if (!opt.keep_states) tr.states.resize(0, 0);
  return tr;
}

inline Trajectory integrate(const BilinearSystem& sys, const CoefficientSignals& sig, double t0, double t_end,
                            double dt, const Eigen::VectorXd& q0, const IntegrateOptions& opt = {}) {
  detail::require(sys.dx > 0.0 && sys.input_dim() == 5,
                  "signal-driven integration needs an ADR system with grid spacing and 5 inputs");
  return integrate(sys, sample_inputs(sig, sys.dx, t0, t_end, dt), q0, opt);
}

struct OracleConfig {
  GridSpec coarse;
  Index fine_nodes = 0;
  double t0 = 0.0;
  double t_end = 1.0;
  double dt = 0.0;       // coarse step, defines the reported time grid
  double dt_fine = 0.0;  // <= dt / 4, dt an integer multiple
  Index record_every = 1;  // in coarse steps
};

/// Refined method-of-lines reference: a FOM on a nested grid with N_fine nodes
/// and step dt_fine, restricted to the coarse nodes and coarse record times.
inline Trajectory fine_grid_oracle(const OracleConfig& cfg, const CoefficientSignals& sig,
                                   const Eigen::VectorXd& q0_coarse = {}) {
  cfg.coarse.validate();
  const Index nc = cfg.coarse.nodes;
  const Index nf = cfg.fine_nodes;
  detail::require(nf >= 2 && (nf - 1) % (nc - 1) == 0,
                  "fine grid with " + std::to_string(nf) + " nodes is not nested in the coarse grid with " +
                      std::to_string(nc) + " nodes");
  const Index ratio = (nf - 1) / (nc - 1);
  detail::require(ratio >= 4, "fine grid must refine the coarse spacing at least 4 times");
  detail::require(cfg.dt_fine > 0.0 && cfg.dt_fine <= cfg.dt / 4.0 * (1.0 + 1e-12),
                  "dt_fine must satisfy 0 < dt_fine <= dt/4");
  const double sub = cfg.dt / cfg.dt_fine;
  const Index substeps = static_cast<Index>(std::llround(sub));
  detail::require(std::abs(sub - static_cast<double>(substeps)) <= 1e-9 * sub,
                  "dt must be an integer multiple of dt_fine");
  const Index coarse_steps = step_count(cfg.t0, cfg.t_end, cfg.dt);

  const GridSpec fine = GridSpec::uniform(cfg.coarse.length, nf, cfg.coarse.scaled);
  const BilinearSystem fom = assemble_fom(fine);
  Eigen::VectorXd q0 = Eigen::VectorXd::Zero(nf);
  if (q0_coarse.size() > 0) {
    detail::require(q0_coarse.size() == nc, "oracle initial state must live on the coarse grid");
    for (Index i = 0; i < nf; ++i) {
      const Index c = std::min(i / ratio, nc - 2);
      const double w = static_cast<double>(i - c * ratio) / static_cast<double>(ratio);
      q0(i) = (1.0 - w) * q0_coarse(c) + w * q0_coarse(c + 1);
    }
  }
  InputSchedule in = InputSchedule::from_function(
      5, cfg.t0, cfg.dt_fine, coarse_steps * substeps,
      [&](double t) -> Eigen::VectorXd { return augment_input(sig, t, fine.dx()).values; });
  IntegrateOptions opt;
  opt.record_every = cfg.record_every * substeps;
  const Trajectory f = integrate(fom, in, q0, opt);

  Trajectory out;
  out.wall_time = f.wall_time;
  out.states.resize(f.states.rows(), nc);
  for (Index c = 0; c < nc; ++c) out.states.col(c) = f.states.col(c * ratio);
  out.outputs = out.states;
  const IntegrateOptions coarse_opt{cfg.record_every, true};
  detail::Recorder rec(coarse_opt.record_every, coarse_steps, 0);
  for (Index k = 0; k <= coarse_steps; ++k)
    if (k == 0 || rec.due(k)) out.times.push_back(cfg.t0 + static_cast<double>(k) * cfg.dt);
  detail::require(static_cast<Index>(out.times.size()) == out.states.rows(), "oracle time grid mismatch");
  return out;
}

}  // namespace adrmor
