#include "adrmor/campaign.hpp"
#include "adrmor/reduction.hpp"
#include "adrmor/simulate.hpp"

#include <gtest/gtest.h>

#include <random>

namespace adrmor {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd gaussian(Index r, Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  MatrixXd M(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) M(i, j) = d(rng);
  return M;
}

// Random bilinear system whose trajectories stay bounded for inputs in [-1, 1].
BilinearSystem random_bilinear(Index n, Index m, Index p, std::mt19937_64& rng) {
  BilinearSystem s;
  const MatrixXd R = gaussian(n, n, rng) / std::sqrt(static_cast<double>(n));
  s.A = R - (R.eigenvalues().real().maxCoeff() + 1.5) * MatrixXd::Identity(n, n);
  for (Index i = 0; i < m; ++i) {
    const MatrixXd Q = gaussian(n, n, rng);
    s.slices.push_back(MatrixXd(0.3 * Q / Q.operatorNorm()).sparseView());
  }
  s.B = gaussian(n, m, rng);
  s.C = gaussian(p, n, rng);
  return s;
}

InputSchedule random_schedule(Index m, Index steps, double dt, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  InputSchedule in{0.0, dt, MatrixXd(m, steps)};
  for (Index k = 0; k < steps; ++k)
    for (Index i = 0; i < m; ++i) in.u(i, k) = u(rng);
  return in;
}

BilinearSystem frame_system(const ReductionFrame& f) {
  BilinearSystem s;
  s.A = f.A;
  s.slices = f.slices;
  s.B = f.B;
  s.C = f.C;
  return s;
}

TEST(Project, IdentityBasisReproducesFom) {
  const BilinearSystem fom = assemble_fom(GridSpec::uniform(1.0, 9));
  const MatrixXd I = MatrixXd::Identity(9, 9);
  const BilinearSystem rom = project(fom, I, I);
  EXPECT_EQ((rom.A - fom.A).cwiseAbs().maxCoeff(), 0.0);
  for (std::size_t i = 0; i < fom.slices.size(); ++i) {
    EXPECT_EQ((rom.dense_slice(i) - fom.dense_slice(i)).cwiseAbs().maxCoeff(), 0.0);
  }
  EXPECT_EQ((rom.B - fom.B).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((rom.C - fom.C).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Project, FirstCoordinateOfTwoNodes) {
  const BilinearSystem fom = assemble_fom(GridSpec::uniform(1.0, 2));
  MatrixXd v(2, 1);
  v << 1.0, 0.0;
  const BilinearSystem rom = project(fom, v, v);
  EXPECT_DOUBLE_EQ(rom.A(0, 0), fom.A(0, 0));
  for (std::size_t i = 0; i < fom.slices.size(); ++i) EXPECT_DOUBLE_EQ(rom.dense_slice(i)(0, 0), fom.dense_slice(i)(0, 0));
  for (Index j = 0; j < fom.input_dim(); ++j) EXPECT_DOUBLE_EQ(rom.B(0, j), fom.B(0, j));
  EXPECT_EQ((rom.C - fom.C.col(0)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Project, SliceWiseEqualsMatricizedProjection) {
  std::mt19937_64 rng(3);
  const BilinearSystem fom = assemble_fom(GridSpec::uniform(1.0, 10));
  const MatrixXd V = Eigen::HouseholderQR<MatrixXd>(gaussian(10, 3, rng)).householderQ() * MatrixXd::Identity(10, 3);
  const BilinearSystem rom = project(fom, V, V);
  // [Qhat_1 ... Qhat_m] = T [Q_1 ... Q_m] (I_m kron V).
  const MatrixXd T = (V.transpose() * V).inverse() * V.transpose();
  const MatrixXd big = T * fom.matricized() * kron(MatrixXd::Identity(fom.input_dim(), fom.input_dim()), V);
  for (Index i = 0; i < fom.input_dim(); ++i) {
    EXPECT_LT((rom.dense_slice(static_cast<std::size_t>(i)) - big.middleCols(3 * i, 3)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Project, LeftInverseAndRankChecks) {
  std::mt19937_64 rng(4);
  const BilinearSystem fom = assemble_fom(GridSpec::uniform(1.0, 12));
  const MatrixXd V = gaussian(12, 4, rng), W = gaussian(12, 4, rng);
  MatrixXd T;
  project(fom, V, W, nullptr, &T);
  EXPECT_LT((T * V - MatrixXd::Identity(4, 4)).norm(), 1e-10);
  MatrixXd Vbad = V;
  Vbad.col(3) = Vbad.col(2);
  EXPECT_THROW(project(fom, Vbad, W), NumericalError);
  EXPECT_THROW(project(fom, gaussian(11, 4, rng), W), ValidationError);
}

TEST(Project, IdentityProjectionIntegratesLikeFom) {
  std::mt19937_64 rng(5);
  for (Index n : {1, 3, 8, 17, 30}) {
    const BilinearSystem fom = random_bilinear(n, 3, 2, rng);
    const MatrixXd I = MatrixXd::Identity(n, n);
    const BilinearSystem rom = project(fom, I, I);
    const InputSchedule in = random_schedule(3, 400, 5e-3, rng);
    const VectorXd q0 = gaussian(n, 1, rng);
    const Trajectory a = integrate(fom, in, q0), b = integrate(rom, in, q0);
    EXPECT_LT((a.outputs - b.outputs).cwiseAbs().maxCoeff(), 1e-10) << "n=" << n;
  }
  const GridSpec g = GridSpec::uniform(1.0, 50);
  const BilinearSystem fom = assemble_fom(g);
  const MatrixXd I = MatrixXd::Identity(50, 50);
  CoefficientSignals sig;
  sig.velocity = Signal::function([](double t) { return 1.0 + 0.3 * std::sin(4.0 * t); });
  sig.diffusivity = Signal::constant(0.05);
  sig.reaction = Signal::constant(-0.1);
  sig.source = Signal::constant(0.2);
  sig.boundary = Signal::constant(1.0);
  sig.t0 = 0.0;
  sig.t_end = 1.0;
  const Trajectory a = integrate(fom, sig, 0.0, 1.0, 1e-3, VectorXd::Zero(50));
  const Trajectory b = integrate(project(fom, I, I), sig, 0.0, 1.0, 1e-3, VectorXd::Zero(50));
  EXPECT_LT((a.outputs - b.outputs).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ReduceH2, FullOrderFromIdentityHasNoError) {
  std::mt19937_64 rng(6);
  const BilinearSystem fom = random_bilinear(6, 2, 2, rng);
  H2Options o;
  o.order = 6;
  o.initial_V = MatrixXd::Identity(6, 6);
  const ReductionResult r = reduce_h2(fom, o);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.error_history.front(), 1e-6 * h2_norm(fom));
}

TEST(ReduceH2, RejectsOrderAboveStateDimension) {
  const BilinearSystem fom = assemble_fom(GridSpec::uniform(1.0, 5));
  H2Options o;
  o.order = 6;
  EXPECT_THROW(reduce_h2(fom, o), ValidationError);
}

TEST(ReduceH2, LinearCaseBeatsModalTruncation) {
  // ADR operator as a linear system: slices zeroed, B and C from the FOM.
  const GridSpec g = GridSpec::uniform(1.0, 20);
  BilinearSystem fom = assemble_fom(g);
  fom.A = MatrixXd(1.0 * build_q1(g) + 0.05 * build_q2(g)) - 0.2 * MatrixXd::Identity(20, 20);
  for (auto& s : fom.slices) s = SparseMatrix(20, 20);
  const Index n = 4;

  Eigen::EigenSolver<MatrixXd> es(fom.A);
  ASSERT_LT(es.eigenvalues().imag().cwiseAbs().maxCoeff(), 1e-10);
  std::vector<Index> order(20);
  for (Index i = 0; i < 20; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    return es.eigenvalues()(a).real() > es.eigenvalues()(b).real();
  });
  const MatrixXd R = es.eigenvectors().real();
  const MatrixXd L = R.inverse().transpose();
  MatrixXd V(20, n), W(20, n);
  for (Index j = 0; j < n; ++j) {
    V.col(j) = R.col(order[static_cast<std::size_t>(j)]);
    W.col(j) = L.col(order[static_cast<std::size_t>(j)]);
  }
  const double modal = h2_error(fom, project(fom, V, W));

  H2Options o;
  o.order = static_cast<int>(n);
  const ReductionResult r = reduce_h2(fom, o);
  const double h2 = h2_error(fom, r.rom);
  EXPECT_LE(h2, modal);
  EXPECT_NEAR(h2, *std::min_element(r.error_history.begin(), r.error_history.end()), 1e-6 * h2_norm(fom));
}

// Scaled sweep FOM at N=100: convergence, explicit-error decrease, stability.
TEST(ReduceH2, ScaledAdrModelConvergesAndImproves) {
  SweepSettings s;
  s.nodes = 100;
  s.base.Pe_target = 10.0;
  const SweepModel m = sweep_model(s, 10.0);
  H2Options o;
  o.order = 8;
  o.statistics = InputStatistics::from_samples(sweep_schedule(s, m, make_sweep_signals(s.base)).u);
  const ReductionResult r = reduce_h2(m.fom, o);
  ASSERT_TRUE(r.converged);
  ASSERT_EQ(r.restarts, 0);
  EXPECT_LE(r.iterations, 100);
  EXPECT_LT((r.T * r.V - MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT(r.rom.spectral_abscissa(), 0.0);

  // Rebuild the initial ROM independently and evaluate both errors on the
  // explicit error system of the reduction frame.
  const ReductionFrame f = make_reduction_frame(m.fom, o.statistics, o.frame);
  const BilinearSystem fs = frame_system(f);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gramians(fs).P);
  const MatrixXd V0 = detail::orthonormalize(es.eigenvectors().rightCols(8).rowwise().reverse());
  const double e0 = h2_error(fs, project(fs, V0, V0));
  const double e1 = h2_error(fs, project(fs, r.V, r.W));
  EXPECT_NEAR(e0, r.error_history.front(), 1e-6 * e0);
  EXPECT_LE(e1, e0);
  EXPECT_NEAR(e1, *std::min_element(r.error_history.begin(), r.error_history.end()), 1e-6 * e0);
}

TEST(ReduceH2, SeedMakesRunsIdentical) {
  SweepSettings s;
  s.nodes = 40;
  const SweepModel m = sweep_model(s, 100.0);
  H2Options o;
  o.statistics = InputStatistics::from_samples(sweep_schedule(s, m, make_sweep_signals(s.base)).u);
  const ReductionResult a = reduce_h2(m.fom, o), b = reduce_h2(m.fom, o);
  EXPECT_EQ(a.error_history, b.error_history);
  EXPECT_EQ((a.V - b.V).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Frame, OffsetsOnlyOnSliceChannelsAndStableShift) {
  SweepSettings s;
  s.nodes = 60;
  const SweepModel m = sweep_model(s, 10.0);
  const InputSchedule in = sweep_schedule(s, m, make_sweep_signals(s.base));
  const ReductionFrame f = make_reduction_frame(m.fom, InputStatistics::from_samples(in.u));
  EXPECT_EQ(f.offset(3), 0.0);  // s has no slice
  EXPECT_EQ(f.offset(4), 0.0);  // phi has a B column
  const FrameOptions o;
  EXPECT_NEAR(f.log_norm, o.kappa * f.nominal_log_norm, 1e-9 * std::abs(f.nominal_log_norm));
  EXPECT_NEAR(f.contraction, o.target_contraction, 0.1 * o.target_contraction);
  // Frame A equals A + sum offset_i N_i.
  MatrixXd A = m.fom.A;
  for (Index i = 0; i < 5; ++i) A += f.offset(i) * m.fom.dense_slice(static_cast<std::size_t>(i));
  EXPECT_LT((A - f.A).cwiseAbs().maxCoeff(), 1e-12 * A.cwiseAbs().maxCoeff());
}

TEST(Frame, WithoutStatisticsIsTheLiteralRealization) {
  const BilinearSystem fom = assemble_fom(GridSpec::uniform(1.0, 8));
  const ReductionFrame f = make_reduction_frame(fom, std::nullopt);
  EXPECT_EQ(f.offset.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((f.A - fom.A).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((f.B - fom.B).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Pod, RankOneSnapshotsAreReproduced) {
  std::mt19937_64 rng(7);
  const BilinearSystem fom = assemble_fom(GridSpec::uniform(1.0, 15));
  const VectorXd x = gaussian(15, 1, rng);
  const MatrixXd S = x * gaussian(1, 6, rng);
  const ReductionResult r = pod_galerkin(fom, S, 1);
  EXPECT_NEAR(std::abs(r.V.col(0).dot(x)) / x.norm(), 1.0, 1e-12);
  EXPECT_LT((S - r.V * (r.V.transpose() * S)).norm(), 1e-12 * S.norm());
  EXPECT_NEAR(r.captured_energy, 1.0, 1e-12);
}

TEST(Pod, FullBasisMatchesFom) {
  std::mt19937_64 rng(8);
  const BilinearSystem fom = assemble_fom(GridSpec::uniform(1.0, 10));
  const ReductionResult r = pod_galerkin(fom, gaussian(10, 10, rng), 10);
  CoefficientSignals sig;
  sig.velocity = Signal::constant(1.0);
  sig.diffusivity = Signal::constant(0.1);
  sig.reaction = Signal::constant(-0.2);
  sig.source = Signal::constant(0.0);
  sig.boundary = Signal::function([](double t) { return std::sin(3.0 * t); });
  sig.t0 = 0.0;
  sig.t_end = 2.0;
  const Trajectory a = integrate(fom, sig, 0.0, 2.0, 1e-3, VectorXd::Zero(10));
  const Trajectory b = integrate(r.rom, sig, 0.0, 2.0, 1e-3, VectorXd::Zero(10));
  EXPECT_LT((a.outputs - b.outputs).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Pod, RankDeficiencyNamesAchievableOrder) {
  std::mt19937_64 rng(9);
  const BilinearSystem fom = assemble_fom(GridSpec::uniform(1.0, 12));
  const MatrixXd S = gaussian(12, 2, rng) * gaussian(2, 8, rng);
  try {
    pod_galerkin(fom, S, 3);
    FAIL() << "expected a rank error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("at most 2"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace adrmor
