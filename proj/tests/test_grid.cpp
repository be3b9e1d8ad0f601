#include "adrmor/bilinear.hpp"
#include "adrmor/grid.hpp"

#include <gtest/gtest.h>

#include <random>
#include <vector>

namespace adrmor {
namespace {

Eigen::MatrixXd dense(const SparseMatrix& m) { return Eigen::MatrixXd(m); }

TEST(GridSpec, SpacingMatchesLength) {
  for (Index n : {2, 3, 17, 500}) {
    const GridSpec g = GridSpec::uniform(1000.0, n);
    EXPECT_NEAR(g.dx() * static_cast<double>(n - 1), 1000.0, 1e-12 * 1000.0);
  }
}

TEST(GridSpec, RejectsTooFewNodes) {
  EXPECT_THROW(GridSpec::uniform(1.0, 1), ValidationError);
  EXPECT_THROW(build_q1(GridSpec{1.0, 1, false}), ValidationError);
  EXPECT_THROW(build_q2(GridSpec{1.0, 0, false}), ValidationError);
}

TEST(GridSpec, RejectsNonUniformCoordinates) {
  Eigen::VectorXd x(4);
  x << 0.0, 0.1, 0.3, 0.6;
  EXPECT_THROW(GridSpec::from_coordinates(x), ValidationError);
  x << 0.0, 0.2, 0.4, 0.6;
  EXPECT_EQ(GridSpec::from_coordinates(x).nodes, 4);
}

TEST(BuildQ1, ThreeNodes) {
  Eigen::MatrixXd want(3, 3);
  want << -2, 0, 0, 2, -2, 0, 0, 2, -2;
  EXPECT_EQ(dense(build_q1(GridSpec::uniform(1.0, 3))), want);
}

TEST(BuildQ1, TwoNodes) {
  Eigen::MatrixXd want(2, 2);
  want << -1, 0, 1, -1;
  EXPECT_EQ(dense(build_q1(GridSpec::uniform(1.0, 2))), want);
}

TEST(BuildQ1, RowSums) {
  for (Index n = 2; n <= 40; ++n) {
    const GridSpec g = GridSpec::uniform(2.5, n);
    const Eigen::VectorXd sums = dense(build_q1(g)).rowwise().sum();
    EXPECT_NEAR(sums(0), -1.0 / g.dx(), 1e-12 / g.dx());
    for (Index i = 1; i < n; ++i) EXPECT_EQ(sums(i), 0.0) << "n=" << n << " row " << i;
  }
}

TEST(BuildQ2, ThreeNodesUnitSpacing) {
  Eigen::MatrixXd want(3, 3);
  want << -2, 1, 0, 1, -2, 1, 0, 1, -1;
  EXPECT_EQ(dense(build_q2(GridSpec::uniform(2.0, 3))), want);
}

TEST(BuildQ2, TwoNodesHalfSpacing) {
  Eigen::MatrixXd want(2, 2);
  want << -8, 4, 4, -4;
  EXPECT_EQ(dense(build_q2(GridSpec::uniform(0.5, 2))), want);
}

TEST(BuildQ2, SymmetricNegativeSemidefinite) {
  for (Index n : {2, 3, 10, 64}) {
    const Eigen::MatrixXd q = dense(build_q2(GridSpec::uniform(1.0, n)));
    EXPECT_EQ(q, q.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q);
    EXPECT_LT(es.eigenvalues().maxCoeff(), 1e-10);
  }
}

TEST(InputVectors, Pattern) {
  const InputVectors b = build_input_vectors(GridSpec::uniform(1.0, 3));
  EXPECT_EQ(b.source, Eigen::Vector3d(1, 1, 1));
  EXPECT_EQ(b.boundary, Eigen::Vector3d(4, 0, 0));
  for (Index n : {2, 9, 100}) {
    const InputVectors c = build_input_vectors(GridSpec::uniform(3.0, n));
    EXPECT_EQ((c.boundary.array() != 0.0).count(), 1);
  }
}

TEST(BoundaryPhi, HandValues) {
  EXPECT_NEAR(boundary_input_phi(1.0, 0.0, 2.0, 0.1), 0.2, 1e-15);
  EXPECT_EQ(boundary_input_phi(0.7, 0.3, 0.0, 0.1), 0.0);
  EXPECT_EQ(boundary_input_phi(0.0, 3.0, 2.0, 0.37), 6.0);
  EXPECT_THROW(boundary_input_phi(1.0, 1.0, 1.0, 0.0), ValidationError);
}

TEST(Flux, HandValues) {
  EXPECT_DOUBLE_EQ(flux(2.0, 2.0, 1.0, 0.5), 1.0);
  EXPECT_EQ(flux(0.0, 0.0, 3.0, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(flux(5.0, 1.5, 0.0, 0.4), -0.6);
}

TEST(Junction, Residual) {
  const std::vector<double> one{1.0};
  EXPECT_EQ(junction_residual(one, one), 0.0);
  const std::vector<double> in{0.6, 0.4}, out{0.3, 0.3};
  EXPECT_NEAR(junction_residual(in, out), 0.4, 1e-15);
  EXPECT_EQ(junction_residual({}, {}), 0.0);
}

TEST(Junction, BoundarySetsMustBeDisjoint) {
  BoundarySpec bc;
  bc.inflow_set = {0, 2};
  bc.outflow_set = {2};
  EXPECT_THROW(bc.validate(), ValidationError);
}

TEST(StateMatrix, StableForNegativeReaction) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(1e-3, 1.0);
  const GridSpec g = GridSpec::uniform(1.0, 30);
  const Eigen::MatrixXd q1 = dense(build_q1(g));
  const Eigen::MatrixXd q2 = dense(build_q2(g));
  for (int trial = 0; trial < 25; ++trial) {
    const double v = unit(rng), D = unit(rng), r = -unit(rng);
    const Eigen::MatrixXd a = v * q1 + D * q2 + r * Eigen::MatrixXd::Identity(30, 30);
    EXPECT_LT(a.eigenvalues().real().maxCoeff(), 0.0);
  }
}

// Steady profile of one pipe: (-I + v Q1 + D Q2 + (r+1) I) q + b2 phi = 0.
Eigen::VectorXd steady_pipe(const GridSpec& g, double v, double D, double r, double inflow) {
  const BilinearSystem fom = assemble_fom(g);
  const Eigen::MatrixXd a =
      fom.A + v * fom.dense_slice(0) + D * fom.dense_slice(1) + (r + 1.0) * fom.dense_slice(2);
  const double phi = boundary_input_phi(v, D, inflow, g.dx());
  return a.partialPivLu().solve(-fom.B.col(4) * phi);
}

TEST(Junction, SeriesPipesBalanceAtSteadyState) {
  const GridSpec g = GridSpec::uniform(1.0, 41);
  const double v = 0.8, D = 0.05, r = -0.3, dx = g.dx();
  const Eigen::VectorXd up = steady_pipe(g, v, D, r, 1.0);
  // Open outflow: zero gradient at the last node.
  const double upstream_flux = flux(up(up.size() - 1), 0.0, v, D);
  double gb = up(up.size() - 1);
  Eigen::VectorXd down;
  for (int it = 0; it < 200; ++it) {
    down = steady_pipe(g, v, D, r, gb);
    gb = series_junction_value(upstream_flux, v, D, down(0), dx);
  }
  down = steady_pipe(g, v, D, r, gb);
  const std::vector<double> in{upstream_flux};
  const std::vector<double> out{inflow_flux(gb, down(0), v, D, dx)};
  EXPECT_LT(std::abs(junction_residual(in, out)), 1e-8);
}

}  // namespace
}  // namespace adrmor
