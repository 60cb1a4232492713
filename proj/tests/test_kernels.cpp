#include "gchan/errors.hpp"
#include "gchan/kernels.hpp"
#include "gchan/operator.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace gchan;

namespace {

std::vector<KernelSpec> all_families(double T) {
  const TimeGrid g = TimeGrid::midpoint(T, 64);
  return {
      KernelSpec(family::Exponential{1.5, 2.0}, T),
      KernelSpec(family::BrownianMotion{}, T),
      KernelSpec(family::BrownianBridge{}, T),
      KernelSpec(family::SquaredExponential{0.7, 0.3}, T),
      KernelSpec(family::FiniteRank{{1.0, 0.5, 0.1}, cosine_basis(g, 3), g}, T),
      KernelSpec(family::MatrixStationary{{{{1.0, 1.0}}, {{1.0, 2.0}, {0.5, 0.2}}}}, T),
  };
}

}  // namespace

TEST(TimeGrid, MidpointNodesAndWeights) {
  const TimeGrid g = TimeGrid::midpoint(2.0, 4);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_DOUBLE_EQ(g.node(0), 0.25);
  EXPECT_DOUBLE_EQ(g.node(3), 1.75);
  double total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_GT(g.weight(i), 0.0);
    if (i > 0) EXPECT_GT(g.node(i), g.node(i - 1));
    total += g.weight(i);
  }
  EXPECT_NEAR(total, 2.0, 1e-15);
}

TEST(TimeGrid, PrefixCountIsTheTimeProjection) {
  const TimeGrid g = TimeGrid::midpoint(1.0, 10);
  EXPECT_EQ(g.prefix_count(0.0), 0u);
  EXPECT_EQ(g.prefix_count(0.05), 1u);
  EXPECT_EQ(g.prefix_count(0.5), 5u);
  EXPECT_EQ(g.prefix_count(1.0), 10u);
  EXPECT_EQ(g.cell_of(1.0), 9u);
  EXPECT_EQ(g.cell_of(0.0), 0u);
}

TEST(TimeGrid, RejectsDegenerateInput) {
  EXPECT_THROW(TimeGrid::midpoint(0.0, 4), DomainError);
  EXPECT_THROW(TimeGrid::midpoint(1.0, 0), DomainError);
}

TEST(EvalKernel, ExamplesFromClosedForms) {
  const KernelSpec ex(family::Exponential{1.0, 1.0}, 1.0);
  EXPECT_DOUBLE_EQ(ex.eval(0.3, 0.3)(0, 0), 1.0);
  EXPECT_NEAR(ex.eval(0.0, std::log(2.0))(0, 0), 0.5, 1e-15);
  const KernelSpec bm(family::BrownianMotion{}, 1.0);
  EXPECT_DOUBLE_EQ(bm.eval(0.2, 0.7)(0, 0), 0.2);
  const KernelSpec bb(family::BrownianBridge{}, 1.0);
  EXPECT_NEAR(bb.eval(0.2, 0.7)(0, 0), 0.2 - 0.14, 1e-15);
}

TEST(EvalKernel, OutOfRangeTimeIsADomainError) {
  const KernelSpec bm(family::BrownianMotion{}, 1.0);
  EXPECT_THROW(bm.eval(-0.1, 0.5), DomainError);
  EXPECT_THROW(bm.eval(0.5, 1.0 + 1e-9), DomainError);
}

TEST(KernelSpec, ParameterValidation) {
  EXPECT_THROW(KernelSpec(family::Exponential{-1.0, 1.0}, 1.0), DomainError);
  EXPECT_THROW(KernelSpec(family::Exponential{1.0, 0.0}, 1.0), DomainError);
  EXPECT_THROW(KernelSpec(family::SquaredExponential{1.0, 0.0}, 1.0), DomainError);
  EXPECT_THROW(KernelSpec(family::MatrixStationary{{}}, 1.0), DomainError);
  const TimeGrid g = TimeGrid::midpoint(1.0, 8);
  Eigen::MatrixXd bad = cosine_basis(g, 2);
  bad(0, 1) += 0.1;
  EXPECT_THROW(KernelSpec(family::FiniteRank{{1.0, 0.5}, bad, g}, 1.0), DomainError);
  EXPECT_THROW(KernelSpec(family::FiniteRank{{1.0, -0.5}, cosine_basis(g, 2), g}, 1.0), DomainError);
}

TEST(KernelSpec, SymmetryUnderSwapWithTranspose) {
  for (const auto& spec : all_families(2.0)) {
    for (double s : {0.0, 0.31, 1.2, 2.0}) {
      for (double t : {0.05, 0.9, 1.99}) {
        const Eigen::MatrixXd a = spec.eval(s, t);
        const Eigen::MatrixXd b = spec.eval(t, s);
        EXPECT_LE((a - b.transpose()).cwiseAbs().maxCoeff(), 1e-15);
      }
    }
  }
}

TEST(KernelSpec, AssembledMatricesArePositiveSemidefinite) {
  for (const auto& spec : all_families(2.0)) {
    for (std::size_t n : {16u, 50u}) {
      const auto op = discretize(spec, TimeGrid::midpoint(2.0, n));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.matrix);
      const double top = es.eigenvalues().maxCoeff();
      EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8 * top);
      EXPECT_LE((op.matrix - op.matrix.transpose()).norm(), 1e-12 * op.matrix.norm());
    }
  }
}

TEST(KernelSpec, MatrixStationaryDependsOnlyOnLag) {
  const KernelSpec spec(family::MatrixStationary{{{{1.0, 1.0}}, {{2.0, 0.5}}}}, 5.0);
  EXPECT_EQ(spec.channels(), 2);
  for (double tau : {0.0, 0.4, 1.7}) {
    const Eigen::MatrixXd a = spec.eval(0.3, 0.3 + tau);
    const Eigen::MatrixXd b = spec.eval(2.0, 2.0 + tau);
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(a(0, 1), 0.0);
  }
}

TEST(AnalyticSpectrum, BrownianMotionAndFiniteRank) {
  const KernelSpec bm(family::BrownianMotion{}, 1.0);
  const auto values = analytic_spectrum(bm, 3);
  ASSERT_TRUE(values.has_value());
  EXPECT_NEAR((*values)[0], 4.0 / (std::numbers::pi * std::numbers::pi), 1e-15);
  EXPECT_NEAR((*values)[0], 0.405285, 1e-6);
  EXPECT_NEAR((*values)[2], 1.0 / std::pow(2.5 * std::numbers::pi, 2), 1e-15);

  const TimeGrid g = TimeGrid::midpoint(1.0, 10);
  const KernelSpec fr(family::FiniteRank{{0.5, 1.0}, cosine_basis(g, 2), g}, 1.0);
  const auto stored = analytic_spectrum(fr, 5);
  ASSERT_TRUE(stored.has_value());
  EXPECT_EQ(*stored, (std::vector<double>{1.0, 0.5}));

  EXPECT_FALSE(analytic_spectrum(KernelSpec(family::Exponential{1.0, 1.0}, 1.0), 4).has_value());
  EXPECT_THROW(analytic_spectrum(bm, 0), DomainError);
}

TEST(AnalyticSpectrum, BrownianLeadingValueMatchesRefinedNystrom) {
  // Oracle: Richardson extrapolation of midpoint Nystrom eigenvalues (O(h^2)).
  const KernelSpec bm(family::BrownianMotion{}, 1.0);
  const double coarse = eigendecompose(discretize(bm, TimeGrid::midpoint(1.0, 200))).values[0];
  const double fine = eigendecompose(discretize(bm, TimeGrid::midpoint(1.0, 400))).values[0];
  const double extrapolated = (4.0 * fine - coarse) / 3.0;
  EXPECT_NEAR(extrapolated, (*analytic_spectrum(bm, 1))[0], 1e-8);
}

TEST(CosineBasis, ExactlyOrthonormalOnMidpointGrid) {
  const TimeGrid g = TimeGrid::midpoint(3.0, 40);
  const Eigen::MatrixXd b = cosine_basis(g, 7);
  const Eigen::MatrixXd gram = b.transpose() * (g.step() * b);
  EXPECT_LE((gram - Eigen::MatrixXd::Identity(7, 7)).cwiseAbs().maxCoeff(), 1e-13);
}
