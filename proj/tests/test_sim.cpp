#include "gchan/errors.hpp"
#include "gchan/infocore.hpp"
#include "gchan/kernels.hpp"
#include "gchan/operator.hpp"
#include "gchan/rng.hpp"
#include "gchan/sim.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace gchan;

namespace {

SimConfig binary_config(double gamma, std::size_t paths, std::uint64_t seed, std::size_t n = 100) {
  SimConfig c;
  c.seed = seed;
  c.paths = paths;
  c.gamma = gamma;
  c.grid = TimeGrid::midpoint(1.0, n);
  c.signal = BinarySignal{unit_profile(c.grid, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n)))};
  return c;
}

SimConfig gaussian_config(const Spectrum& s, const TimeGrid& grid, double gamma, std::size_t paths,
                          std::uint64_t seed) {
  SimConfig c;
  c.seed = seed;
  c.paths = paths;
  c.gamma = gamma;
  c.grid = grid;
  c.signal = GaussianSignal{s, 1};
  return c;
}

Estimate estimate_of(const Eigen::VectorXd& v) {
  return mc_estimate(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

}  // namespace

TEST(Rng, StreamsAreDeterministicAndDistinct) {
  Xoshiro256 a(stream_seed(7, 0)), b(stream_seed(7, 0)), c(stream_seed(7, 1)), d(stream_seed(7, 0, 1));
  const auto first = a.next();
  EXPECT_EQ(first, b.next());
  EXPECT_NE(first, c.next());
  EXPECT_NE(first, d.next());
}

TEST(Rng, NormalMoments) {
  Xoshiro256 r(1);
  double s1 = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s1 += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s1 / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(McEstimate, Examples) {
  const std::vector<double> constant(10, 2.5);
  const Estimate c = mc_estimate(constant);
  EXPECT_EQ(c.mean, 2.5);
  EXPECT_EQ(c.std_error, 0.0);

  std::vector<double> pm(1000);
  for (std::size_t i = 0; i < pm.size(); ++i) pm[i] = (i % 2 == 0) ? 1.0 : -1.0;
  const Estimate b = mc_estimate(pm);
  EXPECT_EQ(b.mean, 0.0);
  // Unbiased sample deviation: sqrt(n / (n - 1)) / sqrt(n) = 1 / sqrt(n - 1).
  EXPECT_NEAR(b.std_error, 1.0 / std::sqrt(999.0), 1e-15);
  EXPECT_NEAR(b.std_error, 1.0 / std::sqrt(1000.0), 1e-3 / std::sqrt(1000.0));

  Xoshiro256 r(99);
  std::vector<double> normal(10000);
  for (auto& v : normal) v = r.normal();
  const Estimate n = mc_estimate(normal);
  EXPECT_LE(std::abs(n.mean), 3.0 * n.std_error);

  EXPECT_THROW(mc_estimate(std::vector<double>{1.0}), DomainError);
}

TEST(SampleGaussian, RankOneCoefficientVariance) {
  const TimeGrid g = TimeGrid::midpoint(1.0, 20);
  const KernelSpec spec(family::FiniteRank{{1.0}, cosine_basis(g, 1), g}, 1.0);
  const Spectrum s = eigendecompose(discretize(spec, g));
  const std::size_t paths = 100000;
  const SimConfig cfg = gaussian_config(s, g, 1.0, paths, 5);
  const Eigen::MatrixXd x = sample_gaussian_paths(s, cfg);
  const Eigen::VectorXd phi = cosine_basis(g, 1).col(0);
  double var = 0;
  for (Eigen::Index p = 0; p < x.rows(); ++p) {
    const double coeff = g.step() * x.row(p).dot(phi);
    var += coeff * coeff;
  }
  var /= static_cast<double>(paths);
  EXPECT_NEAR(var, 1.0, 3.0 * std::sqrt(2.0 / paths));
}

TEST(SampleGaussian, ZeroSpectrumAndDeterminism) {
  const TimeGrid g = TimeGrid::midpoint(1.0, 10);
  Spectrum zero;
  zero.values.assign(10, 0.0);
  zero.vectors = Eigen::MatrixXd::Identity(10, 10);
  const Eigen::MatrixXd x = sample_gaussian_paths(zero, gaussian_config(zero, g, 1.0, 5, 1));
  EXPECT_EQ(x, Eigen::MatrixXd::Zero(5, 10));

  const Spectrum s = eigendecompose(discretize(KernelSpec(family::BrownianMotion{}, 1.0), g));
  const auto a = sample_gaussian_paths(s, gaussian_config(s, g, 1.0, 3, 17));
  const auto b = sample_gaussian_paths(s, gaussian_config(s, g, 1.0, 3, 17));
  EXPECT_EQ(a.row(0), b.row(0));
  EXPECT_THROW(sample_gaussian_paths(s, gaussian_config(s, TimeGrid::midpoint(1.0, 11), 1.0, 3, 1)), DomainError);
}

TEST(SampleGaussian, SampleCovarianceApproachesKernel) {
  const TimeGrid g = TimeGrid::midpoint(1.0, 8);
  const KernelSpec spec(family::Exponential{1.0, 1.0}, 1.0);
  const Spectrum s = eigendecompose(discretize(spec, g));
  const std::size_t paths = 40000;
  const Eigen::MatrixXd x = sample_gaussian_paths(s, gaussian_config(s, g, 1.0, paths, 3));
  const Eigen::MatrixXd cov = x.transpose() * x / static_cast<double>(paths);
  const Eigen::MatrixXd k = kernel_matrix(spec, g);
  EXPECT_LE((cov - k).cwiseAbs().maxCoeff(), 5.0 * std::sqrt(2.0 / paths));
}

TEST(SimulateChannel, PureNoiseAtZeroGamma) {
  SimConfig cfg = binary_config(0.0, 20000, 4, 10);
  const Eigen::MatrixXd x = sample_binary_paths(cfg);
  const Eigen::MatrixXd dy = simulate_channel(x, cfg);
  const double w = cfg.grid.step();
  // Correlation between the sign and the normalized first increment.
  double s = 0.0;
  for (Eigen::Index p = 0; p < x.rows(); ++p) s += (x(p, 0) > 0 ? 1.0 : -1.0) * dy(p, 0) / std::sqrt(w);
  EXPECT_LE(std::abs(s / 20000.0), 3.0 / std::sqrt(20000.0));
}

TEST(SimulateChannel, HighSnrRecoversSign) {
  SimConfig cfg = binary_config(1e4, 500, 8, 10);
  const Eigen::MatrixXd x = sample_binary_paths(cfg);
  const Eigen::MatrixXd dy = simulate_channel(x, cfg);
  int wrong = 0, total = 0;
  for (Eigen::Index p = 0; p < x.rows(); ++p)
    for (Eigen::Index k = 0; k < x.cols(); ++k, ++total) wrong += (dy(p, k) > 0) != (x(p, k) > 0);
  EXPECT_LT(wrong, total / 100);
}

TEST(SimulateChannel, DeterministicAndShapeChecked) {
  SimConfig cfg = binary_config(1.0, 4, 12, 10);
  const Eigen::MatrixXd x = sample_binary_paths(cfg);
  EXPECT_EQ(simulate_channel(x, cfg), simulate_channel(x, cfg));
  EXPECT_THROW(simulate_channel(x.leftCols(5), cfg), DomainError);
}

TEST(BinaryFilter, ZeroStatisticAndSaturation) {
  const Eigen::VectorXd phi = Eigen::VectorXd::Ones(4);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(1, 4);
  EXPECT_EQ(binary_causal_filter(zero, phi, 3.0), Eigen::MatrixXd::Zero(1, 4));
  SimConfig cfg = binary_config(1e4, 200, 3, 50);
  const SimBatch batch = run_batch(cfg);
  const Eigen::MatrixXd smooth = binary_noncausal_filter(batch.increments, std::get<BinarySignal>(cfg.signal).profile, cfg.gamma);
  EXPECT_LE((smooth - batch.signals).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((batch.estimates.col(49) - batch.signals.col(49)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(BinaryErrors, LimitsAndValidation) {
  const BinaryErrors zero = binary_errors(0.0);
  EXPECT_EQ(zero.causal, 1.0);
  EXPECT_EQ(zero.noncausal, 1.0);
  const BinaryErrors big = binary_errors(200.0);
  EXPECT_LT(big.noncausal, 1e-10);
  EXPECT_LT(big.causal, 0.01);
  EXPECT_GT(big.causal, big.noncausal);
  EXPECT_THROW(binary_errors(1.0, 7), DomainError);
  EXPECT_THROW(binary_errors(-1.0), DomainError);
}

TEST(BinaryErrors, PlainMonteCarloOracleAtOne) {
  // 10^6 plain samples: Z for the smoothing error, (m, Z) with m ~ U[0, 1]
  // for the time-averaged filtering error.
  Xoshiro256 r(2718);
  const std::size_t n = 1000000;
  std::vector<double> smooth(n), filt(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = std::tanh(1.0 + r.normal());
    smooth[i] = 1.0 - t * t;
    const double m = r.uniform();
    const double u = std::tanh(m + std::sqrt(m) * r.normal());
    filt[i] = 1.0 - u * u;
  }
  const Estimate es = mc_estimate(smooth), ef = mc_estimate(filt);
  const BinaryErrors q = binary_errors(1.0);
  EXPECT_LE(std::abs(q.noncausal - es.mean), 3.0 * es.std_error);
  EXPECT_LE(std::abs(q.causal - ef.mean), 3.0 * ef.std_error);
}

TEST(BinaryMutualInformation, LimitsAndDuncan) {
  EXPECT_EQ(binary_mutual_information(0.0), 0.0);
  EXPECT_NEAR(binary_mutual_information(400.0), std::numbers::ln2, 1e-9);
  for (int i = 0; i < 20; ++i) {
    const double a = std::pow(10.0, -2.0 + 3.0 * i / 19.0);
    const double mi = binary_mutual_information(a);
    EXPECT_GE(mi, 0.0);
    EXPECT_LE(mi, std::numbers::ln2);
    EXPECT_NEAR(mi, 0.5 * a * binary_errors(a).causal, 1e-6) << a;
  }
}

TEST(BinaryMutualInformation, ImmseFiniteDifference) {
  for (double a : {0.25, 1.0, 4.0}) {
    const double h = 1e-4 * a;
    const double d = (binary_mutual_information(a + h) - binary_mutual_information(a - h)) / (2.0 * h);
    EXPECT_NEAR(d, 0.5 * binary_mmse(a), 1e-4);
  }
}

TEST(BinaryGrid, ConvergesToContinuumCausalError) {
  const double a = 1.0;
  double previous = INFINITY;
  for (std::size_t n : {25u, 50u, 100u, 200u}) {
    const TimeGrid g = TimeGrid::midpoint(1.0, n);
    const Eigen::VectorXd phi = unit_profile(g, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n)));
    const double gap = std::abs(binary_grid_causal_error(g, phi, a) - binary_errors(a).causal);
    EXPECT_LT(gap, previous);
    previous = gap;
  }
  // First order in the step: the current observation is part of the filter.
  EXPECT_LT(previous, 2e-3);
}

TEST(RunBatch, BinaryMonteCarloMatchesQuadrature) {
  const SimConfig cfg = binary_config(1.0, 20000, 42);
  const SimBatch batch = run_batch(cfg);
  const auto& phi = std::get<BinarySignal>(cfg.signal).profile;
  const double expected = binary_grid_causal_error(cfg.grid, phi, cfg.gamma);
  EXPECT_LE(std::abs(batch.causal_error.mean - expected), 3.0 * batch.causal_error.std_error);
}

TEST(RunBatch, GaussianMonteCarloMatchesFilterError) {
  const TimeGrid g = TimeGrid::midpoint(1.0, 40);
  const auto op = discretize(KernelSpec(family::Exponential{1.0, 1.0}, 1.0), g);
  const Spectrum s = eigendecompose(op);
  const SimConfig cfg = gaussian_config(s, g, 1.0, 4000, 77);
  const SimBatch batch = run_batch(cfg);
  const double expected = innovations_causal_error(op, 1.0);
  EXPECT_LE(std::abs(batch.causal_error.mean - expected), 3.0 * batch.causal_error.std_error);
  // Duncan: (gamma / 2) * error against the log-det information, up to discretization.
  const double mi = mutual_information_gaussian(s, 1.0);
  EXPECT_NEAR(0.5 * batch.causal_error.mean, mi, 3.0 * 0.5 * batch.causal_error.std_error + 0.02 * mi);
}

TEST(RunBatch, ReproducibleAcrossThreadCounts) {
  SimConfig cfg = binary_config(2.0, 501, 9, 30);
  const SimBatch one = run_batch(cfg);
  cfg.threads = 4;
  const SimBatch four = run_batch(cfg);
  EXPECT_EQ(one.signals, four.signals);
  EXPECT_EQ(one.increments, four.increments);
  EXPECT_EQ(one.causal_error.mean, four.causal_error.mean);
  EXPECT_EQ(one.causal_error.std_error, four.causal_error.std_error);

  const TimeGrid g = TimeGrid::midpoint(1.0, 20);
  const Spectrum s = eigendecompose(discretize(KernelSpec(family::BrownianMotion{}, 1.0), g));
  SimConfig gc = gaussian_config(s, g, 1.0, 123, 5);
  const SimBatch a = run_batch(gc);
  gc.threads = 3;
  const SimBatch b = run_batch(gc);
  EXPECT_EQ(a.estimates, b.estimates);
  EXPECT_EQ(a.causal_error.mean, b.causal_error.mean);
}

TEST(RunBatch, ZeroGammaErrorIsPriorPower) {
  const SimConfig cfg = binary_config(0.0, 1000, 1, 20);
  const SimBatch batch = run_batch(cfg);
  EXPECT_NEAR(batch.causal_error.mean, 1.0, 1e-12);
}

TEST(SimConfig, Validation) {
  SimConfig cfg = binary_config(1.0, 10, 1, 10);
  cfg.paths = 0;
  EXPECT_THROW(cfg.validate(), DomainError);
  cfg = binary_config(1.0, 10, 1, 10);
  std::get<BinarySignal>(cfg.signal).profile *= 1.1;
  EXPECT_THROW(cfg.validate(), DomainError);
  cfg = binary_config(-1.0, 10, 1, 10);
  EXPECT_THROW(cfg.validate(), DomainError);
  EXPECT_THROW(unit_profile(TimeGrid::midpoint(1.0, 3), Eigen::VectorXd::Zero(3)), DomainError);
}
