#include "gchan/sim.hpp"

#include "gchan/errors.hpp"
#include "gchan/infocore.hpp"
#include "gchan/parallel.hpp"
#include "gchan/quadrature.hpp"
#include "gchan/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gchan {

namespace {

constexpr std::uint64_t kSignalLane = 0;
constexpr std::uint64_t kNoiseLane = 1;

double log_cosh(double x) {
  const double ax = std::abs(x);
  return ax + std::log1p(std::exp(-2.0 * ax)) - std::numbers::ln2;
}

double profile_norm2(const TimeGrid& grid, const Eigen::VectorXd& profile) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < profile.size(); ++i) {
    s += grid.weight(static_cast<std::size_t>(i)) * profile(i) * profile(i);
  }
  return s;
}

void require_order(std::size_t order) {
  if (order < 8) throw DomainError("quadrature order must be at least 8");
}

double mmse_with(const QuadratureRule& rule, double m) {
  if (m <= 0.0) return 1.0;
  const double root_m = std::sqrt(m);
  double e = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double t = std::tanh(m + root_m * rule.nodes[i]);
    e += rule.weights[i] * (1.0 - t * t);
  }
  return e;
}

}  // namespace

int SimConfig::channels() const {
  if (const auto* g = std::get_if<GaussianSignal>(&signal)) return g->channels;
  return 1;
}

void SimConfig::validate() const {
  if (paths < 1) throw DomainError("simulation needs at least one path");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw DomainError("simulation gamma must be nonnegative");
  if (grid.size() == 0) throw DomainError("simulation grid is empty");
  if (const auto* b = std::get_if<BinarySignal>(&signal)) {
    if (b->profile.size() != static_cast<Eigen::Index>(grid.size())) {
      throw DomainError("binary profile length does not match the grid");
    }
    if (std::abs(profile_norm2(grid, b->profile) - 1.0) > 1e-10) {
      throw DomainError("binary profile must have unit norm sum w_i phi_i^2 = 1");
    }
  } else {
    const auto& g = std::get<GaussianSignal>(signal);
    if (g.channels < 1) throw DomainError("gaussian signal needs at least one channel");
    if (!g.spectrum.has_vectors()) throw DomainError("gaussian signal spectrum must carry eigenvectors");
    if (g.spectrum.vectors.rows() != dimension()) {
      throw DomainError("gaussian signal spectrum does not match the simulation grid");
    }
  }
}

Eigen::VectorXd unit_profile(const TimeGrid& grid, const Eigen::VectorXd& shape) {
  if (shape.size() != static_cast<Eigen::Index>(grid.size())) throw DomainError("profile length does not match grid");
  const double norm2 = profile_norm2(grid, shape);
  if (!(norm2 > 0.0)) throw DomainError("profile must not vanish");
  return shape / std::sqrt(norm2);
}

Eigen::MatrixXd sample_gaussian_paths(const Spectrum& spectrum, const SimConfig& config) {
  const Eigen::Index n = config.dimension();
  if (!spectrum.has_vectors() || spectrum.vectors.rows() != n) {
    throw DomainError("sample_gaussian_paths: spectrum does not match the simulation grid");
  }
  const int d = config.channels();
  Eigen::VectorXd inv_root_w(n);
  for (Eigen::Index k = 0; k < n; ++k) inv_root_w(k) = 1.0 / std::sqrt(config.grid.weight(static_cast<std::size_t>(k / d)));
  Eigen::Index rank = 0;
  while (rank < static_cast<Eigen::Index>(spectrum.size()) && spectrum.values[static_cast<std::size_t>(rank)] > 0.0) ++rank;
  // Columns phi_i sqrt(lambda_i) as grid functions.
  Eigen::MatrixXd factor(n, rank);
  for (Eigen::Index i = 0; i < rank; ++i) {
    factor.col(i) = inv_root_w.cwiseProduct(spectrum.vectors.col(i)) * std::sqrt(spectrum.values[static_cast<std::size_t>(i)]);
  }

  const auto paths = static_cast<Eigen::Index>(config.paths);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(paths, n);
  parallel_for(config.paths, config.threads, [&](std::size_t begin, std::size_t end) {
    Eigen::VectorXd xi(rank);
    for (std::size_t p = begin; p < end; ++p) {
      Xoshiro256 rng(stream_seed(config.seed, p, kSignalLane));
      for (Eigen::Index i = 0; i < rank; ++i) xi(i) = rng.normal();
      out.row(static_cast<Eigen::Index>(p)) = (factor * xi).transpose();
    }
  });
  return out;
}

Eigen::MatrixXd sample_binary_paths(const SimConfig& config) {
  const auto* b = std::get_if<BinarySignal>(&config.signal);
  if (b == nullptr) throw DomainError("sample_binary_paths: configuration does not describe a binary signal");
  const auto paths = static_cast<Eigen::Index>(config.paths);
  Eigen::MatrixXd out(paths, b->profile.size());
  parallel_for(config.paths, config.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      Xoshiro256 rng(stream_seed(config.seed, p, kSignalLane));
      out.row(static_cast<Eigen::Index>(p)) = rng.sign() * b->profile.transpose();
    }
  });
  return out;
}

Eigen::MatrixXd simulate_channel(const Eigen::MatrixXd& signals, const SimConfig& config) {
  const Eigen::Index n = config.dimension();
  if (signals.cols() != n || signals.rows() != static_cast<Eigen::Index>(config.paths)) {
    throw DomainError("simulate_channel: signal matrix shape does not match the configuration");
  }
  const int d = config.channels();
  const double root_gamma = std::sqrt(config.gamma);
  Eigen::MatrixXd out(signals.rows(), n);
  parallel_for(config.paths, config.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      Xoshiro256 rng(stream_seed(config.seed, p, kNoiseLane));
      const auto row = static_cast<Eigen::Index>(p);
      for (Eigen::Index k = 0; k < n; ++k) {
        const double w = config.grid.weight(static_cast<std::size_t>(k / d));
        out(row, k) = root_gamma * signals(row, k) * w + std::sqrt(w) * rng.normal();
      }
    }
  });
  return out;
}

Eigen::MatrixXd binary_causal_filter(const Eigen::MatrixXd& increments, const Eigen::VectorXd& profile,
                                     double gamma) {
  if (increments.cols() != profile.size()) throw DomainError("binary_causal_filter: shape mismatch");
  const double root_gamma = std::sqrt(gamma);
  Eigen::MatrixXd out(increments.rows(), increments.cols());
  for (Eigen::Index p = 0; p < increments.rows(); ++p) {
    double z = 0.0;
    for (Eigen::Index k = 0; k < increments.cols(); ++k) {
      z += profile(k) * increments(p, k);
      out(p, k) = std::tanh(root_gamma * z) * profile(k);
    }
  }
  return out;
}

Eigen::MatrixXd binary_noncausal_filter(const Eigen::MatrixXd& increments, const Eigen::VectorXd& profile,
                                        double gamma) {
  if (increments.cols() != profile.size()) throw DomainError("binary_noncausal_filter: shape mismatch");
  const double root_gamma = std::sqrt(gamma);
  Eigen::MatrixXd out(increments.rows(), increments.cols());
  for (Eigen::Index p = 0; p < increments.rows(); ++p) {
    const double z = increments.row(p).dot(profile);
    out.row(p) = std::tanh(root_gamma * z) * profile.transpose();
  }
  return out;
}

Estimate mc_estimate(std::span<const double> values) {
  if (values.size() < 2) throw DomainError("mc_estimate: need at least two samples");
  const auto n = static_cast<double>(values.size());
  const double mean = pairwise_sum(values) / n;
  std::vector<double> dev(values.size());
  std::transform(values.begin(), values.end(), dev.begin(), [mean](double v) { return (v - mean) * (v - mean); });
  const double variance = pairwise_sum(dev) / (n - 1.0);
  return {mean, std::sqrt(variance / n)};
}

double binary_mmse(double m, std::size_t order) {
  require_order(order);
  if (!(m >= 0.0)) throw DomainError("binary_mmse: snr must be nonnegative");
  if (m == 0.0) return 1.0;
  return mmse_with(cached_gauss_hermite_normal(order), m);
}

BinaryErrors binary_errors(double a, std::size_t order) {
  require_order(order);
  if (!(a >= 0.0) || !std::isfinite(a)) throw DomainError("binary_errors: a must be finite and nonnegative");
  if (a == 0.0) return {1.0, 1.0};
  const QuadratureRule& hermite = cached_gauss_hermite_normal(order);
  auto mmse = [&](double m) { return mmse_with(hermite, m); };
  // Panels [0, 1/2], then doubling, so large a keeps the resolution near 0.
  double integral = 0.0;
  double lo = 0.0;
  double hi = std::min(a, 0.5);
  while (lo < a) {
    integral += integrate_gauss_legendre(mmse, lo, hi, 24);
    lo = hi;
    hi = std::min(a, 2.0 * hi);
  }
  return {integral / a, mmse(a)};
}

double binary_mutual_information(double a, std::size_t order) {
  require_order(order);
  if (!(a >= 0.0) || !std::isfinite(a)) throw DomainError("binary_mutual_information: a must be finite and nonnegative");
  if (a == 0.0) return 0.0;
  const QuadratureRule& rule = cached_gauss_hermite_normal(order);
  const double root_a = std::sqrt(a);
  double e = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) e += rule.weights[i] * log_cosh(a + root_a * rule.nodes[i]);
  return std::clamp(a - e, 0.0, std::numbers::ln2);
}

double binary_grid_causal_error(const TimeGrid& grid, const Eigen::VectorXd& profile, double gamma,
                                std::size_t order) {
  require_order(order);
  if (profile.size() != static_cast<Eigen::Index>(grid.size())) throw DomainError("profile length does not match grid");
  const QuadratureRule& hermite = cached_gauss_hermite_normal(order);
  double information = 0.0;
  double error = 0.0;
  for (Eigen::Index k = 0; k < profile.size(); ++k) {
    const double energy = grid.weight(static_cast<std::size_t>(k)) * profile(k) * profile(k);
    information += energy;
    error += energy * mmse_with(hermite, gamma * information);
  }
  return error;
}

SimBatch run_batch(const SimConfig& config) {
  config.validate();
  SimBatch batch;
  const int d = config.channels();
  const Eigen::Index n = config.dimension();
  if (const auto* g = std::get_if<GaussianSignal>(&config.signal)) {
    batch.signals = sample_gaussian_paths(g->spectrum, config);
    batch.increments = simulate_channel(batch.signals, config);
    const auto& s = g->spectrum;
    Eigen::VectorXd lambda = Eigen::Map<const Eigen::VectorXd>(s.values.data(), static_cast<Eigen::Index>(s.size()));
    const Eigen::MatrixXd cov = s.vectors * lambda.asDiagonal() * s.vectors.transpose();
    const GaussianCausalFilter filter(cov, config.gamma, d);
    Eigen::VectorXd root_w(n);
    for (Eigen::Index k = 0; k < n; ++k) root_w(k) = std::sqrt(config.grid.weight(static_cast<std::size_t>(k / d)));
    batch.estimates.resize(batch.signals.rows(), n);
    parallel_for(config.paths, config.threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t p = begin; p < end; ++p) {
        const auto row = static_cast<Eigen::Index>(p);
        const Eigen::VectorXd z = batch.increments.row(row).transpose().cwiseQuotient(root_w);
        batch.estimates.row(row) = filter.apply(z).cwiseQuotient(root_w).transpose();
      }
    });
  } else {
    const auto& b = std::get<BinarySignal>(config.signal);
    batch.signals = sample_binary_paths(config);
    batch.increments = simulate_channel(batch.signals, config);
    batch.estimates = binary_causal_filter(batch.increments, b.profile, config.gamma);
  }
  batch.squared_errors.resize(batch.signals.rows());
  for (Eigen::Index p = 0; p < batch.signals.rows(); ++p) {
    double e = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double diff = batch.signals(p, k) - batch.estimates(p, k);
      e += config.grid.weight(static_cast<std::size_t>(k / d)) * diff * diff;
    }
    batch.squared_errors(p) = e;
  }
  if (config.paths >= 2) {
    batch.causal_error = mc_estimate(std::span<const double>(batch.squared_errors.data(),
                                                             static_cast<std::size_t>(batch.squared_errors.size())));
  } else {
    batch.causal_error = {batch.squared_errors(0), 0.0};
  }
  return batch;
}

}  // namespace gchan
