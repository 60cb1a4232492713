#pragma once

#include "gchan/kernels.hpp"
#include "gchan/operator.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace gchan {

// Gaussian signal drawn from the Karhunen-Loeve expansion of a discretized
// operator on the simulation grid (spectrum must carry eigenvectors).
struct GaussianSignal {
  Spectrum spectrum;
  int channels = 1;
};

// x = eps * phi with eps = +-1 equiprobable and sum_i w_i phi_i^2 = 1.
struct BinarySignal {
  Eigen::VectorXd profile;
};

using SignalModel = std::variant<GaussianSignal, BinarySignal>;

struct SimConfig {
  std::uint64_t seed = 0;
  std::size_t paths = 1;
  double gamma = 1.0;
  TimeGrid grid;
  SignalModel signal;
  unsigned threads = 1;

  // Throws DomainError on violated invariants.
  void validate() const;
  int channels() const;
  Eigen::Index dimension() const { return static_cast<Eigen::Index>(grid.size()) * channels(); }
};

// Binary profile proportional to `shape` at the nodes, scaled to unit norm.
Eigen::VectorXd unit_profile(const TimeGrid& grid, const Eigen::VectorXd& shape);

// Paths x Dimension matrix of node values x = sum_i sqrt(lambda_i) xi_i phi_i,
// with phi_i the eigenvectors rescaled by W^{-1/2}.
Eigen::MatrixXd sample_gaussian_paths(const Spectrum& spectrum, const SimConfig& config);

// Node values eps * phi per path.
Eigen::MatrixXd sample_binary_paths(const SimConfig& config);

// dy_k = sqrt(gamma) x_k w_k + sqrt(w_k) xi_k for every path and coordinate.
Eigen::MatrixXd simulate_channel(const Eigen::MatrixXd& signals, const SimConfig& config);

// Exact causal conditional mean for the two-point prior:
// x_hat_k = tanh(sqrt(gamma) z_k) phi_k, z_k = sum_{j <= k} phi_j dy_j.
Eigen::MatrixXd binary_causal_filter(const Eigen::MatrixXd& increments, const Eigen::VectorXd& profile,
                                     double gamma);

// Smoothing estimate tanh(sqrt(gamma) z_n) phi_k using the whole record.
Eigen::MatrixXd binary_noncausal_filter(const Eigen::MatrixXd& increments, const Eigen::VectorXd& profile,
                                        double gamma);

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// Sample mean and standard error (unbiased sample deviation / sqrt(paths)),
// pairwise-summed in index order. Needs at least two values.
Estimate mc_estimate(std::span<const double> values);

// 1 - E tanh^2(m + sqrt(m) Z) for the +-1 input at SNR m.
double binary_mmse(double m, std::size_t order = 200);

struct BinaryErrors {
  double causal = 1.0;
  double noncausal = 1.0;
};

// Noncausal: binary_mmse(a). Causal: (1/a) int_0^a binary_mmse(m) dm.
// Order below 8 is rejected with DomainError.
BinaryErrors binary_errors(double a, std::size_t order = 200);

// a - E log cosh(a + sqrt(a) Z), in [0, log 2].
double binary_mutual_information(double a, std::size_t order = 200);

// Expected causal error of the grid filter: sum_k w_k phi_k^2 binary_mmse(gamma S_k),
// S_k = sum_{j <= k} w_j phi_j^2.
double binary_grid_causal_error(const TimeGrid& grid, const Eigen::VectorXd& profile, double gamma,
                                std::size_t order = 200);

struct NamedEstimate {
  std::string name;
  double mean = 0.0;
  double std_error = 0.0;
};

struct SimBatch {
  Eigen::MatrixXd signals;      // paths x dimension
  Eigen::MatrixXd increments;   // paths x dimension
  Eigen::MatrixXd estimates;    // paths x dimension, causal filter output
  Eigen::VectorXd squared_errors;  // per path sum_k w_k (x_k - x_hat_k)^2
  Estimate causal_error;
};

// Full pipeline: sample, transmit, filter causally, score.
SimBatch run_batch(const SimConfig& config);

}  // namespace gchan
