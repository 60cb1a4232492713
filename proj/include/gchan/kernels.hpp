#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <variant>
#include <vector>

namespace gchan {

// Midpoint discretization of [0, T]: node i sits at (i + 1/2) T / n and
// carries weight T / n.
class TimeGrid {
 public:
  TimeGrid() = default;
  static TimeGrid midpoint(double horizon, std::size_t n);

  double horizon() const { return horizon_; }
  std::size_t size() const { return nodes_.size(); }
  double node(std::size_t i) const { return nodes_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  double step() const { return horizon_ / static_cast<double>(nodes_.size()); }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }

  // Index of the cell [i T/n, (i+1) T/n) containing t (the last cell is closed).
  std::size_t cell_of(double t) const;

  // Number of nodes with t_i <= t; the truncation-to-prefix projection used
  // as the time structure of causal estimation.
  std::size_t prefix_count(double t) const;

  bool operator==(const TimeGrid&) const = default;

 private:
  double horizon_ = 0.0;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

struct ExponentialTerm {
  double variance = 1.0;
  double rate = 1.0;
};

namespace family {

// sigma^2 exp(-alpha |t - s|)
struct Exponential {
  double variance = 1.0;
  double rate = 1.0;
};

// min(s, t)
struct BrownianMotion {};

// min(s, t) - s t / T
struct BrownianBridge {};

// sigma^2 exp(-(t - s)^2 / (2 l^2))
struct SquaredExponential {
  double variance = 1.0;
  double length_scale = 1.0;
};

// sum_k lambda_k phi_k(s) phi_k(t) with phi_k given on a grid and extended
// piecewise constant over the grid cells.
struct FiniteRank {
  std::vector<double> eigenvalues;
  Eigen::MatrixXd basis;  // grid.size() x rank, columns orthonormal in sum_i w_i f_i g_i
  TimeGrid grid;
};

// Block-diagonal stationary kernel; channel c is a sum of exponential terms.
struct MatrixStationary {
  std::vector<std::vector<ExponentialTerm>> channels;
};

}  // namespace family

using KernelFamily =
    std::variant<family::Exponential, family::BrownianMotion, family::BrownianBridge,
                 family::SquaredExponential, family::FiniteRank, family::MatrixStationary>;

// A covariance kernel r(s, t) on [0, T], scalar or d x d matrix valued.
class KernelSpec {
 public:
  // Throws DomainError when parameters violate the family's invariants.
  KernelSpec(KernelFamily family, double horizon);

  const KernelFamily& family() const { return family_; }
  double horizon() const { return horizon_; }
  int channels() const;
  bool stationary() const;

  // r(s, t) as a channels() x channels() matrix. Requires 0 <= s, t <= T.
  Eigen::MatrixXd eval(double s, double t) const;

  // Scalar fast path; channel pair (a, b). No range check.
  double entry(double s, double t, int a = 0, int b = 0) const;

 private:
  KernelFamily family_;
  double horizon_;
};

// Known eigenvalues of the covariance operator: Brownian motion on [0, T]
// (T^2 / ((i - 1/2) pi)^2) and the stored values of a finite-rank kernel.
std::optional<std::vector<double>> analytic_spectrum(const KernelSpec& spec, std::size_t count);

// Grid functions sqrt(1/T), sqrt(2/T) cos(k pi t / T), k = 1..count-1. These
// are exactly orthonormal on a midpoint grid.
Eigen::MatrixXd cosine_basis(const TimeGrid& grid, std::size_t count);

// Kernel matrix K with K(i d + a, j d + b) = r_ab(t_i, t_j), time-major ordering.
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const TimeGrid& grid);

}  // namespace gchan
