#pragma once

#include "gchan/kernels.hpp"

#include <Eigen/Dense>

#include <vector>

namespace gchan {

// Nystrom discretization of the covariance operator: A = W^{1/2} K W^{1/2}
// where K is the kernel matrix and W the diagonal of quadrature weights.
// Coordinates are time-major (index = i * channels + c), so prefixes of the
// coordinate vector are exactly the pasts of the time grid.
struct DiscretizedOperator {
  TimeGrid grid;
  int channels = 1;
  Eigen::MatrixXd matrix;

  Eigen::Index dimension() const { return matrix.rows(); }
  // Quadrature weight attached to coordinate k.
  double weight(Eigen::Index k) const { return grid.weight(static_cast<std::size_t>(k / channels)); }
};

DiscretizedOperator discretize(const KernelSpec& spec, const TimeGrid& grid);

// Nonincreasing nonnegative eigenvalues with (optionally) orthonormal
// eigenvectors as matrix columns.
struct Spectrum {
  std::vector<double> values;
  Eigen::MatrixXd vectors;
  // Smallest eigenvalue before clamping to zero; kept for PSD diagnostics.
  double raw_min = 0.0;
  int sweeps = 0;

  // Sorts into nonincreasing order; throws DomainError on negative input.
  static Spectrum from_values(std::vector<double> values);

  std::size_t size() const { return values.size(); }
  bool has_vectors() const { return vectors.size() > 0; }
  double max() const { return values.empty() ? 0.0 : values.front(); }
};

struct JacobiOptions {
  // Stop once the off-diagonal Frobenius norm is below tolerance * ||A||_F.
  double tolerance = 1e-12;
  int max_sweeps = 50;
  bool compute_vectors = true;
};

// Eigenvalues at or below this fraction of the largest are reported as 0.
inline constexpr double kClampThreshold = 1e-10;

// Cyclic Jacobi eigensolver using round-robin pair ordering: every round
// applies n/2 disjoint rotations. Deterministic for a given input.
// Throws NumericError when the sweep cap is reached.
Spectrum eigendecompose(const Eigen::MatrixXd& symmetric, const JacobiOptions& options = {});
Spectrum eigendecompose(const DiscretizedOperator& op, const JacobiOptions& options = {});

// s_k = sum_i lambda_i^k
double schatten_sum(const Spectrum& spectrum, int k);

// sum_i log(1 + gamma lambda_i) = log det(I + gamma A)
double logdet_perturbation(const Spectrum& spectrum, double gamma);

struct CholeskyFactor {
  Eigen::MatrixXd lower;
  // Diagonal shift that was added to make the factorization succeed.
  double jitter = 0.0;

  double log_determinant() const;
};

// L L^T = M for symmetric positive definite M. A jitter up to 1e-12 trace(M)
// is tried before giving up with NumericError.
CholeskyFactor cholesky(const Eigen::MatrixXd& m);

// log det(I + gamma M) through the Cholesky factor of I + gamma M.
double logdet_identity_plus(const Eigen::MatrixXd& m, double gamma);

}  // namespace gchan
