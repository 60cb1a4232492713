#pragma once

#include "gchan/operator.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace gchan {

// Strictly increasing positive SNR values.
class GammaGrid {
 public:
  // Throws DomainError unless values are positive and strictly increasing.
  explicit GammaGrid(std::vector<double> values);
  static GammaGrid log_spaced(double min, double max, std::size_t points);
  static GammaGrid linear(double min, double max, std::size_t points);

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

 private:
  std::vector<double> values_;
};

// Smoothing error sum_i lambda_i / (1 + gamma lambda_i).
double noncausal_mmse(const Spectrum& spectrum, double gamma);

// Filtering error gamma^{-1} sum_i log(1 + gamma lambda_i); s_1 at gamma = 0.
double causal_mmse(const Spectrum& spectrum, double gamma);

// (1/2) sum_i log(1 + gamma lambda_i)
double mutual_information_gaussian(const Spectrum& spectrum, double gamma);

// How dI/dgamma and d(gamma causal)/dgamma are obtained for the residuals.
enum class DerivativeMode {
  Analytic,          // (1/2) sum lambda / (1 + gamma lambda)
  ComplexStep,       // Im f(gamma + i h) / h on the log-det form
  FiniteDifference,  // central difference, step 1e-4 gamma
};

struct CurvePoint {
  double gamma = 0.0;
  double causal = 0.0;
  double noncausal = 0.0;
  double mutual_info = 0.0;
  double res_duncan = 0.0;  // I - (gamma/2) causal
  double res_immse = 0.0;   // dI/dgamma - noncausal / 2
  double res_link = 0.0;    // d(gamma causal)/dgamma - noncausal
};

struct ErrorCurves {
  std::vector<CurvePoint> rows;
  DerivativeMode mode = DerivativeMode::Analytic;

  // max over rows of |residual| / (1 + |I|)
  double max_relative_residual() const;
};

ErrorCurves verify_identities(const Spectrum& spectrum, const GammaGrid& grid,
                              DerivativeMode mode = DerivativeMode::Analytic);

struct ConcavityReport {
  bool concave = true;
  double max_second_difference = 0.0;  // largest (most positive) divided difference
  double scale = 0.0;                  // max |h|
  std::array<double, 3> worst_triple{};
};

// Second divided differences of h(eta) = causal_mmse(1/eta) must stay below
// rel_tol * max|h|. Needs at least three increasing positive eta values.
ConcavityReport concavity_check(const Spectrum& spectrum, std::span<const double> eta, double rel_tol = 1e-9);

// (s_1 - noncausal) / (s_1 - causal); tends to 2 as gamma -> 0. Both gaps are
// evaluated without cancellation. Throws NumericError when the causal gap
// underflows.
double ratio_small_gamma(const Spectrum& spectrum, double gamma);

// Small-gamma power series: causal ~ sum_k c_k gamma^k, noncausal ~ sum_k d_k gamma^k
// with c_k = (-1)^k s_{k+1} / (k+1), d_k = (-1)^k s_{k+1}.
struct SeriesCoefficients {
  std::vector<double> causal;
  std::vector<double> noncausal;

  double eval_causal(double gamma) const;
  double eval_noncausal(double gamma) const;
};

SeriesCoefficients series_expansion(const Spectrum& spectrum, int order);

// Exact sequential Gaussian conditioning of u ~ N(0, cov) on z_j = sqrt(gamma) u_j + xi_j,
// visiting coordinates in `order` and grouping them in consecutive blocks of
// `block` coordinates (one block = one time node).
struct ConditioningResult {
  std::vector<double> predictive;  // Var(u_j | earlier observations), in visiting order
  double filtered_error = 0.0;     // sum over blocks of the block's variances after the block
  double log_det = 0.0;            // sum log(1 + gamma p_j)
};

ConditioningResult sequential_conditioning(const Eigen::MatrixXd& cov, double gamma,
                                           std::span<const Eigen::Index> order, int block = 1);

// sum_k w_k Var(x_k | z_1..z_k) on the operator's grid, conditioning in time
// order and including the current step.
double innovations_causal_error(const DiscretizedOperator& op, double gamma);

// Causal linear filter for u ~ N(0, A) observed through z = sqrt(gamma) u + xi,
// one time block at a time. Gains are precomputed from the covariance
// recursion; apply() is linear in z.
class GaussianCausalFilter {
 public:
  GaussianCausalFilter(const Eigen::MatrixXd& cov, double gamma, int block = 1);

  // Filtered estimate of u_k given z up to and including k's block.
  Eigen::VectorXd apply(const Eigen::VectorXd& z) const;
  double expected_error() const { return expected_error_; }
  Eigen::Index dimension() const { return gains_.rows(); }

 private:
  Eigen::MatrixXd gains_;  // column j: update direction for innovation j
  double sqrt_gamma_;
  int block_;
  double expected_error_ = 0.0;
};

// Linear causal-feedback channel u = sqrt(gamma) x + F y, y = u + w, where F
// is strictly lower triangular and x ~ N(0, signal_covariance).
struct FeedbackModel {
  Eigen::MatrixXd signal_covariance;
  Eigen::MatrixXd feedback;
  double gamma = 1.0;

  // Throws DomainError unless shapes agree, F is strictly lower triangular and gamma >= 0.
  void validate() const;
};

// Strictly lower triangular matrix with entries uniform on [-amplitude, amplitude].
Eigen::MatrixXd random_causal_feedback(Eigen::Index n, double amplitude, std::uint64_t seed);

// I(x; y) = (1/2)[log det Cov(y) - log det Cov(y | x)] via Cholesky factors.
double gaussian_mi_logdet(const FeedbackModel& model);

struct FeedbackDuncan {
  double mutual_information = 0.0;
  double half_causal_error = 0.0;      // (1/2) E|u - u_hat|^2
  double residual = 0.0;               // I - (1/2) E|u - u_hat|^2
  std::vector<double> predictive;      // Var(u_k | y_1..y_{k-1})
  double half_predictive_error = 0.0;  // (1/2) sum p_k, upper sample-level bracket
  double half_filtered_error = 0.0;    // (1/2) sum p_k / (1 + p_k), lower bracket
};

// Each coordinate slot k is observed continuously as y_k(s) = u_k s + w_k(s),
// s in [0, 1], so the causal error inside a slot integrates p/(1 + p s) and
// E|u - u_hat|^2 = sum_k log(1 + p_k).
FeedbackDuncan duncan_feedback_check(const FeedbackModel& model);

}  // namespace gchan
