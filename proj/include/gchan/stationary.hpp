#pragma once

#include "gchan/kernels.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace gchan {

// Diagonal matrix spectral density; channel c is a sum of Lorentzian terms
// 2 alpha sigma^2 / (alpha^2 + xi^2), the transform of sigma^2 exp(-alpha |tau|).
class SpectralDensity {
 public:
  explicit SpectralDensity(std::vector<std::vector<ExponentialTerm>> channels);
  static SpectralDensity lorentzian(double variance, double rate);
  // Exponential and MatrixStationary kernels only; DomainError otherwise.
  static SpectralDensity from_kernel(const KernelSpec& spec);

  int dimension() const { return static_cast<int>(channels_.size()); }
  const std::vector<std::vector<ExponentialTerm>>& channels() const { return channels_; }

  double channel(int c, double xi) const;
  Eigen::MatrixXd eval(double xi) const;
  // log det(I + gamma S(xi))
  double log_det(double xi, double gamma) const;
  // sum of variances = (1/2pi) int tr S
  double total_power() const;
  // int_cutoff^inf tr S(xi) dxi
  double trace_tail(double cutoff) const;
  // Largest channel value S_c(0).
  double peak() const;

  // The matching stationary covariance kernel on [0, horizon].
  KernelSpec kernel(double horizon) const;

 private:
  std::vector<std::vector<ExponentialTerm>> channels_;
};

struct YjIntegral {
  double value = 0.0;
  double error_bound = 0.0;
  double cutoff = 0.0;
  std::size_t evaluations = 0;
};

// (2 pi gamma)^{-1} int log det(I + gamma S(xi)) dxi. Adaptive Simpson on
// [0, cutoff], plus the closed-form first-order tail gamma int tr S; the
// cutoff keeps the second-order remainder below tolerance / 20.
// Throws NumericError when the evaluation budget cannot meet the tolerance.
YjIntegral yj_integral_detail(const SpectralDensity& density, double gamma, double tolerance = 1e-8);
double yj_integral(const SpectralDensity& density, double gamma, double tolerance = 1e-8);

// (sqrt(alpha^2 + 2 gamma alpha sigma^2) - alpha) / gamma, evaluated in the
// rationalized form 2 alpha sigma^2 / (sqrt(...) + alpha).
double ou_yj_closed_form(double rate, double variance, double gamma);

inline constexpr std::size_t kDefaultEigenBudget = 2000;

// Eigenvalues of the midpoint-discretized Toeplitz operator with kernel
// R(t - s) on [0, T]. Throws ConfigError when n * d exceeds max_dimension.
std::vector<double> toeplitz_spectrum(const KernelSpec& spec, double horizon, std::size_t n,
                                      std::size_t max_dimension = kDefaultEigenBudget);

// (gamma T)^{-1} sum_i log(1 + gamma lambda_i)
double toeplitz_average(const std::vector<double>& eigenvalues, double gamma, double horizon);

struct StudyRow {
  double horizon = 0.0;
  std::size_t n = 0;
  double average = 0.0;
  double target = 0.0;
  double gap = 0.0;  // |average - target|
};

struct ToeplitzStudy {
  double gamma = 0.0;
  double step = 0.0;
  double target = 0.0;
  std::vector<StudyRow> rows;  // sorted by horizon
  bool monotone = true;        // gaps strictly decreasing
  double fitted_rate = 0.0;    // beta in gap ~ c T^{-beta}
  double fitted_constant = 0.0;
};

// Runs one Toeplitz eigensolve per horizon with n = round(T / step).
ToeplitzStudy convergence_study(const SpectralDensity& density, double gamma, std::vector<double> horizons,
                                double step, unsigned threads = 1,
                                std::size_t max_dimension = kDefaultEigenBudget);

}  // namespace gchan
