#include "gchan/infocore.hpp"

#include "gchan/errors.hpp"
#include "gchan/rng.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <sstream>

namespace gchan {

namespace {

void require_gamma(double gamma, const char* where) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw DomainError(std::string(where) + ": gamma must be finite and nonnegative");
  }
}

// x - log(1 + x) without cancellation for small |x|.
double x_minus_log1p(double x) {
  if (std::abs(x) < 0.1) {
    double term = x * x;
    double sum = 0.0;
    for (int k = 2; k < 60; ++k) {
      const double add = term / k;
      sum += (k % 2 == 0) ? add : -add;
      if (std::abs(add) <= 1e-18 * std::abs(sum)) break;
      term *= x;
    }
    return sum;
  }
  return x - std::log1p(x);
}

// f(gamma) = sum log(1 + gamma lambda) and its derivative under each mode.
double logdet_derivative(const Spectrum& spectrum, double gamma, DerivativeMode mode) {
  switch (mode) {
    case DerivativeMode::Analytic: {
      double s = 0.0;
      for (double l : spectrum.values) s += l / (1.0 + gamma * l);
      return s;
    }
    case DerivativeMode::ComplexStep: {
      const double h = 1e-20 * std::max(gamma, 1.0);
      const std::complex<double> g(gamma, h);
      double s = 0.0;
      for (double l : spectrum.values) s += std::log(1.0 + g * l).imag();
      return s / h;
    }
    case DerivativeMode::FiniteDifference: {
      const double h = 1e-4 * gamma;
      if (h == 0.0) return logdet_derivative(spectrum, gamma, DerivativeMode::Analytic);
      return (logdet_perturbation(spectrum, gamma + h) - logdet_perturbation(spectrum, gamma - h)) / (2.0 * h);
    }
  }
  return 0.0;
}

void check_square(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols()) throw DomainError(std::string(what) + " must be square");
}

}  // namespace

GammaGrid::GammaGrid(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw DomainError("gamma grid is empty");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!(values_[i] > 0.0) || !std::isfinite(values_[i])) throw DomainError("gamma grid values must be positive");
    if (i > 0 && !(values_[i] > values_[i - 1])) throw DomainError("gamma grid must be strictly increasing");
  }
}

GammaGrid GammaGrid::log_spaced(double min, double max, std::size_t points) {
  if (!(min > 0.0) || !(max >= min) || points == 0) throw DomainError("invalid log-spaced gamma grid");
  if (points == 1) return GammaGrid({min});
  std::vector<double> v(points);
  const double a = std::log(min);
  const double b = std::log(max);
  for (std::size_t i = 0; i < points; ++i) {
    v[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
  }
  v.front() = min;
  v.back() = max;
  return GammaGrid(std::move(v));
}

GammaGrid GammaGrid::linear(double min, double max, std::size_t points) {
  if (!(min > 0.0) || !(max >= min) || points == 0) throw DomainError("invalid linear gamma grid");
  if (points == 1) return GammaGrid({min});
  std::vector<double> v(points);
  for (std::size_t i = 0; i < points; ++i) {
    v[i] = min + (max - min) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return GammaGrid(std::move(v));
}

double noncausal_mmse(const Spectrum& spectrum, double gamma) {
  require_gamma(gamma, "noncausal_mmse");
  double s = 0.0;
  for (double l : spectrum.values) s += l / (1.0 + l * gamma);
  return s;
}

double causal_mmse(const Spectrum& spectrum, double gamma) {
  require_gamma(gamma, "causal_mmse");
  if (gamma == 0.0) return schatten_sum(spectrum, 1);
  return logdet_perturbation(spectrum, gamma) / gamma;
}

double mutual_information_gaussian(const Spectrum& spectrum, double gamma) {
  require_gamma(gamma, "mutual_information_gaussian");
  return 0.5 * logdet_perturbation(spectrum, gamma);
}

double ErrorCurves::max_relative_residual() const {
  double worst = 0.0;
  for (const auto& r : rows) {
    const double scale = 1.0 + std::abs(r.mutual_info);
    worst = std::max({worst, std::abs(r.res_duncan) / scale, std::abs(r.res_immse) / scale,
                      std::abs(r.res_link) / scale});
  }
  return worst;
}

ErrorCurves verify_identities(const Spectrum& spectrum, const GammaGrid& grid, DerivativeMode mode) {
  ErrorCurves curves;
  curves.mode = mode;
  curves.rows.reserve(grid.size());
  for (double gamma : grid.values()) {
    CurvePoint p;
    p.gamma = gamma;
    p.causal = causal_mmse(spectrum, gamma);
    p.noncausal = noncausal_mmse(spectrum, gamma);
    p.mutual_info = mutual_information_gaussian(spectrum, gamma);
    const double d_logdet = logdet_derivative(spectrum, gamma, mode);
    p.res_duncan = p.mutual_info - 0.5 * gamma * p.causal;
    p.res_immse = 0.5 * d_logdet - 0.5 * p.noncausal;
    p.res_link = d_logdet - p.noncausal;
    curves.rows.push_back(p);
  }
  return curves;
}

ConcavityReport concavity_check(const Spectrum& spectrum, std::span<const double> eta, double rel_tol) {
  if (eta.size() < 3) throw DomainError("concavity_check: need at least three eta values");
  for (std::size_t i = 0; i < eta.size(); ++i) {
    if (!(eta[i] > 0.0) || (i > 0 && !(eta[i] > eta[i - 1]))) {
      throw DomainError("concavity_check: eta must be positive and strictly increasing");
    }
  }
  std::vector<double> h(eta.size());
  for (std::size_t i = 0; i < eta.size(); ++i) h[i] = causal_mmse(spectrum, 1.0 / eta[i]);

  ConcavityReport report;
  for (double v : h) report.scale = std::max(report.scale, std::abs(v));
  report.max_second_difference = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < eta.size(); ++i) {
    const double left = (h[i] - h[i - 1]) / (eta[i] - eta[i - 1]);
    const double right = (h[i + 1] - h[i]) / (eta[i + 1] - eta[i]);
    const double dd = (right - left) / (eta[i + 1] - eta[i - 1]);
    if (dd > report.max_second_difference) {
      report.max_second_difference = dd;
      report.worst_triple = {eta[i - 1], eta[i], eta[i + 1]};
    }
  }
  report.concave = report.max_second_difference <= rel_tol * report.scale;
  return report;
}

double ratio_small_gamma(const Spectrum& spectrum, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("ratio_small_gamma: gamma must be positive");
  double noncausal_gap = 0.0;
  double causal_gap = 0.0;
  for (double l : spectrum.values) {
    const double x = gamma * l;
    noncausal_gap += x * l / (1.0 + x);
    causal_gap += x_minus_log1p(x) / gamma;
  }
  if (!(noncausal_gap > 0.0)) throw DomainError("ratio_small_gamma: s_1 - noncausal error must be positive");
  if (!(causal_gap > 0.0) || !std::isnormal(causal_gap)) {
    throw NumericError("ratio_small_gamma: gamma too small for float precision");
  }
  return noncausal_gap / causal_gap;
}

double SeriesCoefficients::eval_causal(double gamma) const {
  double s = 0.0;
  for (auto it = causal.rbegin(); it != causal.rend(); ++it) s = s * gamma + *it;
  return s;
}

double SeriesCoefficients::eval_noncausal(double gamma) const {
  double s = 0.0;
  for (auto it = noncausal.rbegin(); it != noncausal.rend(); ++it) s = s * gamma + *it;
  return s;
}

SeriesCoefficients series_expansion(const Spectrum& spectrum, int order) {
  if (order < 0 || order > 12) throw DomainError("series_expansion: order must lie in [0, 12]");
  SeriesCoefficients out;
  for (int k = 0; k <= order; ++k) {
    const double s = schatten_sum(spectrum, k + 1);
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    if (!std::isfinite(s)) throw NumericError("series_expansion: Schatten sum overflow at order " + std::to_string(k));
    out.noncausal.push_back(sign * s);
    out.causal.push_back(sign * s / (k + 1));
  }
  return out;
}

ConditioningResult sequential_conditioning(const Eigen::MatrixXd& cov, double gamma,
                                           std::span<const Eigen::Index> order, int block) {
  require_gamma(gamma, "sequential_conditioning");
  check_square(cov, "covariance");
  const Eigen::Index n = cov.rows();
  if (static_cast<Eigen::Index>(order.size()) != n) throw DomainError("sequential_conditioning: order size mismatch");
  if (block < 1 || n % block != 0) throw DomainError("sequential_conditioning: block must divide the dimension");

  Eigen::MatrixXd p(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) p(i, j) = cov(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }

  ConditioningResult out;
  out.predictive.reserve(static_cast<std::size_t>(n));
  Eigen::VectorXd c;
  for (Eigen::Index start = 0; start < n; start += block) {
    for (Eigen::Index j = start; j < start + block; ++j) {
      const double pj = p(j, j);
      const double innovation_var = gamma * pj + 1.0;
      if (!(innovation_var > 0.0) || !std::isfinite(innovation_var)) {
        std::ostringstream msg;
        msg << "sequential_conditioning: nonpositive innovation variance " << innovation_var << " at step " << j;
        throw NumericError(msg.str());
      }
      out.predictive.push_back(pj);
      out.log_det += std::log1p(gamma * pj);
      const Eigen::Index r = n - start;
      c = p.col(j).tail(r);
      p.bottomRightCorner(r, r).noalias() -= (gamma / innovation_var) * c * c.transpose();
    }
    for (Eigen::Index j = start; j < start + block; ++j) out.filtered_error += p(j, j);
  }
  return out;
}

double innovations_causal_error(const DiscretizedOperator& op, double gamma) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(op.dimension()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  return sequential_conditioning(op.matrix, gamma, order, op.channels).filtered_error;
}

GaussianCausalFilter::GaussianCausalFilter(const Eigen::MatrixXd& cov, double gamma, int block)
    : sqrt_gamma_(std::sqrt(gamma)), block_(block) {
  require_gamma(gamma, "GaussianCausalFilter");
  check_square(cov, "covariance");
  const Eigen::Index n = cov.rows();
  if (block < 1 || n % block != 0) throw DomainError("GaussianCausalFilter: block must divide the dimension");
  gains_ = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd p = cov;
  Eigen::VectorXd c;
  for (Eigen::Index start = 0; start < n; start += block) {
    const Eigen::Index r = n - start;
    for (Eigen::Index j = start; j < start + block; ++j) {
      const double innovation_var = gamma * p(j, j) + 1.0;
      c = p.col(j).tail(r);
      gains_.col(j).tail(r) = (sqrt_gamma_ / innovation_var) * c;
      p.bottomRightCorner(r, r).noalias() -= (gamma / innovation_var) * c * c.transpose();
    }
    for (Eigen::Index j = start; j < start + block; ++j) expected_error_ += p(j, j);
  }
}

Eigen::VectorXd GaussianCausalFilter::apply(const Eigen::VectorXd& z) const {
  const Eigen::Index n = gains_.rows();
  if (z.size() != n) throw DomainError("GaussianCausalFilter: observation size mismatch");
  Eigen::VectorXd m = Eigen::VectorXd::Zero(n);
  for (Eigen::Index start = 0; start < n; start += block_) {
    const Eigen::Index r = n - start;
    for (Eigen::Index j = start; j < start + block_; ++j) {
      const double innovation = z(j) - sqrt_gamma_ * m(j);
      m.tail(r) += innovation * gains_.col(j).tail(r);
    }
  }
  return m;
}

void FeedbackModel::validate() const {
  check_square(signal_covariance, "signal covariance");
  check_square(feedback, "feedback gain");
  if (feedback.rows() != signal_covariance.rows()) throw DomainError("feedback gain and signal covariance differ in size");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw DomainError("feedback model: gamma must be nonnegative");
  for (Eigen::Index j = 0; j < feedback.cols(); ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      if (feedback(i, j) != 0.0) throw DomainError("feedback gain must be strictly lower triangular");
    }
  }
}

Eigen::MatrixXd random_causal_feedback(Eigen::Index n, double amplitude, std::uint64_t seed) {
  Xoshiro256 rng(seed);
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 1; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) f(i, j) = rng.uniform(-amplitude, amplitude);
  }
  return f;
}

namespace {

// (I - F)^{-1}
Eigen::MatrixXd causal_resolvent(const Eigen::MatrixXd& f) {
  const Eigen::Index n = f.rows();
  const Eigen::MatrixXd i_minus_f = Eigen::MatrixXd::Identity(n, n) - f;
  return i_minus_f.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

double gaussian_mi_logdet(const FeedbackModel& model) {
  model.validate();
  const Eigen::Index n = model.feedback.rows();
  const Eigen::MatrixXd resolvent = causal_resolvent(model.feedback);
  const Eigen::MatrixXd inner = model.gamma * model.signal_covariance + Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd cov_y = symmetrized(resolvent * inner * resolvent.transpose());
  const Eigen::MatrixXd cov_y_given_x = symmetrized(resolvent * resolvent.transpose());
  return 0.5 * (cholesky(cov_y).log_determinant() - cholesky(cov_y_given_x).log_determinant());
}

FeedbackDuncan duncan_feedback_check(const FeedbackModel& model) {
  model.validate();
  const Eigen::Index n = model.feedback.rows();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd resolvent = causal_resolvent(model.feedback);
  const Eigen::MatrixXd cov_y =
      symmetrized(resolvent * (model.gamma * model.signal_covariance + identity) * resolvent.transpose());
  // u = y - w, Cov(y, w) = (I - F)^{-1}
  const Eigen::MatrixXd cov_yu = cov_y - resolvent;
  const Eigen::MatrixXd cov_u = symmetrized(cov_y - resolvent - resolvent.transpose() + identity);

  const CholeskyFactor chol = cholesky(cov_y);
  // Leading blocks of L^{-1} Cov(y, u) give the projections onto the past.
  const Eigen::MatrixXd x = chol.lower.triangularView<Eigen::Lower>().solve(cov_yu);

  FeedbackDuncan out;
  out.predictive.resize(static_cast<std::size_t>(n));
  double causal = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double pk = cov_u(k, k) - x.col(k).head(k).squaredNorm();
    if (pk < -1e-10 * (1.0 + cov_u(k, k))) {
      std::ostringstream msg;
      msg << "duncan_feedback_check: negative conditional variance " << pk << " at step " << k;
      throw NumericError(msg.str());
    }
    const double p = std::max(pk, 0.0);
    out.predictive[static_cast<std::size_t>(k)] = p;
    causal += std::log1p(p);
    out.half_predictive_error += 0.5 * p;
    out.half_filtered_error += 0.5 * p / (1.0 + p);
  }
  out.half_causal_error = 0.5 * causal;
  out.mutual_information = gaussian_mi_logdet(model);
  out.residual = out.mutual_information - out.half_causal_error;
  return out;
}

}  // namespace gchan
