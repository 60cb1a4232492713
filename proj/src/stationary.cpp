#include "gchan/stationary.hpp"

#include "gchan/errors.hpp"
#include "gchan/infocore.hpp"
#include "gchan/operator.hpp"
#include "gchan/parallel.hpp"
#include "gchan/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace gchan {

SpectralDensity::SpectralDensity(std::vector<std::vector<ExponentialTerm>> channels)
    : channels_(std::move(channels)) {
  if (channels_.empty()) throw DomainError("spectral density needs at least one channel");
  for (const auto& ch : channels_) {
    if (ch.empty()) throw DomainError("spectral density: empty channel");
    for (const auto& t : ch) {
      if (!(t.variance >= 0.0) || !(t.rate > 0.0) || !std::isfinite(t.variance) || !std::isfinite(t.rate)) {
        throw DomainError("spectral density: variance must be nonnegative and rate positive");
      }
    }
  }
}

SpectralDensity SpectralDensity::lorentzian(double variance, double rate) {
  return SpectralDensity({{ExponentialTerm{variance, rate}}});
}

SpectralDensity SpectralDensity::from_kernel(const KernelSpec& spec) {
  if (const auto* e = std::get_if<family::Exponential>(&spec.family())) return lorentzian(e->variance, e->rate);
  if (const auto* m = std::get_if<family::MatrixStationary>(&spec.family())) return SpectralDensity(m->channels);
  throw DomainError("spectral density is only available for exponential-type stationary kernels");
}

double SpectralDensity::channel(int c, double xi) const {
  double s = 0.0;
  for (const auto& t : channels_[static_cast<std::size_t>(c)]) {
    s += 2.0 * t.rate * t.variance / (t.rate * t.rate + xi * xi);
  }
  return s;
}

Eigen::MatrixXd SpectralDensity::eval(double xi) const {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(dimension(), dimension());
  for (int c = 0; c < dimension(); ++c) s(c, c) = channel(c, xi);
  return s;
}

double SpectralDensity::log_det(double xi, double gamma) const {
  double s = 0.0;
  for (int c = 0; c < dimension(); ++c) s += std::log1p(gamma * channel(c, xi));
  return s;
}

double SpectralDensity::total_power() const {
  double s = 0.0;
  for (const auto& ch : channels_) {
    for (const auto& t : ch) s += t.variance;
  }
  return s;
}

double SpectralDensity::trace_tail(double cutoff) const {
  // int_X^inf 2 a v / (a^2 + x^2) dx = 2 v atan(a / X)
  double s = 0.0;
  for (const auto& ch : channels_) {
    for (const auto& t : ch) {
      s += cutoff > 0.0 ? 2.0 * t.variance * std::atan(t.rate / cutoff) : t.variance * std::numbers::pi;
    }
  }
  return s;
}

double SpectralDensity::peak() const {
  double m = 0.0;
  for (int c = 0; c < dimension(); ++c) m = std::max(m, channel(c, 0.0));
  return m;
}

KernelSpec SpectralDensity::kernel(double horizon) const {
  if (channels_.size() == 1 && channels_.front().size() == 1) {
    const auto& t = channels_.front().front();
    return KernelSpec(family::Exponential{t.variance, t.rate}, horizon);
  }
  return KernelSpec(family::MatrixStationary{channels_}, horizon);
}

YjIntegral yj_integral_detail(const SpectralDensity& density, double gamma, double tolerance) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("yj_integral: gamma must be positive");
  if (!(tolerance > 0.0)) throw DomainError("yj_integral: tolerance must be positive");

  // Tail: 0 <= gamma tr S - log det(I + gamma S) <= (gamma tr S)^2 / 2 and
  // tr S <= C / xi^2, so the remainder past X is at most gamma C^2 / (6 pi X^3)
  // after the (pi gamma)^{-1} normalization.
  double c = 0.0;
  double max_rate = 0.0;
  for (const auto& ch : density.channels()) {
    for (const auto& t : ch) {
      c += 2.0 * t.rate * t.variance;
      max_rate = std::max(max_rate, t.rate);
    }
  }
  const double remainder_budget = 0.05 * tolerance;
  double cutoff = std::cbrt(gamma * c * c / (6.0 * std::numbers::pi * remainder_budget));
  cutoff = std::max(cutoff, 20.0 * max_rate);
  const double remainder_bound = gamma * c * c / (6.0 * std::numbers::pi * cutoff * cutoff * cutoff);

  // Simpson's own estimate is heuristic; leave a factor of ten in hand.
  const double simpson_tol = 0.1 * remainder_budget * std::numbers::pi * gamma;
  const auto integrand = [&](double xi) { return density.log_det(xi, gamma); };
  const SimpsonResult body = adaptive_simpson(integrand, 0.0, cutoff, simpson_tol, 5'000'000, 50);

  YjIntegral out;
  out.cutoff = cutoff;
  out.evaluations = body.evaluations;
  out.error_bound = remainder_bound + body.error_estimate / (std::numbers::pi * gamma);
  if (!body.converged) {
    std::ostringstream msg;
    msg << "yj_integral: quadrature budget exhausted, achieved error bound " << out.error_bound << " (requested "
        << tolerance << ")";
    throw NumericError(msg.str());
  }
  out.value = (body.value + gamma * density.trace_tail(cutoff)) / (std::numbers::pi * gamma);
  return out;
}

double yj_integral(const SpectralDensity& density, double gamma, double tolerance) {
  return yj_integral_detail(density, gamma, tolerance).value;
}

double ou_yj_closed_form(double rate, double variance, double gamma) {
  if (!(rate > 0.0) || !(variance >= 0.0) || !(gamma >= 0.0)) {
    throw DomainError("ou_yj_closed_form: rate must be positive, variance and gamma nonnegative");
  }
  return 2.0 * rate * variance / (std::sqrt(rate * rate + 2.0 * gamma * rate * variance) + rate);
}

std::vector<double> toeplitz_spectrum(const KernelSpec& spec, double horizon, std::size_t n,
                                      std::size_t max_dimension) {
  const SpectralDensity density = SpectralDensity::from_kernel(spec);
  const auto d = static_cast<std::size_t>(density.dimension());
  if (n * d > max_dimension) {
    std::ostringstream msg;
    msg << "toeplitz_spectrum: dimension " << n * d << " exceeds the eigensolver budget " << max_dimension
        << "; use n <= " << max_dimension / d;
    throw ConfigError(msg.str());
  }
  const KernelSpec kernel = density.kernel(horizon);
  JacobiOptions options;
  options.compute_vectors = false;
  return eigendecompose(discretize(kernel, TimeGrid::midpoint(horizon, n)), options).values;
}

double toeplitz_average(const std::vector<double>& eigenvalues, double gamma, double horizon) {
  if (!(gamma > 0.0) || !(horizon > 0.0)) throw DomainError("toeplitz_average: gamma and T must be positive");
  return causal_mmse(Spectrum::from_values(eigenvalues), gamma) / horizon;
}

ToeplitzStudy convergence_study(const SpectralDensity& density, double gamma, std::vector<double> horizons,
                                double step, unsigned threads, std::size_t max_dimension) {
  if (horizons.empty()) throw DomainError("convergence_study: no horizons");
  if (!(step > 0.0)) throw DomainError("convergence_study: step must be positive");
  std::sort(horizons.begin(), horizons.end());
  if (std::adjacent_find(horizons.begin(), horizons.end()) != horizons.end()) {
    throw DomainError("convergence_study: horizons must be distinct");
  }
  ToeplitzStudy study;
  study.gamma = gamma;
  study.step = step;
  study.target = yj_integral(density, gamma);
  const KernelSpec reference = density.kernel(1.0);
  const auto d = static_cast<std::size_t>(density.dimension());

  study.rows.resize(horizons.size());
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    auto& row = study.rows[i];
    row.horizon = horizons[i];
    row.n = static_cast<std::size_t>(std::llround(horizons[i] / step));
    if (row.n == 0) throw DomainError("convergence_study: horizon shorter than step");
    if (row.n * d > max_dimension) {
      std::ostringstream msg;
      msg << "convergence_study: T=" << row.horizon << " needs dimension " << row.n * d
          << " above the eigensolver budget " << max_dimension << "; use step >= "
          << row.horizon * static_cast<double>(d) / static_cast<double>(max_dimension);
      throw ConfigError(msg.str());
    }
  }
  parallel_for(horizons.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto& row = study.rows[i];
      const auto eigenvalues = toeplitz_spectrum(reference, row.horizon, row.n, max_dimension);
      row.average = toeplitz_average(eigenvalues, gamma, row.horizon);
      row.target = study.target;
      row.gap = std::abs(row.average - row.target);
    }
  });

  for (std::size_t i = 1; i < study.rows.size(); ++i) {
    if (!(study.rows[i].gap < study.rows[i - 1].gap)) study.monotone = false;
  }
  // Least squares on log gap = log c - beta log T.
  if (study.rows.size() >= 2) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t m = 0;
    for (const auto& r : study.rows) {
      if (!(r.gap > 0.0)) continue;
      const double x = std::log(r.horizon);
      const double y = std::log(r.gap);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++m;
    }
    if (m >= 2) {
      const double mm = static_cast<double>(m);
      const double slope = (mm * sxy - sx * sy) / (mm * sxx - sx * sx);
      study.fitted_rate = -slope;
      study.fitted_constant = std::exp((sy - slope * sx) / mm);
    }
  }
  return study;
}

}  // namespace gchan
