#include "gchan/kernels.hpp"

#include "gchan/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace gchan {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw DomainError(std::string("kernel parameter '") + name + "' must be positive and finite");
  }
}

void validate(const family::FiniteRank& f) {
  const auto rank = static_cast<Eigen::Index>(f.eigenvalues.size());
  if (f.basis.cols() != rank) {
    throw DomainError("finite-rank kernel: basis has " + std::to_string(f.basis.cols()) +
                      " columns for " + std::to_string(rank) + " eigenvalues");
  }
  if (f.basis.rows() != static_cast<Eigen::Index>(f.grid.size())) {
    throw DomainError("finite-rank kernel: basis rows do not match grid size");
  }
  for (double l : f.eigenvalues) {
    if (!(l >= 0.0) || !std::isfinite(l)) {
      throw DomainError("finite-rank kernel: eigenvalues must be nonnegative");
    }
  }
  Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(f.grid.weights().data(),
                                                        static_cast<Eigen::Index>(f.grid.size()));
  const Eigen::MatrixXd gram = f.basis.transpose() * w.asDiagonal() * f.basis;
  const double dev = (gram - Eigen::MatrixXd::Identity(rank, rank)).cwiseAbs().maxCoeff();
  if (rank > 0 && dev > 1e-10) {
    throw DomainError("finite-rank kernel: basis is not orthonormal on the grid (deviation " +
                      std::to_string(dev) + ")");
  }
}

void validate(const family::MatrixStationary& f) {
  if (f.channels.empty()) throw DomainError("matrix-stationary kernel needs at least one channel");
  for (const auto& channel : f.channels) {
    if (channel.empty()) throw DomainError("matrix-stationary kernel: empty channel");
    for (const auto& term : channel) {
      require_positive(term.variance, "variance");
      require_positive(term.rate, "rate");
    }
  }
}

double exponential_sum(const std::vector<ExponentialTerm>& terms, double tau) {
  double r = 0.0;
  for (const auto& term : terms) r += term.variance * std::exp(-term.rate * std::abs(tau));
  return r;
}

}  // namespace

TimeGrid TimeGrid::midpoint(double horizon, std::size_t n) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("grid horizon must be positive");
  if (n == 0) throw DomainError("grid needs at least one node");
  TimeGrid g;
  g.horizon_ = horizon;
  g.nodes_.resize(n);
  g.weights_.assign(n, horizon / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    g.nodes_[i] = (static_cast<double>(i) + 0.5) * horizon / static_cast<double>(n);
  }
  return g;
}

std::size_t TimeGrid::cell_of(double t) const {
  const auto n = nodes_.size();
  const auto idx = static_cast<std::ptrdiff_t>(std::floor(t / horizon_ * static_cast<double>(n)));
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(n) - 1));
}

std::size_t TimeGrid::prefix_count(double t) const {
  return static_cast<std::size_t>(std::upper_bound(nodes_.begin(), nodes_.end(), t) - nodes_.begin());
}

KernelSpec::KernelSpec(KernelFamily family, double horizon) : family_(std::move(family)), horizon_(horizon) {
  require_positive(horizon_, "horizon");
  std::visit(overloaded{
                 [](const family::Exponential& f) {
                   require_positive(f.variance, "variance");
                   require_positive(f.rate, "rate");
                 },
                 [](const family::BrownianMotion&) {},
                 [](const family::BrownianBridge&) {},
                 [](const family::SquaredExponential& f) {
                   require_positive(f.variance, "variance");
                   require_positive(f.length_scale, "length_scale");
                 },
                 [this](const family::FiniteRank& f) {
                   validate(f);
                   if (std::abs(f.grid.horizon() - horizon_) > 1e-12 * horizon_) {
                     throw DomainError("finite-rank kernel: grid horizon differs from kernel horizon");
                   }
                 },
                 [](const family::MatrixStationary& f) { validate(f); },
             },
             family_);
}

int KernelSpec::channels() const {
  if (const auto* m = std::get_if<family::MatrixStationary>(&family_)) {
    return static_cast<int>(m->channels.size());
  }
  return 1;
}

bool KernelSpec::stationary() const {
  return std::holds_alternative<family::Exponential>(family_) ||
         std::holds_alternative<family::SquaredExponential>(family_) ||
         std::holds_alternative<family::MatrixStationary>(family_);
}

double KernelSpec::entry(double s, double t, int a, int b) const {
  return std::visit(
      overloaded{
          [&](const family::Exponential& f) { return f.variance * std::exp(-f.rate * std::abs(t - s)); },
          [&](const family::BrownianMotion&) { return std::min(s, t); },
          [&](const family::BrownianBridge&) { return std::min(s, t) - s * t / horizon_; },
          [&](const family::SquaredExponential& f) {
            const double u = (t - s) / f.length_scale;
            return f.variance * std::exp(-0.5 * u * u);
          },
          [&](const family::FiniteRank& f) {
            const auto i = static_cast<Eigen::Index>(f.grid.cell_of(s));
            const auto j = static_cast<Eigen::Index>(f.grid.cell_of(t));
            double r = 0.0;
            for (std::size_t k = 0; k < f.eigenvalues.size(); ++k) {
              const auto kk = static_cast<Eigen::Index>(k);
              r += f.eigenvalues[k] * f.basis(i, kk) * f.basis(j, kk);
            }
            return r;
          },
          [&](const family::MatrixStationary& f) {
            return a == b ? exponential_sum(f.channels[static_cast<std::size_t>(a)], t - s) : 0.0;
          },
      },
      family_);
}

Eigen::MatrixXd KernelSpec::eval(double s, double t) const {
  if (!(s >= 0.0 && s <= horizon_ && t >= 0.0 && t <= horizon_)) {
    throw DomainError("kernel evaluated outside [0, T]: s=" + std::to_string(s) + ", t=" + std::to_string(t));
  }
  const int d = channels();
  Eigen::MatrixXd r(d, d);
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) r(a, b) = entry(s, t, a, b);
  }
  return r;
}

std::optional<std::vector<double>> analytic_spectrum(const KernelSpec& spec, std::size_t count) {
  if (count == 0) throw DomainError("analytic_spectrum: count must be at least 1");
  if (std::holds_alternative<family::BrownianMotion>(spec.family())) {
    std::vector<double> values(count);
    const double T = spec.horizon();
    for (std::size_t i = 0; i < count; ++i) {
      const double f = (static_cast<double>(i) + 0.5) * std::numbers::pi;
      values[i] = T * T / (f * f);
    }
    return values;
  }
  if (const auto* f = std::get_if<family::FiniteRank>(&spec.family())) {
    std::vector<double> values = f->eigenvalues;
    std::sort(values.begin(), values.end(), std::greater<>());
    values.resize(std::min(count, values.size()));
    return values;
  }
  return std::nullopt;
}

Eigen::MatrixXd cosine_basis(const TimeGrid& grid, std::size_t count) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (count == 0 || static_cast<Eigen::Index>(count) > n) {
    throw DomainError("cosine_basis: count must lie in [1, grid size]");
  }
  const double T = grid.horizon();
  Eigen::MatrixXd basis(n, static_cast<Eigen::Index>(count));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = grid.node(static_cast<std::size_t>(i));
    basis(i, 0) = std::sqrt(1.0 / T);
    for (Eigen::Index k = 1; k < static_cast<Eigen::Index>(count); ++k) {
      basis(i, k) = std::sqrt(2.0 / T) * std::cos(static_cast<double>(k) * std::numbers::pi * t / T);
    }
  }
  return basis;
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const TimeGrid& grid) {
  const int d = spec.channels();
  const auto n = static_cast<Eigen::Index>(grid.size());
  const Eigen::Index N = n * d;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(N, N);
  const bool diagonal_channels = std::holds_alternative<family::MatrixStationary>(spec.family());
  for (Eigen::Index j = 0; j < n; ++j) {
    const double tj = grid.node(static_cast<std::size_t>(j));
    for (Eigen::Index i = j; i < n; ++i) {
      const double ti = grid.node(static_cast<std::size_t>(i));
      for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
          if (diagonal_channels && a != b) continue;
          const double r = spec.entry(ti, tj, a, b);
          K(i * d + a, j * d + b) = r;
          K(j * d + b, i * d + a) = r;
        }
      }
    }
  }
  return K;
}

}  // namespace gchan
