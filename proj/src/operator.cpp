#include "gchan/operator.hpp"

#include "gchan/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

namespace gchan {

namespace {

struct Rotation {
  Eigen::Index p;
  Eigen::Index q;
  double c;
  double s;
  double t;
};

// Pairs of one round of the circle-method tournament on m (even) players.
void round_pairs(Eigen::Index m, Eigen::Index round, std::vector<std::pair<Eigen::Index, Eigen::Index>>& out) {
  out.clear();
  const Eigen::Index half = m / 2;
  auto player = [&](Eigen::Index slot) -> Eigen::Index {
    if (slot == 0) return 0;
    return 1 + (slot - 1 + round) % (m - 1);
  };
  for (Eigen::Index i = 0; i < half; ++i) {
    Eigen::Index a = player(i);
    Eigen::Index b = player(m - 1 - i);
    if (a > b) std::swap(a, b);
    out.emplace_back(a, b);
  }
}

double off_diagonal_norm(const Eigen::MatrixXd& a) {
  double sum = 0.0;
  const Eigen::Index n = a.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i != j) sum += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(sum);
}

}  // namespace

DiscretizedOperator discretize(const KernelSpec& spec, const TimeGrid& grid) {
  if (std::abs(grid.horizon() - spec.horizon()) > 1e-12 * spec.horizon()) {
    throw DomainError("discretize: grid horizon differs from kernel horizon");
  }
  DiscretizedOperator op;
  op.grid = grid;
  op.channels = spec.channels();
  op.matrix = kernel_matrix(spec, grid);
  const Eigen::Index N = op.matrix.rows();
  Eigen::VectorXd root_w(N);
  for (Eigen::Index k = 0; k < N; ++k) root_w(k) = std::sqrt(op.weight(k));
  op.matrix = root_w.asDiagonal() * op.matrix * root_w.asDiagonal();
  return op;
}

Spectrum Spectrum::from_values(std::vector<double> values) {
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("spectrum values must be nonnegative and finite");
  }
  std::sort(values.begin(), values.end(), std::greater<>());
  Spectrum s;
  s.values = std::move(values);
  s.raw_min = s.values.empty() ? 0.0 : s.values.back();
  return s;
}

Spectrum eigendecompose(const DiscretizedOperator& op, const JacobiOptions& options) {
  return eigendecompose(op.matrix, options);
}

Spectrum eigendecompose(const Eigen::MatrixXd& symmetric, const JacobiOptions& options) {
  const Eigen::Index n = symmetric.rows();
  if (symmetric.cols() != n) throw DomainError("eigendecompose: matrix is not square");

  Eigen::MatrixXd a = 0.5 * (symmetric + symmetric.transpose());
  Eigen::MatrixXd v;
  if (options.compute_vectors) v = Eigen::MatrixXd::Identity(n, n);

  const double norm = a.norm();
  const double target = options.tolerance * norm;
  // Entries below this are left alone; their total contributes at most
  // 1e-2 * target to the off-diagonal norm.
  const double skip = 1e-2 * target / std::max<double>(1.0, static_cast<double>(n));

  const Eigen::Index m = n + (n % 2);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  std::vector<Rotation> rotations;
  pairs.reserve(static_cast<std::size_t>(m / 2));
  rotations.reserve(static_cast<std::size_t>(m / 2));

  int sweep = 0;
  double off = off_diagonal_norm(a);
  double* data = a.data();
  while (off > target && n > 1) {
    if (sweep == options.max_sweeps) {
      std::ostringstream msg;
      msg << "Jacobi eigensolver did not converge after " << sweep << " sweeps (off-diagonal norm " << off
          << ", target " << target << ", n=" << n << ")";
      throw NumericError(msg.str());
    }
    for (Eigen::Index round = 0; round < m - 1; ++round) {
      round_pairs(m, round, pairs);
      rotations.clear();
      for (auto [p, q] : pairs) {
        if (q >= n) continue;
        const double apq = a(p, q);
        if (std::abs(apq) <= skip) continue;
        const double theta = 0.5 * (a(q, q) - a(p, p)) / apq;
        double t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        rotations.push_back({p, q, c, t * c, t});
      }
      if (rotations.empty()) continue;

      // A <- A J (columns p, q)
      for (const auto& r : rotations) {
        double* cp = data + r.p * n;
        double* cq = data + r.q * n;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double x = cp[k];
          const double y = cq[k];
          cp[k] = r.c * x - r.s * y;
          cq[k] = r.s * x + r.c * y;
        }
      }
      // A <- J^T A (rows p, q, walked column by column)
      for (Eigen::Index k = 0; k < n; ++k) {
        double* col = data + k * n;
        for (const auto& r : rotations) {
          const double x = col[r.p];
          const double y = col[r.q];
          col[r.p] = r.c * x - r.s * y;
          col[r.q] = r.s * x + r.c * y;
        }
      }
      for (const auto& r : rotations) {
        a(r.p, r.q) = 0.0;
        a(r.q, r.p) = 0.0;
      }
      if (options.compute_vectors) {
        double* vd = v.data();
        for (const auto& r : rotations) {
          double* cp = vd + r.p * n;
          double* cq = vd + r.q * n;
          for (Eigen::Index k = 0; k < n; ++k) {
            const double x = cp[k];
            const double y = cq[k];
            cp[k] = r.c * x - r.s * y;
            cq[k] = r.s * x + r.c * y;
          }
        }
      }
    }
    ++sweep;
    off = off_diagonal_norm(a);
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });

  Spectrum out;
  out.sweeps = sweep;
  out.values.resize(static_cast<std::size_t>(n));
  out.raw_min = n > 0 ? a(order.back(), order.back()) : 0.0;
  const double floor = n > 0 ? kClampThreshold * std::max(0.0, a(order.front(), order.front())) : 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = order[static_cast<std::size_t>(i)];
    const double value = a(k, k);
    out.values[static_cast<std::size_t>(i)] = value <= floor ? 0.0 : value;
  }
  if (options.compute_vectors) {
    out.vectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

double schatten_sum(const Spectrum& spectrum, int k) {
  if (k < 1) throw DomainError("schatten_sum: k must be at least 1");
  double s = 0.0;
  for (double l : spectrum.values) s += std::pow(l, k);
  return s;
}

double logdet_perturbation(const Spectrum& spectrum, double gamma) {
  if (!(gamma >= 0.0)) throw DomainError("logdet_perturbation: gamma must be nonnegative");
  double s = 0.0;
  for (double l : spectrum.values) s += std::log1p(gamma * l);
  return s;
}

double CholeskyFactor::log_determinant() const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < lower.rows(); ++i) s += std::log(lower(i, i));
  return 2.0 * s;
}

CholeskyFactor cholesky(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  if (m.cols() != n) throw DomainError("cholesky: matrix is not square");
  const double trace = m.trace();
  const double max_jitter = 1e-12 * std::abs(trace);

  auto attempt = [&](double jitter, Eigen::MatrixXd& l) -> bool {
    l.setZero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      double d = m(j, j) + jitter - l.row(j).head(j).squaredNorm();
      if (!(d > 0.0) || !std::isfinite(d)) return false;
      const double ljj = std::sqrt(d);
      l(j, j) = ljj;
      for (Eigen::Index i = j + 1; i < n; ++i) {
        l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
      }
    }
    return true;
  };

  CholeskyFactor f;
  if (attempt(0.0, f.lower)) return f;
  for (double jitter = 1e-16 * std::abs(trace); jitter <= max_jitter * (1.0 + 1e-9) && jitter > 0.0;
       jitter *= 10.0) {
    if (attempt(jitter, f.lower)) {
      f.jitter = jitter;
      return f;
    }
  }
  std::ostringstream msg;
  msg << "cholesky: pivot failure after maximum jitter " << max_jitter << " (n=" << n << ")";
  throw NumericError(msg.str());
}

double logdet_identity_plus(const Eigen::MatrixXd& m, double gamma) {
  if (!(gamma >= 0.0)) throw DomainError("logdet_identity_plus: gamma must be nonnegative");
  const Eigen::MatrixXd shifted = Eigen::MatrixXd::Identity(m.rows(), m.cols()) + gamma * m;
  return cholesky(shifted).log_determinant();
}

}  // namespace gchan
