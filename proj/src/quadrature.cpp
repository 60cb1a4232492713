#include "gchan/quadrature.hpp"

#include "gchan/errors.hpp"
#include "gchan/operator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace gchan {

QuadratureRule gauss_hermite_normal(std::size_t order) {
  if (order == 0) throw DomainError("gauss_hermite_normal: order must be positive");
  const auto n = static_cast<Eigen::Index>(order);
  // Golub-Welsch start: eigenvalues of the probabilists' Jacobi matrix,
  // shifted to be positive definite for the eigensolver.
  const double shift = 2.0 * std::sqrt(static_cast<double>(n)) + 1.0;
  Eigen::MatrixXd jacobi = shift * Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    jacobi(k, k + 1) = std::sqrt(static_cast<double>(k + 1));
    jacobi(k + 1, k) = jacobi(k, k + 1);
  }
  JacobiOptions options;
  options.compute_vectors = false;
  const Spectrum start = eigendecompose(jacobi, options);

  // Newton polish on the orthonormal (physicists') recurrence, which also
  // yields the Christoffel weight 2 / p'_n(t)^2.
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  QuadratureRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (std::size_t i = 0; i < order; ++i) {
    double t = (start.values[order - 1 - i] - shift) / std::numbers::sqrt2;
    double pp = 0.0;
    for (int it = 0; it < 8; ++it) {
      double p1 = pim4;
      double p2 = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = t * std::sqrt(2.0 / static_cast<double>(j + 1)) * p2 -
             std::sqrt(static_cast<double>(j) / static_cast<double>(j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * static_cast<double>(n)) * p2;
      const double step = p1 / pp;
      t -= step;
      if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(t))) break;
    }
    rule.nodes[i] = std::numbers::sqrt2 * t;
    rule.weights[i] = 2.0 / (pp * pp) / std::sqrt(std::numbers::pi);
  }
  // Exact symmetry of the rule.
  for (std::size_t i = 0; i < order / 2; ++i) {
    const std::size_t j = order - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  return rule;
}

const QuadratureRule& cached_gauss_hermite_normal(std::size_t order) {
  static std::mutex mutex;
  static std::map<std::size_t, QuadratureRule> cache;
  const std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, gauss_hermite_normal(order)).first;
  return it->second;
}

QuadratureRule gauss_legendre(std::size_t order) {
  if (order == 0) throw DomainError("gauss_legendre: order must be positive");
  const auto n = static_cast<int>(order);
  QuadratureRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-16) break;
    }
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = order - 1 - lo;
    rule.nodes[lo] = -z;
    rule.nodes[hi] = z;
    rule.weights[lo] = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.weights[hi] = rule.weights[lo];
  }
  return rule;
}

double integrate_gauss_legendre(const std::function<double(double)>& f, double a, double b, std::size_t order,
                                std::size_t panels) {
  const QuadratureRule rule = gauss_legendre(order);
  const double width = (b - a) / static_cast<double>(panels);
  double total = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + width * static_cast<double>(p);
    const double mid = lo + 0.5 * width;
    double s = 0.0;
    for (std::size_t i = 0; i < order; ++i) s += rule.weights[i] * f(mid + 0.5 * width * rule.nodes[i]);
    total += 0.5 * width * s;
  }
  return total;
}

namespace {

struct SimpsonState {
  const std::function<double(double)>& f;
  std::size_t evaluations = 0;
  std::size_t budget;
  int max_depth;
  bool converged = true;
  double error = 0.0;
};

double simpson_recurse(SimpsonState& st, double a, double b, double fa, double fm, double fb, double whole,
                       double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = st.f(lm);
  const double frm = st.f(rm);
  st.evaluations += 2;
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol || depth >= st.max_depth || st.evaluations >= st.budget) {
    if (std::abs(delta) > 15.0 * tol) st.converged = false;
    st.error += std::abs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  return simpson_recurse(st, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
         simpson_recurse(st, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

}  // namespace

SimpsonResult adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tolerance,
                               std::size_t max_evaluations, int max_depth) {
  SimpsonState st{f, 0, max_evaluations, max_depth};
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  st.evaluations = 3;
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  SimpsonResult out;
  out.value = simpson_recurse(st, a, b, fa, fm, fb, whole, tolerance, 0);
  out.error_estimate = st.error;
  out.evaluations = st.evaluations;
  out.converged = st.converged;
  return out;
}

}  // namespace gchan
