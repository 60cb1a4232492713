#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace gchan {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// E f(Z), Z ~ N(0, 1) ~= sum_i w_i f(x_i), nodes ascending. Golub-Welsch
// eigenvalues polished by Newton steps on the normalized Hermite recurrence.
QuadratureRule gauss_hermite_normal(std::size_t order);

// Same rule, computed once per order and shared (thread safe).
const QuadratureRule& cached_gauss_hermite_normal(std::size_t order);

// Nodes and weights on [-1, 1].
QuadratureRule gauss_legendre(std::size_t order);

// Integral of f over [a, b] with an order-point Gauss-Legendre rule per panel.
double integrate_gauss_legendre(const std::function<double(double)>& f, double a, double b, std::size_t order,
                                std::size_t panels = 1);

struct SimpsonResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t evaluations = 0;
  bool converged = true;
};

// Adaptive Simpson with Richardson correction; each accepted panel satisfies
// |S2 - S1| <= 15 tol_panel, tolerance halving on subdivision.
SimpsonResult adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tolerance,
                               std::size_t max_evaluations = 2'000'000, int max_depth = 60);

}  // namespace gchan
