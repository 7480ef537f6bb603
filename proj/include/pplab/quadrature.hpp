#pragma once

#include <functional>
#include <vector>

namespace pplab::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1].
Rule gauss_legendre(int n);

struct AdaptiveResult {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Adaptive Gauss-Kronrod (7/15) on [a, b] with bisection of the interval
/// carrying the largest error estimate.
AdaptiveResult adaptive_gk15(const std::function<double(double)>& f, double a, double b,
                             double rel_tol = 1e-10, double abs_tol = 1e-300, int max_intervals = 2000);

}  // namespace pplab::quad
