#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace pplab {

/// y = A x on padded storage; entries of y outside the free set are ignored.
using LinearMap = std::function<void(const double* x, double* y)>;

struct CGOptions {
  double rel_tol = 1e-8;
  int max_iter = 20000;
};

struct CGResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Conjugate gradient for P A P x = P b where P zeroes every entry with
/// free[i] == 0. `x` holds the initial guess and receives the solution;
/// its non-free entries are left untouched.
CGResult conjugate_gradient(const LinearMap& a, std::span<const std::uint8_t> free, std::span<const double> b,
                            std::span<double> x, const CGOptions& opts = {});

struct EigenOptions {
  int max_iter = 400;
  double rel_tol = 1e-7;
  std::uint64_t seed = 12345;
};

struct EigenResult {
  double value = 0.0;
  std::vector<double> vector;  ///< B-normalized, padded storage
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Smallest eigenvalue of A x = lambda B x restricted to the free set, by
/// LOBPCG with block size one. `precond` (optional) approximates B^{-1}.
EigenResult lobpcg_smallest(const LinearMap& a, const LinearMap& b, const LinearMap& precond,
                            std::span<const std::uint8_t> free, std::size_t size, const EigenOptions& opts = {});

}  // namespace pplab
