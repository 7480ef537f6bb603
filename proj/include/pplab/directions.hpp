#pragma once

#include <vector>

namespace pplab {

/// Deterministic low-discrepancy unit vectors in R^n: a Kronecker sequence in
/// [0,1)^n pushed through the inverse normal CDF and normalized. When
/// `include_axes` is set the 2n signed coordinate axes come first and count
/// towards `count` (count is raised to 2n if smaller).
std::vector<std::vector<double>> unit_directions(int n, int count, bool include_axes = true);

/// Quadrature nodes for the unit sphere S^{d-1} in R^d with equal weights.
/// d == 2 uses equispaced angles; d >= 3 uses antipodal pairs of the
/// low-discrepancy set (count rounded up to even).
std::vector<std::vector<double>> sphere_nodes(int d, int count);

/// Surface area of S^{d-1}.
double sphere_area(int d);

}  // namespace pplab
