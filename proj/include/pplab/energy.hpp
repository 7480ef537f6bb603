#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "pplab/fundsol.hpp"
#include "pplab/grid.hpp"
#include "pplab/kernels.hpp"
#include "pplab/operator.hpp"

namespace pplab {

enum class EnergyKind { homogeneous, inhomogeneous, operator_form, weighted };

std::string to_string(EnergyKind kind);
EnergyKind parse_energy_kind(const std::string& s);

/// Forward-difference stencil of D^alpha at spacing h (offsets 0..alpha_i in axis i).
Stencil difference_stencil(const MultiIndex& alpha, double h);

/// Convolution kernel of sum a_ab (D^a)^T D^b for the given (expanded) terms.
/// The kernel is made exactly even: k(w) and k(-w) are stored bitwise equal.
Stencil energy_kernel(const std::vector<CoefficientTerm>& terms, int n, double h);

/// Nodes within l-infinity distance `radius` (in nodes) of the origin.
Mask origin_neighbourhood(const Grid& grid, int radius);

/// Distinct unit directions x/|x| of the nonzero grid nodes, for building a
/// profile that covers every node.
std::vector<std::vector<double>> grid_directions(const Grid& grid);

/// Quadratic energy h^n <u, A u> on a grid with zero extension outside the box.
class EnergyForm {
 public:
  EnergyKind kind() const { return kind_; }
  const Grid& grid() const { return layout_.grid(); }
  const Layout& layout() const { return layout_; }
  const Stencil& kernel() const { return kernel_; }
  int half_order() const { return m_; }
  /// Weighted kind only: F at every box node, zero on excluded nodes.
  const std::vector<double>& weight() const { return weight_box_; }
  /// Nodes left out of the weighted quadrature (empty for the other kinds).
  const Mask& excluded() const { return excluded_; }

  /// out = A in on box nodes (padded storage; `out` padding untouched).
  void apply_padded(const double* in, double* out) const;
  GridFunction apply(const GridFunction& u) const;
  double energy(const GridFunction& u) const;
  double bilinear(const GridFunction& u, const GridFunction& v) const;

  /// Explicit sparse matrix on box nodes (for small grids and tests).
  Eigen::SparseMatrix<double> matrix() const;

 private:
  friend EnergyForm assemble(EnergyKind, const EllipticOperator&, const Grid&, const SphereProfile*);
  EnergyKind kind_ = EnergyKind::homogeneous;
  int m_ = 0;
  Layout layout_;
  Stencil kernel_;
  std::vector<double> weight_box_;
  std::vector<double> weight_padded_;
  mutable std::vector<double> scratch_;
  Mask excluded_;
};

/// Assembles one of the four energies. The weighted kind needs `weight` and
/// n > 2m; its quadrature skips the origin neighbourhood of l-infinity radius m.
EnergyForm assemble(EnergyKind kind, const EllipticOperator& op, const Grid& grid,
                    const SphereProfile* weight = nullptr);

/// Comparison form sum_{k=1}^m sum_{|a|=k} k!/a! sum_x |D^a u(x)|^2 |x + a h/2|^{2k-n} h^n.
class HardyForm {
 public:
  HardyForm(const Grid& grid, int m);
  const Layout& layout() const { return layout_; }
  int half_order() const { return m_; }
  /// Nodes on which admissible functions must vanish.
  const Mask& excluded() const { return excluded_; }
  void apply_padded(const double* in, double* out) const;
  double energy(const GridFunction& u) const;

 private:
  struct Term {
    MultiIndex alpha;
    double coefficient;
    Stencil forward;
    Stencil adjoint;
  };
  Layout layout_;
  int m_;
  std::vector<Term> terms_;
  Mask excluded_;
  mutable std::vector<double> d_, tmp_;
};

/// Evaluates the comparison form; u must vanish on the origin neighbourhood.
double hardy_weighted_energy(const GridFunction& u, int m);

}  // namespace pplab
