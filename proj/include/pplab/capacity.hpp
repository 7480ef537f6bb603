#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pplab/energy.hpp"
#include "pplab/grid.hpp"
#include "pplab/solvers.hpp"

namespace pplab {

class ComplementShape;

enum class CapacityKind { homogeneous, inhomogeneous };
std::string to_string(CapacityKind kind);

struct CapacityOptions {
  CGOptions cg{};
  /// Homogeneous kind, n > 2m: also solve in the half-extent box and
  /// extrapolate the box truncation error, which decays like R^{2m-n}.
  bool extrapolate_box = true;
  /// Also solve at spacing 2h to estimate the discretization error.
  bool estimate_refinement = true;
};

struct CapacityValue {
  double value = 0.0;   ///< reported capacity (box-extrapolated when enabled)
  double raw = 0.0;     ///< condenser capacity in the declared box
  double half_box = 0.0;
  double coarse = 0.0;  ///< same set at spacing 2h (0 when not computed)
  double refinement_estimate = 0.0;  ///< abs(value - value at spacing 2h)
  double box_estimate = 0.0;         ///< abs(value - raw)
  CapacityKind kind = CapacityKind::homogeneous;
  Grid grid;
  int iterations = 0;
  bool converged = true;
  bool extrapolated = false;

  nlohmann::json to_json() const;
};

struct ConstrainedMinimum {
  double energy = 0.0;
  GridFunction u;
  CGResult cg;
};

/// Minimizes the form over grid functions equal to 1 on `K` and zero outside the box.
ConstrainedMinimum minimize_with_unit_constraint(const EnergyForm& form, const Mask& K, const CGOptions& cg = {});

/// m-harmonic capacity. Throws UnsupportedRegime for n <= 2m.
CapacityValue cap_m(const Mask& K, int m, const CapacityOptions& opts = {});
/// Inhomogeneous variational capacity (Bessel-capacity surrogate), any n >= 1.
CapacityValue bessel_capacity(const Mask& K, int m, const CapacityOptions& opts = {});

/// Condenser capacity in the declared box with no extrapolation (any n, m).
double condenser_capacity(const Mask& K, int m, CapacityKind kind, const CGOptions& cg = {});

struct AnnulusTerm {
  int j = 0;
  double rho = 0.0;
  double spacing = 0.0;
  double capacity = 0.0;  ///< per-scale capacity (Bessel surrogate when n = 2m)
  double relative = 0.0;  ///< condenser capacity in the box of radius box_factor*rho
  double weight = 0.0;    ///< rho^{2m-n}
  double term = 0.0;      ///< capacity * weight
  double partial_sum = 0.0;
  std::size_t nodes = 0;  ///< nodes of the complement slice
  bool truncated = false;
};

struct SeriesOptions {
  int j_min = 1;
  int j_max = 10;
  int nodes_per_rho = 8;
  double box_factor = 2.0;
  CGOptions cg{};
};

struct AnnulusCapacitySeries {
  int n = 0;
  int m = 0;
  std::string shape;
  SeriesOptions options;
  std::vector<AnnulusTerm> terms;
  int distinct_solves = 0;
  double log_coefficient = 0.0;  ///< n = 2m only: the constant in the series-resistance correction

  std::size_t usable() const;
  /// Multiplies capacities and terms by lambda (comparability rescaling).
  AnnulusCapacitySeries scaled(double lambda) const;
  std::string csv() const;
  nlohmann::json to_json() const;
};

/// Capacities of the closed complement slices B_rho_j minus Omega, rho_j = 2^{-j},
/// each on its own grid with spacing rho_j / nodes_per_rho and box radius
/// box_factor * rho_j. Slices that are identical in node coordinates are solved once.
AnnulusCapacitySeries annulus_series(const ComplementShape& shape, int m, int n, const SeriesOptions& opts = {});

/// (2 pi)^{-n} int_{S^{n-1}} 1/P: the coefficient of -log|x| in the
/// fundamental solution when n = 2m.
double log_coefficient(const EllipticOperator& op, int samples = 4096);

}  // namespace pplab
