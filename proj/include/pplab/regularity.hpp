#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pplab/capacity.hpp"
#include "pplab/domains.hpp"
#include "pplab/energy.hpp"
#include "pplab/grid.hpp"
#include "pplab/operator.hpp"

namespace pplab {

enum class Classification { regular, irregular, inconclusive };
std::string to_string(Classification c);

/// Growth-fit thresholds. Terms are normalized by the largest usable term.
struct WienerThresholds {
  double slope_min = 0.5;   ///< n > 2m: divergent iff partial-sum slope per level >= slope_min
  double flat_ratio = 0.95; ///< ... and the fitted term ratio is at least this
  double tail_ratio = 0.9;  ///< convergent iff fitted term ratio < tail_ratio
  double power_max = 1.05;  ///< n = 2m: divergent iff terms decay no faster than j^{-power_max}
  double power_min = 2.0;   ///< n = 2m: convergent needs a power fit steeper than this as well
  int min_scales = 6;
};

struct WienerVerdict {
  Classification classification = Classification::inconclusive;
  std::string regime;  ///< "n>2m" or "n=2m"
  std::vector<int> levels;
  std::vector<double> terms;
  std::vector<double> partial_sums;
  double slope = 0.0;       ///< least-squares slope of normalized partial sums per level (tail half)
  double term_ratio = 0.0;  ///< fitted geometric ratio of the tail terms
  double power = 0.0;       ///< fitted exponent p in term ~ j^{-p}
  double tail_estimate = 0.0;
  int usable = 0;
  int truncated = 0;
  std::string reason;
  nlohmann::json to_json() const;
};

WienerVerdict wiener_classify(const AnnulusCapacitySeries& series, const WienerThresholds& t = {});

struct CuspVerdict {
  Classification classification = Classification::inconclusive;
  std::string criterion;  ///< "log" (n = 2m+1) or "power" (n >= 2m+2)
  std::string method;     ///< "closed_form" or "quadrature"
  double integral = 0.0;  ///< +inf when divergent
  std::vector<double> eps;
  std::vector<double> partial;  ///< integral over [eps_k, top]
  double term_ratio = 0.0;
  double power = 0.0;
  nlohmann::json to_json() const;
};

/// n = 2m+1: int_0^{1/2} |log f|^{-1} tau^{-1}; n >= 2m+2: int_0^1 f tau^{2m-n}.
/// Power and exponential profiles use closed forms; tabulated ones use quadrature.
CuspVerdict cusp_criterion(const CuspProfile& f, int m, int n);
/// Quadrature branch for any profile: integrals over [eps_k, top] on a dyadic eps ladder.
CuspVerdict cusp_criterion_quadrature(const CuspProfile& f, int m, int n, const WienerThresholds& t = {});

struct DirichletSolution {
  GridFunction u;
  CGResult cg;
};

/// Solves the operator_form Euler-Lagrange system on the nodes of Omega with
/// u = 0 on every other node. f must vanish within l-infinity distance m of the complement.
DirichletSolution dirichlet_solve(const EllipticOperator& op, const Mask& omega, const GridFunction& f,
                                  const CGOptions& cg = {});

/// Nodes of the ball of radius r (in length units) that are not in the closed complement.
Mask domain_mask(const Grid& grid, const ComplementShape& complement, double radius);

enum class Trend { vanishing, non_vanishing, inconclusive };
std::string to_string(Trend t);

struct ProbeOptions {
  std::vector<double> spacings{1.0 / 8, 1.0 / 16, 1.0 / 32};
  std::vector<double> radii{0.5, 0.25, 0.125, 0.0625, 0.03125};
  double domain_radius = 1.0;
  double vanish_ratio = 0.9;
  double stable_change = 0.1;
  double floor = 1e-3;
  CGOptions cg{};
};

struct RegularityProbe {
  std::vector<double> spacings;
  std::vector<double> radii;
  std::vector<std::vector<double>> sup;  ///< [refinement][radius], NaN when unresolved
  std::vector<double> finest;            ///< sup at the smallest resolved radius per refinement
  std::vector<double> finest_radius;
  std::vector<double> u_max;
  Trend trend = Trend::inconclusive;
  std::string wiener_label;
  nlohmann::json to_json() const;
  std::string csv() const;
};

using SourceFunction = std::function<double(std::span<const double>)>;

/// Radial bump (1 - (|x| - r0)^2 / w^2)^3 on the shell |x| ~ r0. Its solution is flat near O
/// when the complement is empty, so any decay toward O is caused by the complement.
SourceFunction shell_source(double r0 = 0.5, double width = 0.15);

/// f is zeroed within l-infinity distance m of the complement before solving.
/// sup over B_rho of |u| on a refinement ladder; radius rho counts at spacing h iff rho >= 2h.
RegularityProbe regularity_probe(const EllipticOperator& op, const ComplementShape& complement, const SourceFunction& f,
                                 const ProbeOptions& opts = {});

struct DecayOptions {
  double R = 0.25;                     ///< dyadic
  std::vector<double> radii{0.125, 0.0625, 0.03125};
  double domain_radius = 1.0;
  SeriesOptions series{};
  CGOptions cg{};
};

struct DecayRow {
  double rho = 0.0;
  double sup_term = 0.0;     ///< sup |u|^2 on Omega within B_rho
  double energy_term = 0.0;  ///< sum_k int |grad_k u|^2 |x|^{2k-n} over Omega within B_rho
  double cap_integral = 0.0;
};

struct DecayReport {
  double R = 0.0;
  double M_R = 0.0;
  std::vector<DecayRow> rows;
  double c1 = 0.0;
  double c2 = 0.0;
  bool fitted = false;
  std::string status;
  Grid grid;
  int cg_iterations = 0;
  nlohmann::json to_json() const;
  std::string csv() const;
};

/// u solves L u = f with f a bump centred on the +x_n axis outside B_{2R}, so L u = 0 on Omega within B_{2R}.
DecayReport decay_check(const EllipticOperator& op, const ComplementShape& complement, const Grid& grid,
                        const DecayOptions& opts = {});

}  // namespace pplab
