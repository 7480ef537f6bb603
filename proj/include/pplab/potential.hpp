#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pplab/capacity.hpp"
#include "pplab/energy.hpp"
#include "pplab/grid.hpp"
#include "pplab/operator.hpp"

namespace pplab {

struct PotentialOptions {
  CGOptions cg{};
  /// Also solve in the half-extent box and remove the constant box correction,
  /// which is accurate where |x| is small against the box.
  bool box_correction = true;
};

struct PotentialReport {
  int m = 0;
  int n = 0;
  GridFunction U;      ///< box-corrected potential
  GridFunction U_box;  ///< minimizer in the declared box (zero boundary values)
  Mask K;
  CapacityValue cap;   ///< L-capacity: operator_form energy of the minimizer
  double riesz = 1.0;  ///< F = riesz |x|^{2m-n} for polyharmonic operators, 1 otherwise
  double lambda = 1.0; ///< U = 1 - lambda (1 - U_box)
  bool corrected = false;
  int trusted_extent = 0;  ///< l-infinity node radius where U is trusted (half the box)
  double range_min = 0.0;
  double range_max = 0.0;
  std::vector<int> argmin;
  std::vector<int> argmax;
  double box_range_min = 0.0;
  double box_range_max = 0.0;
  CGResult solve;

  nlohmann::json to_json() const;
};

PotentialReport capacitary_potential(const EllipticOperator& op, const Mask& K, const PotentialOptions& opts = {});

struct RangeCheck {
  bool pass = false;
  double tol = 1e-6;
  double min = 0.0;
  double max = 0.0;
  std::vector<double> argmin;
  std::vector<double> argmax;
  nlohmann::json to_json() const;
};

RangeCheck range_check(const PotentialReport& report, double tol = 1e-6);

/// Exact radial potential of a ball K = B_R for (-Laplace)^m, n > 2m:
/// U = sum_i c_i (r/R)^{2 + 2i - n} off K, with U - 1 vanishing to order m - 1 on the sphere.
struct RadialPotential {
  int m = 0;
  int n = 0;
  double radius = 1.0;
  std::vector<double> exponents;
  std::vector<double> coefficients;

  double value(double r) const;
  double derivative(double r, int order) const;
  /// Frobenius norm of the j-th derivative tensor (j <= 2).
  double gradient_norm(double r, int order) const;
  double capacity() const;
  nlohmann::json to_json() const;
};

RadialPotential radial_ball_potential(int m, int n, double radius = 1.0);
/// Range of the radial potential on samples in (R, R*outer].
RangeCheck range_check(const RadialPotential& u, double outer = 64.0, int samples = 4096, double tol = 1e-6);

/// |grad_j u| at a node: Frobenius norm of the j-th central-difference tensor.
double gradient_norm_at(const GridFunction& u, std::span<const int> node, int order);

struct ProbeRatio {
  std::vector<double> point;
  int order = 0;
  double gradient = 0.0;    ///< |grad_j U(y)|
  double distance = 0.0;    ///< dist(y, K)
  double ratio = 0.0;       ///< |grad_j U| |y|^{n+j-2m} / (riesz cap)
  double ratio_dist = 0.0;  ///< |grad_j U| dist^{n+j-2m} / cap
  bool skipped = false;
  std::string reason;
};

struct GradientDecay {
  std::vector<ProbeRatio> probes;
  std::vector<double> fitted;  ///< c_j = max ratio per order
  nlohmann::json to_json() const;
};

/// Probes are physical points snapped to nodes; probes with dist(y, K) below
/// two stencil widths or outside the trusted region are skipped.
GradientDecay gradient_decay_check(const PotentialReport& report, const std::vector<int>& orders,
                                   const std::vector<std::vector<double>>& probes);

struct MaximalBound {
  double rho = 0.0;
  double theta = 0.0;
  std::vector<int> orders;
  std::vector<double> maximal;  ///< M grad_l U(0)
  std::vector<double> ratio;    ///< M grad_l U(0) rho^{n+l-2m} / (riesz cap)
  std::vector<double> radii;
  nlohmann::json to_json() const;
};

/// Dyadic-ball maximal function of |grad_l U| at the origin.
MaximalBound maximal_bound_check(const PotentialReport& report, double rho, double theta, const std::vector<int>& orders);

struct LowerBound {
  double d = 0.0;
  double fitted = 0.0;  ///< min over probes of U(y) (|y| + d)^{n-2m} / (riesz cap)
  std::vector<double> ratios;
  bool pass = false;
  nlohmann::json to_json() const;
};

LowerBound lower_bound_check(const PotentialReport& report, double d, const std::vector<std::vector<double>>& probes);

struct SignSite {
  std::string candidate;
  std::vector<int> node;
  double below = 0.0;  ///< min of U - 1 in the 3^n neighbourhood
  double above = 0.0;  ///< max of U - 1 in the 3^n neighbourhood
};

struct SignProbe {
  std::vector<std::string> candidates;
  std::vector<SignSite> sites;
  nlohmann::json to_json() const;
};

/// Curated candidate sets: plate-with-gap, two-component and comb masks.
std::vector<std::pair<std::string, Mask>> sign_candidates(const Grid& grid);
/// Nodes next to K where U - 1 takes both signs (beyond tol) in the 3^n neighbourhood.
SignProbe sign_probe(const EllipticOperator& op, const std::vector<std::pair<std::string, Mask>>& candidates,
                     double tol = 1e-9, const CGOptions& cg = {});

}  // namespace pplab
