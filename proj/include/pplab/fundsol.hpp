#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pplab/operator.hpp"

namespace pplab {

/// Restriction of the fundamental solution F of P(D) to the unit sphere.
/// F(x) = F(x/|x|) |x|^{2m-n}.
class SphereProfile {
 public:
  SphereProfile() = default;
  SphereProfile(std::string operator_id, int dimension, int half_order,
                std::vector<std::vector<double>> directions, std::vector<double> values,
                double error_estimate, bool isotropic = false);

  /// Profile of (-Laplace)^m: the Riesz constant in every direction.
  static SphereProfile isotropic(int m, int n);

  const std::string& operator_id() const { return operator_id_; }
  int dimension() const { return n_; }
  int half_order() const { return m_; }
  int homogeneity_degree() const { return 2 * m_ - n_; }
  bool is_isotropic() const { return isotropic_; }
  double error_estimate() const { return error_estimate_; }
  std::size_t size() const { return values_.size(); }
  const std::vector<std::vector<double>>& directions() const { return directions_; }
  const std::vector<double>& values() const { return values_; }

  /// F(theta) for a stored direction (or any direction when isotropic).
  double direction_value(std::span<const double> theta) const;
  /// F(x) = F(x/|x|) |x|^{2m-n}; x must be nonzero and its direction stored.
  double value_at(std::span<const double> x) const;

  /// Returns a copy with all values multiplied by `factor` (used to build
  /// sign-flipped weights in tests and positivity experiments).
  SphereProfile scaled(double factor) const;

 private:
  std::string operator_id_;
  int n_ = 0;
  int m_ = 0;
  std::vector<std::vector<double>> directions_;
  std::vector<double> values_;
  double error_estimate_ = 0.0;
  bool isotropic_ = false;
  std::map<std::vector<long long>, std::size_t> index_;
};

struct ProfileOptions {
  int directions = 0;       ///< 0: 2^10 for n <= 4, 2^12 otherwise (axes always included)
  int sphere_nodes = 0;     ///< nodes on S^{n-2}; 0: size chosen from n
  int radial_nodes = 32;    ///< Gauss nodes for the finite-part integral
  int contour_nodes = 32;   ///< Cauchy contour nodes for Taylor coefficients
  double contour_radius = 0.25;
  bool estimate_error = true;  ///< rerun at half resolution and report the change
};

/// Riesz constant Gamma(n/2 - m) / (4^m pi^{n/2} Gamma(m)) of (-Laplace)^m, n > 2m.
double riesz_constant(int m, int n);

/// F at unit direction `theta`, via the plane-wave (Radon) decomposition of
/// 1/P with the homogeneous distribution |s|^{2m-n} evaluated exactly
/// (derivative pairing for odd n, Hadamard finite part for even n).
double fundamental_solution_value(const EllipticOperator& op, std::span<const double> theta,
                                  const ProfileOptions& opts = {});

/// Profile on the deterministic default direction set.
SphereProfile compute_profile(const EllipticOperator& op, const ProfileOptions& opts = {});
/// Profile on caller-supplied unit directions.
SphereProfile compute_profile(const EllipticOperator& op, std::vector<std::vector<double>> directions,
                              const ProfileOptions& opts = {});

/// Independent route for lattice directions: periodic discrete Green function
/// by FFT on a resolution^n torus (zero mode removed), sampled at three radii
/// along `lattice_direction` and extrapolated through the homogeneity law to
/// remove the constant offset and the quadratic image term.
double periodic_profile_value(const EllipticOperator& op, std::span<const int> lattice_direction,
                              int resolution);

struct SignSummary {
  double min = 0.0;
  double max = 0.0;
  double fraction_negative = 0.0;
};

SignSummary sign_summary(const SphereProfile& profile);

nlohmann::json profile_summary_json(const SphereProfile& profile);
/// CSV rows: direction components..., value.
std::string profile_csv(const SphereProfile& profile);

}  // namespace pplab
