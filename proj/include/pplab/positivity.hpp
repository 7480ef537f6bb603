#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "pplab/energy.hpp"
#include "pplab/fundsol.hpp"
#include "pplab/grid.hpp"
#include "pplab/solvers.hpp"

namespace pplab {

/// One spherical-harmonic channel of (-Laplace)^m on a uniform grid in t = log r.
/// The weight is normalized to |x|^{2m-n}; the Riesz constant only rescales quotients.
struct ChannelForm {
  int m = 0;
  int n = 0;
  int k = 0;
  double dt = 0.0;
  int points = 0;
  Eigen::MatrixXd A;  ///< weighted operator form (symmetrized composition)
  Eigen::MatrixXd B;  ///< comparison form sum_j int |grad_j u|^2 |x|^{2j-n}
};

/// Coefficients h_0..h_m of the comparison symbol H_k(tau) = sum_i h_i tau^{2i}.
std::vector<double> comparison_coefficients(int m, int n, int k);
/// G_j(s, s') of the sphere-integrated |grad_j (r^s Y_k)|^2 identity (G_0 = 1).
std::complex<double> comparison_kernel(int j, int n, int k, std::complex<double> s, std::complex<double> sp);

ChannelForm build_channel_form(int m, int n, int k, double dt, int points);
/// A(g), B(g) for a profile on the channel grid.
double channel_weighted_value(const ChannelForm& f, const Eigen::VectorXd& g);
double channel_comparison_value(const ChannelForm& f, const Eigen::VectorXd& g);

struct ChannelOptions {
  int k_max = 12;
  double dt = 0.1;
  double window = 8.0;       ///< initial width in t
  double max_window = 64.0;  ///< doubling stops here
  double stability = 0.02;   ///< relative change that ends window doubling
  double epsilon = 1e-8;     ///< violation threshold
  double positive_floor = 1e-8;
};

struct ChannelResult {
  int k = 0;
  double quotient = 0.0;          ///< min generalized Rayleigh quotient at dt
  double quotient_refined = 0.0;  ///< same window at dt/2
  double window = 0.0;
  int points = 0;
  int doublings = 0;
};

enum class PositivityStatus { positive_at_resolution, violated };
std::string to_string(PositivityStatus s);

struct PositivityVerdict {
  PositivityStatus status = PositivityStatus::positive_at_resolution;
  std::string method;
  int m = 0;
  int n = 0;
  double min_quotient = 0.0;
  int min_channel = -1;
  std::vector<ChannelResult> channels;
  int k_max_used = 0;

  // Witness (violated only).
  int witness_channel = -1;
  double witness_dt = 0.0;
  std::vector<double> witness;           ///< radial profile samples on the channel grid
  double witness_value = 0.0;            ///< A(witness) on the channel grid
  double witness_refined_value = 0.0;    ///< A of the band-limited interpolant at dt/2
  double witness_continuum_value = 0.0;  ///< A of the band-limited interpolant via its symbol
  std::optional<GridFunction> grid_witness;
  bool witness_validated = false;

  nlohmann::json resolution;
  nlohmann::json to_json() const;
  std::string witness_csv() const;
};

/// Channel reduction of (-Laplace)^m with weight |x|^{2m-n}, channels 0..k_max.
PositivityVerdict channel_positivity(int m, int n, const ChannelOptions& opts = {});

/// A of the band-limited interpolant of g (spacing dt) through the exact channel symbol.
double continuum_weighted_value(int m, int n, int k, double dt, const std::vector<double>& g);
/// Re M_k(i tau): exact symbol of the weighted channel form.
double weighted_symbol(int m, int n, int k, double tau);

struct GridPositivityOptions {
  EigenOptions eigen{};
  double epsilon = 1e-8;
  bool refine = true;  ///< repeat at spacing h/2 (extent doubled) for the stability check
};

/// Full-grid test: min generalized eigenvalue of (weighted form, Hardy form) on
/// functions vanishing on the origin neighbourhood. n <= 5 only.
PositivityVerdict grid_positivity(const EllipticOperator& op, const Grid& grid, const SphereProfile& profile,
                                  const GridPositivityOptions& opts = {});

}  // namespace pplab
