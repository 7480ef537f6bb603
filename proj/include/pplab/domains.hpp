#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pplab/grid.hpp"

namespace pplab {

/// Cusp profile f with f increasing on (0, 1].
class CuspProfile {
 public:
  enum class Kind { power, exponential, tabulated };

  /// f(tau) = tau^p. p >= 1 is accepted (p = 1 is the borderline cone case).
  static CuspProfile power(double p);
  /// f(tau) = exp(-tau^{-a}), a > 0.
  static CuspProfile exponential(double a);
  /// Samples (tau_i, f_i) with 0 < tau_i <= 1 and both strictly increasing;
  /// interpolated linearly in (log tau, log f).
  static CuspProfile tabulated(std::vector<double> tau, std::vector<double> f);
  /// Tabulated copy of this profile on `count` log-spaced points in [tau_min, 1].
  CuspProfile tabulate(double tau_min, int count) const;

  Kind kind() const { return kind_; }
  double parameter() const { return parameter_; }
  double operator()(double tau) const;
  double log_value(double log_tau) const;
  /// Smallest tau covered by the table (0 for closed-form kinds).
  double tau_min() const;
  const std::vector<double>& log_tau() const { return log_tau_; }
  const std::vector<double>& log_f() const { return log_f_; }

  std::string name() const;
  nlohmann::json to_json() const;
  static CuspProfile from_json(const nlohmann::json& j);

 private:
  Kind kind_ = Kind::power;
  double parameter_ = 2.0;
  std::vector<double> log_tau_;
  std::vector<double> log_f_;
};

/// Closed complement of a domain near the boundary point O = 0.
class ComplementShape {
 public:
  virtual ~ComplementShape() = default;
  virtual int dimension() const = 0;
  virtual std::string name() const = 0;
  /// Membership of the node at physical position x on a grid of spacing h.
  virtual bool contains(std::span<const double> x, double h) const = 0;
  /// False when the slice at scale rho is too thin for spacing h.
  virtual bool resolvable(double rho, double h) const;
  virtual nlohmann::json to_json() const = 0;

  Mask rasterize(const Grid& grid) const;
};

/// No complement (Omega is the whole space near O).
class EmptyComplement final : public ComplementShape {
 public:
  explicit EmptyComplement(int n) : n_(n) {}
  int dimension() const override { return n_; }
  std::string name() const override { return "empty"; }
  bool contains(std::span<const double>, double) const override { return false; }
  nlohmann::json to_json() const override;

 private:
  int n_;
};

/// Closed circular cone {x : -x_n >= |x| cos(alpha)} with vertex O.
class ConeComplement final : public ComplementShape {
 public:
  ConeComplement(int n, double half_aperture);
  int dimension() const override { return n_; }
  std::string name() const override { return "cone"; }
  bool contains(std::span<const double> x, double h) const override;
  nlohmann::json to_json() const override;
  double half_aperture() const { return alpha_; }

 private:
  int n_;
  double alpha_;
};

/// Ray {x_1 <= 0, x' = 0}.
class RayComplement final : public ComplementShape {
 public:
  explicit RayComplement(int n) : n_(n) {}
  int dimension() const override { return n_; }
  std::string name() const override { return "ray"; }
  bool contains(std::span<const double> x, double h) const override;
  nlohmann::json to_json() const override;

 private:
  int n_;
};

/// {0 < x_n < 1, |x'| < f(x_n)} together with O. Nodes where the cusp is
/// thinner than h/2 are dropped, so unresolved parts never masquerade as a
/// line of nodes.
class CuspComplement final : public ComplementShape {
 public:
  CuspComplement(int n, CuspProfile f);
  int dimension() const override { return n_; }
  std::string name() const override { return "cusp_" + f_.name(); }
  bool contains(std::span<const double> x, double h) const override;
  bool resolvable(double rho, double h) const override;
  nlohmann::json to_json() const override;
  const CuspProfile& profile() const { return f_; }

 private:
  int n_;
  CuspProfile f_;
};

/// Complement given as a node mask on a fixed grid (nearest-node lookup).
class MaskComplement final : public ComplementShape {
 public:
  explicit MaskComplement(Mask mask) : mask_(std::move(mask)) {}
  int dimension() const override { return mask_.grid().dimension(); }
  std::string name() const override { return "mask"; }
  bool contains(std::span<const double> x, double h) const override;
  bool resolvable(double rho, double h) const override;
  nlohmann::json to_json() const override;

 private:
  Mask mask_;
};

/// Builds a shape from {"type": "cone"|"ray"|"empty"|"cusp", ...}.
std::unique_ptr<ComplementShape> shape_from_json(const nlohmann::json& j, int n);

}  // namespace pplab
