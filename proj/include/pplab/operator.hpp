#pragma once

#include <complex>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pplab {

/// Multi-index alpha in N^n; order |alpha| is cached.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> entries);

  int dimension() const { return static_cast<int>(entries_.size()); }
  int order() const { return order_; }
  int operator[](int i) const { return entries_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& entries() const { return entries_; }

  /// order! / alpha!
  double multinomial() const;

  friend MultiIndex operator+(const MultiIndex& a, const MultiIndex& b);
  friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;

 private:
  std::vector<int> entries_;
  int order_ = 0;
};

/// All multi-indices of length n and the given order, in lexicographic order.
std::vector<MultiIndex> multi_indices(int n, int order);

struct CoefficientTerm {
  MultiIndex alpha;
  MultiIndex beta;
  double value = 0.0;
};

/// Constant-coefficient operator sum_{|a|=|b|=m} a_{ab} d^{a+b} of order 2m.
///
/// Sign convention: the artifact works with the positive symbol
/// P(xi) = sum a_{ab} xi^{a+b}, which is the Fourier multiplier of the
/// operator, so that -Laplace has P = |xi|^2. Coefficients are symmetrized on
/// construction and stored once per unordered pair (alpha <= beta).
class EllipticOperator {
 public:
  EllipticOperator(int dimension, int half_order, std::vector<CoefficientTerm> terms,
                   std::string id = "custom");

  static EllipticOperator laplacian(int n);
  static EllipticOperator polyharmonic(int m, int n);
  /// 10 d_8^4 + Laplace^2 in R^8.
  static EllipticOperator mn8();
  static EllipticOperator preset(const std::string& name, int m, int n);
  static EllipticOperator from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  int dimension() const { return n_; }
  int half_order() const { return m_; }
  const std::string& id() const { return id_; }

  /// Canonical pairs alpha <= beta with the symmetrized coefficient.
  const std::vector<CoefficientTerm>& canonical_terms() const { return terms_; }
  /// Both orders (alpha, beta) and (beta, alpha) for off-diagonal pairs.
  std::vector<CoefficientTerm> expanded_terms() const;
  double coefficient(const MultiIndex& alpha, const MultiIndex& beta) const;

  double symbol(std::span<const double> xi) const;
  std::complex<double> symbol(std::span<const std::complex<double>> xi) const;

  /// True when the coefficients are exactly those of (-Laplace)^m.
  bool is_polyharmonic() const;

  struct Monomial {
    std::vector<int> exponent;
    double coefficient;
  };
  const std::vector<Monomial>& monomials() const { return monomials_; }

 private:
  void check_dimension(std::size_t len) const;

  int n_;
  int m_;
  std::string id_;
  std::vector<CoefficientTerm> terms_;
  std::vector<Monomial> monomials_;
};

struct EllipticityReport {
  bool elliptic = false;
  double min_value = 0.0;
  std::vector<double> worst_direction;
  int samples = 0;
};

/// Samples P on a deterministic low-discrepancy set of unit vectors (the 2n
/// coordinate axes are always included).
EllipticityReport check_ellipticity(const EllipticOperator& op, int samples);

struct KernelNode {
  std::vector<double> xi;
  double weight = 0.0;
};

/// sum_{i != j} (P(xi_i) + P(xi_j)) / P(xi_i - xi_j) w_i w_j. The singular
/// diagonal is excluded.
double fourier_kernel_probe(const EllipticOperator& op, std::span<const KernelNode> nodes);

}  // namespace pplab
