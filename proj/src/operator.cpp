#include "pplab/operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pplab/directions.hpp"
#include "pplab/errors.hpp"

namespace pplab {

MultiIndex::MultiIndex(std::vector<int> entries) : entries_(std::move(entries)) {
  for (int e : entries_) {
    if (e < 0) throw InputError("MultiIndex: negative entry");
    order_ += e;
  }
}

double MultiIndex::multinomial() const {
  double r = std::tgamma(order_ + 1.0);
  for (int e : entries_) r /= std::tgamma(e + 1.0);
  return std::round(r);
}

MultiIndex operator+(const MultiIndex& a, const MultiIndex& b) {
  if (a.dimension() != b.dimension()) throw InputError("MultiIndex: dimension mismatch");
  std::vector<int> e(a.entries_);
  for (std::size_t i = 0; i < e.size(); ++i) e[i] += b.entries_[i];
  return MultiIndex(std::move(e));
}

namespace {

void enumerate(int n, int remaining, std::vector<int>& cur, int pos, std::vector<MultiIndex>& out) {
  if (pos == n - 1) {
    cur[static_cast<std::size_t>(pos)] = remaining;
    out.emplace_back(cur);
    return;
  }
  for (int v = remaining; v >= 0; --v) {
    cur[static_cast<std::size_t>(pos)] = v;
    enumerate(n, remaining - v, cur, pos + 1, out);
  }
}

std::string describe(const MultiIndex& a) {
  std::ostringstream os;
  os << '(';
  for (int i = 0; i < a.dimension(); ++i) os << (i ? "," : "") << a[i];
  os << ')';
  return os.str();
}

}  // namespace

std::vector<MultiIndex> multi_indices(int n, int order) {
  if (n < 1 || order < 0) throw InputError("multi_indices: invalid arguments");
  std::vector<MultiIndex> out;
  std::vector<int> cur(static_cast<std::size_t>(n), 0);
  enumerate(n, order, cur, 0, out);
  std::sort(out.begin(), out.end());
  return out;
}

EllipticOperator::EllipticOperator(int dimension, int half_order, std::vector<CoefficientTerm> terms,
                                   std::string id)
    : n_(dimension), m_(half_order), id_(std::move(id)) {
  if (n_ < 1) throw InputError("EllipticOperator: dimension must be positive");
  if (m_ < 1) throw InputError("EllipticOperator: half order must be positive");

  // Symmetrize: a_sym(a,b) = (a(a,b) + a(b,a)) / 2, kept once per unordered pair.
  std::map<std::pair<MultiIndex, MultiIndex>, double> raw;
  for (auto& t : terms) {
    if (t.alpha.dimension() != n_ || t.beta.dimension() != n_)
      throw InputError("EllipticOperator: coefficient multi-index has wrong length");
    if (t.alpha.order() != m_ || t.beta.order() != m_)
      throw InputError("EllipticOperator: coefficient " + describe(t.alpha) + "," + describe(t.beta) +
                       " is not of order m in both indices");
    raw[{t.alpha, t.beta}] += t.value;
  }
  std::map<std::pair<MultiIndex, MultiIndex>, double> sym;
  for (auto& [key, v] : raw) {
    const auto& [a, b] = key;
    if (a == b) {
      sym[{a, b}] += v;
    } else {
      const auto lo = std::min(a, b);
      const auto hi = std::max(a, b);
      sym[{lo, hi}] += 0.5 * v;
    }
  }
  for (auto& [key, v] : sym) {
    if (v != 0.0) terms_.push_back({key.first, key.second, v});
  }

  std::map<std::vector<int>, double> mono;
  for (auto& t : terms_) {
    const double mult = (t.alpha == t.beta) ? 1.0 : 2.0;
    mono[(t.alpha + t.beta).entries()] += mult * t.value;
  }
  for (auto& [e, c] : mono) {
    if (c != 0.0) monomials_.push_back({e, c});
  }
}

EllipticOperator EllipticOperator::laplacian(int n) { return polyharmonic(1, n); }

EllipticOperator EllipticOperator::polyharmonic(int m, int n) {
  std::vector<CoefficientTerm> terms;
  for (const auto& a : multi_indices(n, m)) terms.push_back({a, a, a.multinomial()});
  return EllipticOperator(n, m, std::move(terms), m == 1 ? "laplacian" : "polyharmonic");
}

EllipticOperator EllipticOperator::mn8() {
  const int n = 8;
  std::vector<CoefficientTerm> terms;
  for (const auto& a : multi_indices(n, 2)) terms.push_back({a, a, a.multinomial()});
  std::vector<int> e(8, 0);
  e[7] = 2;
  terms.push_back({MultiIndex(e), MultiIndex(e), 10.0});
  return EllipticOperator(n, 2, std::move(terms), "mn8");
}

EllipticOperator EllipticOperator::preset(const std::string& name, int m, int n) {
  if (name == "laplacian") {
    if (m != 1) throw InputError("preset laplacian requires m = 1");
    return laplacian(n);
  }
  if (name == "polyharmonic") return polyharmonic(m, n);
  if (name == "mn8") {
    if (n != 8 || m != 2) throw InputError("preset mn8 is defined for n = 8, m = 2 only");
    return mn8();
  }
  throw InputError("unknown operator preset '" + name + "'");
}

EllipticOperator EllipticOperator::from_json(const nlohmann::json& j) {
  if (j.contains("preset")) {
    const std::string name = j.at("preset").get<std::string>();
    const int m = j.value("m", name == "mn8" ? 2 : 1);
    const int n = j.value("n", name == "mn8" ? 8 : 3);
    return preset(name, m, n);
  }
  const int n = j.at("n").get<int>();
  const int m = j.at("m").get<int>();
  std::vector<CoefficientTerm> terms;
  for (const auto& t : j.at("terms")) {
    if (t.is_array()) {
      if (t.size() != 3) throw InputError("operator term must be [alpha, beta, value]");
      terms.push_back({MultiIndex(t[0].get<std::vector<int>>()), MultiIndex(t[1].get<std::vector<int>>()),
                       t[2].get<double>()});
    } else {
      terms.push_back({MultiIndex(t.at("alpha").get<std::vector<int>>()),
                       MultiIndex(t.at("beta").get<std::vector<int>>()), t.at("value").get<double>()});
    }
  }
  return EllipticOperator(n, m, std::move(terms), j.value("id", std::string("custom")));
}

nlohmann::json EllipticOperator::to_json() const {
  nlohmann::json terms = nlohmann::json::array();
  // Both orders of every off-diagonal pair, so from_json reproduces the symbol.
  for (const auto& t : expanded_terms()) terms.push_back({t.alpha.entries(), t.beta.entries(), t.value});
  return {{"id", id_},
          {"n", n_},
          {"m", m_},
          {"sign_convention", "P(xi) = (-1)^m L(xi) = sum a_ab xi^(a+b) > 0"},
          {"terms", terms}};
}

std::vector<CoefficientTerm> EllipticOperator::expanded_terms() const {
  std::vector<CoefficientTerm> out;
  for (const auto& t : terms_) {
    out.push_back(t);
    if (!(t.alpha == t.beta)) out.push_back({t.beta, t.alpha, t.value});
  }
  return out;
}

double EllipticOperator::coefficient(const MultiIndex& alpha, const MultiIndex& beta) const {
  const auto lo = std::min(alpha, beta);
  const auto hi = std::max(alpha, beta);
  for (const auto& t : terms_) {
    if (t.alpha == lo && t.beta == hi) return t.value;
  }
  return 0.0;
}

void EllipticOperator::check_dimension(std::size_t len) const {
  if (len != static_cast<std::size_t>(n_))
    throw InputError("symbol: point has length " + std::to_string(len) + ", operator dimension is " +
                     std::to_string(n_));
}

double EllipticOperator::symbol(std::span<const double> xi) const {
  check_dimension(xi.size());
  double sum = 0.0;
  for (const auto& mono : monomials_) {
    double v = mono.coefficient;
    for (int i = 0; i < n_; ++i) {
      const int e = mono.exponent[static_cast<std::size_t>(i)];
      for (int p = 0; p < e; ++p) v *= xi[static_cast<std::size_t>(i)];
    }
    sum += v;
  }
  return sum;
}

std::complex<double> EllipticOperator::symbol(std::span<const std::complex<double>> xi) const {
  check_dimension(xi.size());
  std::complex<double> sum = 0.0;
  for (const auto& mono : monomials_) {
    std::complex<double> v = mono.coefficient;
    for (int i = 0; i < n_; ++i) {
      const int e = mono.exponent[static_cast<std::size_t>(i)];
      for (int p = 0; p < e; ++p) v *= xi[static_cast<std::size_t>(i)];
    }
    sum += v;
  }
  return sum;
}

bool EllipticOperator::is_polyharmonic() const {
  const auto ref = polyharmonic(m_, n_);
  if (ref.monomials_.size() != monomials_.size()) return false;
  for (std::size_t i = 0; i < monomials_.size(); ++i) {
    if (ref.monomials_[i].exponent != monomials_[i].exponent) return false;
    if (std::abs(ref.monomials_[i].coefficient - monomials_[i].coefficient) > 1e-12) return false;
  }
  return true;
}

EllipticityReport check_ellipticity(const EllipticOperator& op, int samples) {
  if (samples < 1) throw InputError("check_ellipticity: samples must be >= 1");
  EllipticityReport rep;
  rep.min_value = std::numeric_limits<double>::infinity();
  const auto dirs = unit_directions(op.dimension(), samples, true);
  rep.samples = static_cast<int>(dirs.size());
  for (const auto& d : dirs) {
    const double p = op.symbol(d);
    if (p < rep.min_value) {
      rep.min_value = p;
      rep.worst_direction = d;
    }
  }
  rep.elliptic = rep.min_value > 0.0;
  return rep;
}

double fourier_kernel_probe(const EllipticOperator& op, std::span<const KernelNode> nodes) {
  if (nodes.size() < 2)
    throw InputError("fourier_kernel_probe: need at least two nodes (diagonal terms are excluded)");
  bool any = false;
  for (const auto& nd : nodes) {
    if (nd.xi.size() != static_cast<std::size_t>(op.dimension()))
      throw InputError("fourier_kernel_probe: node dimension mismatch");
    any = any || nd.weight != 0.0;
  }
  if (!any) throw InputError("fourier_kernel_probe: all weights are zero");

  std::vector<double> p(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) p[i] = op.symbol(nodes[i].xi);

  std::vector<double> diff(static_cast<std::size_t>(op.dimension()));
  double sum = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      double dist2 = 0.0;
      for (std::size_t k = 0; k < diff.size(); ++k) {
        diff[k] = nodes[i].xi[k] - nodes[j].xi[k];
        dist2 += diff[k] * diff[k];
      }
      if (dist2 == 0.0)
        throw InputError("fourier_kernel_probe: nodes " + std::to_string(i) + " and " + std::to_string(j) +
                         " coincide");
      const double kij = (p[i] + p[j]) / op.symbol(diff);
      sum += 2.0 * kij * nodes[i].weight * nodes[j].weight;
    }
  }
  return sum;
}

}  // namespace pplab
