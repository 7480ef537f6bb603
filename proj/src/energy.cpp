#include "pplab/energy.hpp"

#include <cmath>
#include <map>

#include "pplab/errors.hpp"

namespace pplab {

std::string to_string(EnergyKind kind) {
  switch (kind) {
    case EnergyKind::homogeneous: return "homogeneous";
    case EnergyKind::inhomogeneous: return "inhomogeneous";
    case EnergyKind::operator_form: return "operator_form";
    case EnergyKind::weighted: return "weighted_operator_form";
  }
  return "unknown";
}

EnergyKind parse_energy_kind(const std::string& s) {
  if (s == "homogeneous" || s == "homogeneous_m") return EnergyKind::homogeneous;
  if (s == "inhomogeneous" || s == "inhomogeneous_m") return EnergyKind::inhomogeneous;
  if (s == "operator_form" || s == "operator") return EnergyKind::operator_form;
  if (s == "weighted" || s == "weighted_operator_form") return EnergyKind::weighted;
  throw InputError("unknown energy kind '" + s + "'");
}

Stencil difference_stencil(const MultiIndex& alpha, double h) {
  const int n = alpha.dimension();
  Stencil s;
  s.dimension = n;
  s.add(std::vector<int>(static_cast<std::size_t>(n), 0), std::pow(h, -alpha.order()));
  for (int axis = 0; axis < n; ++axis) {
    const int a = alpha[axis];
    if (a == 0) continue;
    Stencil next;
    next.dimension = n;
    for (std::size_t k = 0; k < s.offsets.size(); ++k) {
      double binom = 1.0;
      for (int j = 0; j <= a; ++j) {
        auto o = s.offsets[k];
        o[static_cast<std::size_t>(axis)] += j;
        const double sign = ((a - j) % 2 == 0) ? 1.0 : -1.0;
        next.add(std::move(o), s.weights[k] * sign * binom);
        binom = binom * (a - j) / (j + 1);
      }
    }
    s = std::move(next);
  }
  s.canonicalize();
  return s;
}

Stencil energy_kernel(const std::vector<CoefficientTerm>& terms, int n, double h) {
  std::map<std::vector<int>, double> acc;
  std::vector<int> w(static_cast<std::size_t>(n));
  for (const auto& t : terms) {
    const auto sa = difference_stencil(t.alpha, h);
    const auto sb = difference_stencil(t.beta, h);
    for (std::size_t p = 0; p < sa.offsets.size(); ++p) {
      for (std::size_t q = 0; q < sb.offsets.size(); ++q) {
        for (int i = 0; i < n; ++i)
          w[static_cast<std::size_t>(i)] = sb.offsets[q][static_cast<std::size_t>(i)] - sa.offsets[p][static_cast<std::size_t>(i)];
        acc[w] += t.value * sa.weights[p] * sb.weights[q];
      }
    }
  }
  Stencil k;
  k.dimension = n;
  for (const auto& [off, v] : acc) {
    std::vector<int> neg(off.size());
    for (std::size_t i = 0; i < off.size(); ++i) neg[i] = -off[i];
    const auto it = acc.find(neg);
    const double other = it == acc.end() ? 0.0 : it->second;
    const double sym = 0.5 * (v + other);
    if (sym != 0.0) k.add(off, sym);
  }
  return k;
}

Mask origin_neighbourhood(const Grid& grid, int radius) {
  Mask m(grid);
  std::vector<int> c(static_cast<std::size_t>(grid.dimension()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.coords(i, c);
    bool inside = true;
    for (int v : c) inside = inside && std::abs(v) <= radius;
    if (inside) m.set(i);
  }
  return m;
}

std::vector<std::vector<double>> grid_directions(const Grid& grid) {
  std::map<std::vector<long long>, std::vector<double>> uniq;
  std::vector<int> c(static_cast<std::size_t>(grid.dimension()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.coords(i, c);
    double r2 = 0.0;
    for (int v : c) r2 += double(v) * v;
    if (r2 == 0.0) continue;
    const double inv = 1.0 / std::sqrt(r2);
    std::vector<double> d(c.size());
    std::vector<long long> key(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) {
      d[k] = c[k] * inv;
      key[k] = std::llround(d[k] * 1e9);
    }
    uniq.emplace(std::move(key), std::move(d));
  }
  std::vector<std::vector<double>> out;
  out.reserve(uniq.size());
  for (auto& [k, d] : uniq) out.push_back(std::move(d));
  return out;
}

namespace {

std::vector<CoefficientTerm> diagonal_terms(int n, int order, double scale) {
  std::vector<CoefficientTerm> t;
  for (const auto& a : multi_indices(n, order)) t.push_back({a, a, scale * a.multinomial()});
  return t;
}

double binomial(int m, int k) {
  double b = 1.0;
  for (int i = 0; i < k; ++i) b = b * (m - i) / (i + 1);
  return std::round(b);
}

}  // namespace

EnergyForm assemble(EnergyKind kind, const EllipticOperator& op, const Grid& grid, const SphereProfile* weight) {
  const int n = op.dimension();
  const int m = op.half_order();
  if (grid.dimension() != n) throw InputError("assemble: grid dimension differs from operator dimension");
  if (grid.extent() < 2 * m)
    throw ConfigError("assemble: extent " + std::to_string(grid.extent()) + " leaves no room for order-" +
                      std::to_string(2 * m) + " stencils (need extent >= " + std::to_string(2 * m) + ")");
  if ((kind == EnergyKind::weighted) != (weight != nullptr))
    throw InputError("assemble: a weight profile is required for, and only for, the weighted kind");

  std::vector<CoefficientTerm> terms;
  switch (kind) {
    case EnergyKind::homogeneous: terms = diagonal_terms(n, m, 1.0); break;
    case EnergyKind::inhomogeneous:
      for (int k = 0; k <= m; ++k) {
        auto t = diagonal_terms(n, k, binomial(m, k));
        terms.insert(terms.end(), t.begin(), t.end());
      }
      break;
    case EnergyKind::operator_form:
    case EnergyKind::weighted: terms = op.expanded_terms(); break;
  }

  EnergyForm f;
  f.kind_ = kind;
  f.m_ = m;
  f.kernel_ = energy_kernel(terms, n, grid.spacing());
  f.layout_ = Layout(grid, f.kernel_.radius);
  f.scratch_.assign(2 * f.layout_.size(), 0.0);
  if (kind == EnergyKind::weighted) {
    if (n <= 2 * m) throw UnsupportedRegime("assemble: the weighted form needs n > 2m");
    if (weight->dimension() != n || weight->half_order() != m)
      throw InputError("assemble: weight profile does not match the operator's (n, m)");
    f.excluded_ = origin_neighbourhood(grid, m);
    f.weight_box_.assign(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (f.excluded_.test(i)) continue;
      f.weight_box_[i] = weight->value_at(grid.position(i));
    }
    f.weight_padded_ = f.layout_.to_padded(f.weight_box_);
  } else {
    f.excluded_ = Mask(grid);
  }
  return f;
}

void EnergyForm::apply_padded(const double* in, double* out) const {
  const auto region = Region::box(grid());
  if (kind_ != EnergyKind::weighted) {
    kernels::omp::apply(layout_, region, kernel_, in, out);
    return;
  }
  // Symmetrized weighted product (F K + K F) / 2.
  const std::size_t sz = layout_.size();
  double* fu = scratch_.data();
  double* ku = scratch_.data() + sz;
  kernels::omp::multiply(weight_padded_, std::span<const double>(in, sz), std::span<double>(fu, sz));
  kernels::omp::apply(layout_, region, kernel_, fu, out);
  kernels::omp::apply(layout_, region, kernel_, in, ku);
  const auto& nodes = layout_.node_map();
  const auto nn = static_cast<std::ptrdiff_t>(nodes.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < nn; ++i) {
    const std::size_t p = nodes[static_cast<std::size_t>(i)];
    out[p] = 0.5 * (out[p] + weight_padded_[p] * ku[p]);
  }
}

GridFunction EnergyForm::apply(const GridFunction& u) const {
  if (!(u.grid() == grid())) throw InputError("EnergyForm::apply: grid mismatch");
  auto in = layout_.to_padded(u.values());
  std::vector<double> out(layout_.size(), 0.0);
  apply_padded(in.data(), out.data());
  GridFunction r(grid());
  layout_.to_box(out, r.values());
  return r;
}

double EnergyForm::bilinear(const GridFunction& u, const GridFunction& v) const {
  const auto av = apply(v);
  return grid().cell_volume() * kernels::omp::dot(u.values(), av.values());
}

double EnergyForm::energy(const GridFunction& u) const { return bilinear(u, u); }

Eigen::SparseMatrix<double> EnergyForm::matrix() const {
  const Grid& g = grid();
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<int> c(static_cast<std::size_t>(g.dimension()));
  std::vector<int> nb(c.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.coords(i, c);
    for (std::size_t k = 0; k < kernel_.offsets.size(); ++k) {
      for (std::size_t d = 0; d < c.size(); ++d) nb[d] = c[d] + kernel_.offsets[k][d];
      if (!g.contains(nb)) continue;
      const std::size_t j = g.index(nb);
      double v = kernel_.weights[k];
      if (kind_ == EnergyKind::weighted) v *= 0.5 * (weight_box_[i] + weight_box_[j]);
      trip.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
    }
  }
  Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(g.size()));
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

HardyForm::HardyForm(const Grid& grid, int m) : layout_(grid, m), m_(m) {
  if (m < 1) throw InputError("HardyForm: m must be positive");
  if (grid.extent() < 2 * m) throw ConfigError("HardyForm: extent too small for order-" + std::to_string(m) + " differences");
  const int n = grid.dimension();
  for (int k = 1; k <= m; ++k) {
    for (const auto& a : multi_indices(n, k)) {
      Term t{a, a.multinomial(), difference_stencil(a, grid.spacing()), {}};
      t.adjoint.dimension = n;
      for (std::size_t q = 0; q < t.forward.offsets.size(); ++q) {
        auto o = t.forward.offsets[q];
        for (auto& v : o) v = -v;
        t.adjoint.add(std::move(o), t.forward.weights[q]);
      }
      terms_.push_back(std::move(t));
    }
  }
  excluded_ = origin_neighbourhood(grid, m);
  d_.assign(layout_.size(), 0.0);
  tmp_.assign(layout_.size(), 0.0);
}

namespace {

// Multiplies `v` on `region` by c |x + alpha h / 2|^{2k-n}; zero where that point is the origin.
void weight_rows(const Layout& layout, const Region& region, const MultiIndex& alpha, double c, double* v) {
  const Grid& g = layout.grid();
  const int n = g.dimension();
  const double h = g.spacing();
  const double expo = 0.5 * (2 * alpha.order() - n);
  const std::size_t rows = region.rows();
  const int len = region.row_length();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r) {
    std::size_t rr = static_cast<std::size_t>(r);
    double base = 0.0;
    for (int i = n - 2; i >= 0; --i) {
      const auto span = static_cast<std::size_t>(region.hi[static_cast<std::size_t>(i)] - region.lo[static_cast<std::size_t>(i)] + 1);
      const int ci = region.lo[static_cast<std::size_t>(i)] + static_cast<int>(rr % span);
      rr /= span;
      const double x = (ci + 0.5 * alpha[i]) * h;
      base += x * x;
    }
    double* row = v + layout.row_start(region, static_cast<std::size_t>(r));
    for (int j = 0; j < len; ++j) {
      const double x = (region.lo.back() + j + 0.5 * alpha[n - 1]) * h;
      const double r2 = base + x * x;
      row[j] *= r2 > 0.0 ? c * std::pow(r2, expo) : 0.0;
    }
  }
}

Region difference_region(const Grid& g, int m) {
  Region r = Region::box(g);
  for (auto& v : r.lo) v -= m;
  return r;
}

}  // namespace

void HardyForm::apply_padded(const double* in, double* out) const {
  const Grid& g = layout_.grid();
  const auto box = Region::box(g);
  const auto dreg = difference_region(g, m_);
  for (const auto& node : layout_.node_map()) out[node] = 0.0;
  for (const auto& t : terms_) {
    kernels::omp::apply(layout_, dreg, t.forward, in, d_.data());
    weight_rows(layout_, dreg, t.alpha, t.coefficient, d_.data());
    kernels::omp::apply(layout_, box, t.adjoint, d_.data(), tmp_.data());
    const auto& nodes = layout_.node_map();
    const auto nn = static_cast<std::ptrdiff_t>(nodes.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < nn; ++i) out[nodes[static_cast<std::size_t>(i)]] += tmp_[nodes[static_cast<std::size_t>(i)]];
  }
}

double HardyForm::energy(const GridFunction& u) const {
  const Grid& g = layout_.grid();
  if (!(u.grid() == g)) throw InputError("HardyForm::energy: grid mismatch");
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (excluded_.test(i) && u[i] != 0.0)
      throw InputError("hardy_weighted_energy: u must vanish on the origin neighbourhood of l-infinity radius " +
                       std::to_string(m_));
  }
  const auto in = layout_.to_padded(u.values());
  const auto dreg = difference_region(g, m_);
  std::vector<double> w(layout_.size(), 0.0);
  double total = 0.0;
  for (const auto& t : terms_) {
    std::fill(d_.begin(), d_.end(), 0.0);
    kernels::omp::apply(layout_, dreg, t.forward, in.data(), d_.data());
    std::copy(d_.begin(), d_.end(), w.begin());
    weight_rows(layout_, dreg, t.alpha, t.coefficient, w.data());
    total += kernels::omp::dot(d_, w);
  }
  return total * g.cell_volume();
}

double hardy_weighted_energy(const GridFunction& u, int m) { return HardyForm(u.grid(), m).energy(u); }

}  // namespace pplab
