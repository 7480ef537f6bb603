#include "pplab/capacity.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "pplab/directions.hpp"
#include "pplab/domains.hpp"
#include "pplab/errors.hpp"

namespace pplab {

std::string to_string(CapacityKind kind) { return kind == CapacityKind::homogeneous ? "homogeneous" : "inhomogeneous"; }

nlohmann::json CapacityValue::to_json() const {
  return {{"value", value},
          {"kind", to_string(kind)},
          {"raw", raw},
          {"half_box", half_box},
          {"coarse", coarse},
          {"refinement_estimate", refinement_estimate},
          {"box_estimate", box_estimate},
          {"extrapolated", extrapolated},
          {"iterations", iterations},
          {"converged", converged},
          {"grid", grid.to_json()}};
}

ConstrainedMinimum minimize_with_unit_constraint(const EnergyForm& form, const Mask& K, const CGOptions& cg) {
  const Grid& g = form.grid();
  if (!(K.grid() == g)) throw InputError("minimize_with_unit_constraint: mask grid differs from form grid");
  ConstrainedMinimum out;
  out.u = GridFunction(g);
  if (K.empty()) {
    out.cg.converged = true;
    return out;
  }
  const Layout& lay = form.layout();
  std::vector<std::uint8_t> free(lay.size(), 0);
  std::vector<double> x(lay.size(), 0.0), b(lay.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t p = lay.index_of_node(i);
    if (K.test(i)) {
      x[p] = 1.0;
    } else {
      free[p] = 1;
    }
  }
  out.cg = conjugate_gradient([&](const double* in, double* o) { form.apply_padded(in, o); }, free, b, x, cg);
  lay.to_box(x, out.u.values());
  out.energy = form.energy(out.u);
  return out;
}

namespace {

double solve_raw(const Mask& K, int m, CapacityKind kind, const CGOptions& cg, int* iterations, bool* converged) {
  const int n = K.grid().dimension();
  const auto op = EllipticOperator::polyharmonic(m, n);
  const auto form = assemble(kind == CapacityKind::homogeneous ? EnergyKind::homogeneous : EnergyKind::inhomogeneous,
                             op, K.grid());
  const auto res = minimize_with_unit_constraint(form, K, cg);
  if (iterations) *iterations += res.cg.iterations;
  if (converged) *converged = *converged && res.cg.converged;
  return res.energy;
}

// Same set sampled at spacing 2h: coarse node c is in the set iff fine node 2c is.
Mask coarsen(const Mask& K) {
  const Grid& g = K.grid();
  const Grid cg(g.dimension(), 2.0 * g.spacing(), g.extent() / 2);
  Mask out(cg);
  std::vector<int> c(static_cast<std::size_t>(g.dimension()));
  for (std::size_t i = 0; i < cg.size(); ++i) {
    cg.coords(i, c);
    for (auto& v : c) v *= 2;
    if (K.test(g.index(c))) out.set(i);
  }
  return out;
}

// Box-extrapolated capacity; returns raw in *raw and the half-box value in *half.
double extrapolated(const Mask& K, int m, CapacityKind kind, bool extrapolate, const CGOptions& cg, double* raw,
                    double* half, bool* did, int* iterations, bool* converged) {
  const Grid& g = K.grid();
  const int n = g.dimension();
  *raw = solve_raw(K, m, kind, cg, iterations, converged);
  *half = 0.0;
  *did = false;
  const int e2 = g.extent() / 2;
  if (!extrapolate || kind != CapacityKind::homogeneous || n <= 2 * m) return *raw;
  if (e2 < 2 * m || K.linf_radius() + 2 * m > e2) return *raw;
  *half = solve_raw(K.embedded(g.with_extent(e2)), m, kind, cg, iterations, converged);
  const double f = std::pow(2.0, n - 2 * m);
  const double inv = (f / *raw - 1.0 / *half) / (f - 1.0);
  if (!(inv > 0.0)) return *raw;
  *did = true;
  return 1.0 / inv;
}

CapacityValue capacity_impl(const Mask& K, int m, CapacityKind kind, const CapacityOptions& opts) {
  CapacityValue v;
  v.kind = kind;
  v.grid = K.grid();
  if (K.empty()) return v;
  if (K.grid().extent() < 2 * m)
    throw ConfigError("capacity: extent must be at least 2m = " + std::to_string(2 * m));
  if (K.linf_radius() >= K.grid().extent())
    throw InputError("capacity: K touches the box boundary; enlarge the extent");
  v.value = extrapolated(K, m, kind, opts.extrapolate_box, opts.cg, &v.raw, &v.half_box, &v.extrapolated,
                         &v.iterations, &v.converged);
  v.box_estimate = std::abs(v.value - v.raw);
  if (opts.estimate_refinement && K.grid().extent() / 2 >= 2 * m) {
    const Mask coarse = coarsen(K);
    if (!coarse.empty() && coarse.linf_radius() < coarse.grid().extent()) {
      double raw = 0.0, half = 0.0;
      bool did = false;
      v.coarse = extrapolated(coarse, m, kind, opts.extrapolate_box, opts.cg, &raw, &half, &did, &v.iterations,
                              &v.converged);
      v.refinement_estimate = std::abs(v.value - v.coarse);
    }
  }
  return v;
}

}  // namespace

CapacityValue cap_m(const Mask& K, int m, const CapacityOptions& opts) {
  const int n = K.grid().dimension();
  if (m < 1) throw InputError("cap_m: m must be positive");
  if (n <= 2 * m)
    throw UnsupportedRegime("cap_m: the homogeneous capacity needs n > 2m (got n=" + std::to_string(n) +
                            ", m=" + std::to_string(m) + "); use the inhomogeneous kind (bessel_capacity)");
  return capacity_impl(K, m, CapacityKind::homogeneous, opts);
}

CapacityValue bessel_capacity(const Mask& K, int m, const CapacityOptions& opts) {
  if (m < 1) throw InputError("bessel_capacity: m must be positive");
  return capacity_impl(K, m, CapacityKind::inhomogeneous, opts);
}

double condenser_capacity(const Mask& K, int m, CapacityKind kind, const CGOptions& cg) {
  if (K.empty()) return 0.0;
  return solve_raw(K, m, kind, cg, nullptr, nullptr);
}

double log_coefficient(const EllipticOperator& op, int samples) {
  const int n = op.dimension();
  if (op.is_polyharmonic()) return sphere_area(n) * std::pow(2.0 * std::numbers::pi, -n);
  const auto dirs = unit_directions(n, samples, true);
  double s = 0.0;
  for (const auto& d : dirs) s += 1.0 / op.symbol(d);
  return sphere_area(n) * s / static_cast<double>(dirs.size()) * std::pow(2.0 * std::numbers::pi, -n);
}

std::size_t AnnulusCapacitySeries::usable() const {
  std::size_t c = 0;
  for (const auto& t : terms) c += t.truncated ? 0 : 1;
  return c;
}

AnnulusCapacitySeries AnnulusCapacitySeries::scaled(double lambda) const {
  AnnulusCapacitySeries s = *this;
  double sum = 0.0;
  for (auto& t : s.terms) {
    t.capacity *= lambda;
    t.relative *= lambda;
    t.term *= lambda;
    if (!t.truncated) sum += t.term;
    t.partial_sum = sum;
  }
  return s;
}

std::string AnnulusCapacitySeries::csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "j,rho,capacity,weighted_term,partial_sum,truncated\n";
  for (const auto& t : terms)
    os << t.j << ',' << t.rho << ',' << t.capacity << ',' << t.term << ',' << t.partial_sum << ','
       << (t.truncated ? 1 : 0) << '\n';
  return os.str();
}

nlohmann::json AnnulusCapacitySeries::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& t : terms)
    rows.push_back({{"j", t.j},
                    {"rho", t.rho},
                    {"spacing", t.spacing},
                    {"capacity", t.capacity},
                    {"relative", t.relative},
                    {"weight", t.weight},
                    {"term", t.term},
                    {"partial_sum", t.partial_sum},
                    {"nodes", t.nodes},
                    {"truncated", t.truncated}});
  return {{"n", n},
          {"m", m},
          {"shape", shape},
          {"j_min", options.j_min},
          {"j_max", options.j_max},
          {"nodes_per_rho", options.nodes_per_rho},
          {"box_factor", options.box_factor},
          {"usable_scales", usable()},
          {"distinct_solves", distinct_solves},
          {"log_coefficient", log_coefficient},
          {"terms", rows}};
}

AnnulusCapacitySeries annulus_series(const ComplementShape& shape, int m, int n, const SeriesOptions& opts) {
  if (shape.dimension() != n) throw InputError("annulus_series: shape dimension differs from n");
  if (n < 2 * m) throw UnsupportedRegime("annulus_series: requires n >= 2m");
  if (opts.j_min < 0 || opts.j_max < opts.j_min) throw InputError("annulus_series: invalid scale range");
  if (opts.nodes_per_rho < 1 || !(opts.box_factor > 1.0)) throw InputError("annulus_series: invalid per-scale grid");
  const int extent = static_cast<int>(std::ceil(opts.nodes_per_rho * opts.box_factor));
  if (extent < 2 * m) throw ConfigError("annulus_series: per-scale box too small for order-2m stencils");

  AnnulusCapacitySeries s;
  s.n = n;
  s.m = m;
  s.shape = shape.name();
  s.options = opts;
  if (n == 2 * m) s.log_coefficient = log_coefficient(EllipticOperator::polyharmonic(m, n));

  // Node-coordinate slices are solved on unit spacing; physical capacity scales as h^{n-2m}.
  const Grid unit(n, 1.0, extent);
  std::map<std::vector<std::uint8_t>, double> cache;
  double sum = 0.0;
  for (int j = opts.j_min; j <= opts.j_max; ++j) {
    AnnulusTerm t;
    t.j = j;
    t.rho = std::ldexp(1.0, -j);
    t.spacing = t.rho / opts.nodes_per_rho;
    t.weight = std::pow(t.rho, 2 * m - n);
    t.truncated = !shape.resolvable(t.rho, t.spacing);
    if (!t.truncated) {
      const Grid g(n, t.spacing, extent);
      const double r2 = t.rho * t.rho * (1.0 + 1e-12);
      Mask slice = Mask::from_predicate(g, [&](std::span<const double> x) {
        double d2 = 0.0;
        for (double v : x) d2 += v * v;
        return d2 <= r2 && shape.contains(x, t.spacing);
      });
      t.nodes = slice.count();
      const Mask key(unit, slice.bits());
      auto it = cache.find(key.bits());
      if (it == cache.end()) {
        it = cache.emplace(key.bits(), condenser_capacity(key, m, CapacityKind::homogeneous, opts.cg)).first;
        ++s.distinct_solves;
      }
      t.relative = it->second * std::pow(t.spacing, n - 2 * m);
      if (n > 2 * m) {
        t.capacity = t.relative;
      } else if (t.relative > 0.0) {
        const double outer = opts.box_factor * t.rho;
        t.capacity = 1.0 / (1.0 / t.relative + s.log_coefficient * std::max(0.0, std::log(1.0 / outer)));
      }
      t.term = t.capacity * t.weight;
      sum += t.term;
    }
    t.partial_sum = sum;
    s.terms.push_back(t);
  }
  return s;
}

}  // namespace pplab
