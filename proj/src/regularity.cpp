#include "pplab/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "pplab/errors.hpp"
#include "pplab/quadrature.hpp"

namespace pplab {

std::string to_string(Classification c) {
  switch (c) {
    case Classification::regular: return "regular";
    case Classification::irregular: return "irregular";
    case Classification::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

std::string to_string(Trend t) {
  switch (t) {
    case Trend::vanishing: return "vanishing";
    case Trend::non_vanishing: return "non-vanishing";
    case Trend::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

namespace {

// Least-squares slope and intercept of y against x.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double k = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = k * sxx - sx * sx;
  if (!(std::abs(den) > 0.0)) return {0.0, k > 0 ? sy / k : 0.0};
  const double slope = (k * sxy - sx * sy) / den;
  return {slope, (sy - slope * sx) / k};
}

struct TailFit {
  double ratio = 0.0;  // geometric ratio per level
  double power = 0.0;  // p in d ~ level^{-p}
};

// Fits the tail of a positive sequence indexed by levels; zeros after the start mean ratio 0.
TailFit fit_tail(const std::vector<double>& level, const std::vector<double>& d) {
  TailFit f;
  std::vector<double> lx, ly, lk;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0.0)) return f;
    lx.push_back(level[i]);
    lk.push_back(std::log(level[i]));
    ly.push_back(std::log(d[i]));
  }
  f.ratio = std::exp(fit_line(lx, ly).first);
  f.power = -fit_line(lk, ly).first;
  return f;
}

}  // namespace

nlohmann::json WienerVerdict::to_json() const {
  return {{"classification", to_string(classification)},
          {"regime", regime},
          {"levels", levels},
          {"terms", terms},
          {"partial_sums", partial_sums},
          {"slope", slope},
          {"term_ratio", term_ratio},
          {"power", power},
          {"tail_estimate", tail_estimate},
          {"usable_scales", usable},
          {"truncated_scales", truncated},
          {"reason", reason}};
}

WienerVerdict wiener_classify(const AnnulusCapacitySeries& series, const WienerThresholds& t) {
  WienerVerdict v;
  if (series.n < 2 * series.m) throw UnsupportedRegime("wiener_classify: requires n >= 2m");
  v.regime = series.n == 2 * series.m ? "n=2m" : "n>2m";
  double sum = 0.0, top = 0.0;
  for (const auto& term : series.terms) {
    if (term.truncated) {
      ++v.truncated;
      continue;
    }
    v.levels.push_back(term.j);
    v.terms.push_back(term.term);
    top = std::max(top, term.term);
  }
  v.usable = static_cast<int>(v.terms.size());
  for (double x : v.terms) {
    sum += x;
    v.partial_sums.push_back(sum);
  }
  if (v.usable < t.min_scales) {
    v.reason = "fewer than " + std::to_string(t.min_scales) + " usable scales";
    return v;
  }
  if (!(top > 0.0)) {
    v.classification = Classification::irregular;
    v.reason = "all terms vanish";
    return v;
  }
  const std::size_t tail = std::max<std::size_t>(3, (v.terms.size() + 1) / 2);
  const std::size_t first = v.terms.size() - tail;
  std::vector<double> lv, td, ps;
  for (std::size_t i = first; i < v.terms.size(); ++i) {
    lv.push_back(v.levels[i]);
    td.push_back(v.terms[i] / top);
    ps.push_back(v.partial_sums[i] / top);
  }
  const TailFit f = fit_tail(lv, td);
  v.term_ratio = f.ratio;
  v.power = f.power;
  v.slope = fit_line(lv, ps).first;
  if (f.ratio < 1.0) v.tail_estimate = v.terms.back() * f.ratio / (1.0 - f.ratio);
  if (series.n > 2 * series.m) {
    if (f.ratio < t.tail_ratio) {
      v.classification = Classification::irregular;
      v.reason = "terms decay geometrically";
    } else if (v.slope >= t.slope_min && f.ratio >= t.flat_ratio) {
      v.classification = Classification::regular;
      v.reason = "partial sums grow linearly per level";
    } else {
      v.reason = "growth between the divergence and convergence thresholds";
    }
  } else {
    if (f.power <= t.power_max) {
      v.classification = Classification::regular;
      v.reason = "terms decay no faster than 1/j";
    } else if (f.ratio < t.tail_ratio && f.power > t.power_min) {
      v.classification = Classification::irregular;
      v.reason = "terms decay geometrically";
    } else {
      v.reason = "growth between the divergence and convergence thresholds";
    }
  }
  return v;
}

nlohmann::json CuspVerdict::to_json() const {
  nlohmann::json j{{"classification", to_string(classification)},
                   {"criterion", criterion},
                   {"method", method},
                   {"integral", std::isfinite(integral) ? nlohmann::json(integral) : nlohmann::json("divergent")}};
  if (method == "quadrature") {
    j["eps"] = eps;
    j["partial"] = partial;
    j["term_ratio"] = term_ratio;
    j["power"] = power;
  }
  return j;
}

namespace {

void check_cusp_regime(int m, int n) {
  if (m < 1) throw InputError("cusp_criterion: m must be positive");
  if (n <= 2 * m) throw UnsupportedRegime("cusp_criterion: the cusp criteria cover n >= 2m+1 only");
}

}  // namespace

CuspVerdict cusp_criterion(const CuspProfile& f, int m, int n) {
  check_cusp_regime(m, n);
  if (f.kind() == CuspProfile::Kind::tabulated) return cusp_criterion_quadrature(f, m, n);
  CuspVerdict v;
  v.method = "closed_form";
  const double inf = std::numeric_limits<double>::infinity();
  const double a = f.parameter();
  if (n == 2 * m + 1) {
    v.criterion = "log";
    if (f.kind() == CuspProfile::Kind::power) {
      v.integral = inf;  // (1/p) int du/u on (log 2, inf)
    } else {
      v.integral = std::pow(0.5, a) / a;  // int_0^{1/2} tau^{a-1}
    }
  } else {
    v.criterion = "power";
    const int b = n - 2 * m;
    if (f.kind() == CuspProfile::Kind::power) {
      const double e = a - b;
      v.integral = e <= -1.0 ? inf : 1.0 / (e + 1.0);
    } else {
      v.integral = boost::math::tgamma((b - 1.0) / a, 1.0) / a;
    }
  }
  v.classification = std::isfinite(v.integral) ? Classification::irregular : Classification::regular;
  return v;
}

CuspVerdict cusp_criterion_quadrature(const CuspProfile& f, int m, int n, const WienerThresholds& t) {
  check_cusp_regime(m, n);
  CuspVerdict v;
  v.method = "quadrature";
  const bool log_kind = n == 2 * m + 1;
  v.criterion = log_kind ? "log" : "power";
  const double top = log_kind ? 0.5 : 1.0;
  const double eps_min = f.kind() == CuspProfile::Kind::tabulated ? f.tau_min() : std::ldexp(1.0, -48);
  const int e = 2 * m - n + 1;
  // u = -log tau; both integrands are finite on every dyadic band.
  auto g = [&](double u) {
    const double lf = f.log_value(-u);
    if (log_kind) return 1.0 / std::abs(lf);
    return std::exp(lf - e * u);
  };
  std::vector<double> level, d;
  double acc = 0.0;
  double u0 = -std::log(top);
  for (int k = 1; k <= 48; ++k) {
    const double eps = top * std::ldexp(1.0, -k);
    if (eps < eps_min * (1.0 - 1e-12)) break;
    const double u1 = -std::log(eps);
    const double inc = quad::adaptive_gk15(g, u0, u1, 1e-12).value;
    acc += inc;
    v.eps.push_back(eps);
    v.partial.push_back(acc);
    level.push_back(k);
    d.push_back(inc);
    u0 = u1;
  }
  if (d.size() < 4) {
    v.integral = acc;
    return v;
  }
  const std::size_t tail = std::min<std::size_t>(8, d.size());
  const std::vector<double> tl(level.end() - static_cast<long>(tail), level.end());
  const std::vector<double> td(d.end() - static_cast<long>(tail), d.end());
  const TailFit fit = fit_tail(tl, td);
  v.term_ratio = fit.ratio;
  v.power = fit.power;
  if (fit.ratio < t.tail_ratio) {
    v.classification = Classification::irregular;
    v.integral = acc + d.back() * fit.ratio / (1.0 - fit.ratio);
  } else if (fit.power <= t.power_max) {
    v.classification = Classification::regular;
    v.integral = std::numeric_limits<double>::infinity();
  } else {
    v.integral = acc;
  }
  return v;
}

DirichletSolution dirichlet_solve(const EllipticOperator& op, const Mask& omega, const GridFunction& f,
                                  const CGOptions& cg) {
  const Grid& g = omega.grid();
  if (!(f.grid() == g)) throw InputError("dirichlet_solve: f and Omega live on different grids");
  if (op.dimension() != g.dimension()) throw InputError("dirichlet_solve: grid dimension differs from the operator");
  const int m = op.half_order();
  const Mask near = (~omega).dilated(m);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (f[i] != 0.0 && near.test(i))
      throw InputError("dirichlet_solve: f must vanish within " + std::to_string(m) +
                       " nodes of the boundary of Omega (violated at node " + nlohmann::json(g.coords(i)).dump() + ")");
  const auto form = assemble(EnergyKind::operator_form, op, g);
  const Layout& lay = form.layout();
  std::vector<std::uint8_t> free(lay.size(), 0);
  std::vector<double> b(lay.size(), 0.0), x(lay.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!omega.test(i)) continue;
    const std::size_t p = lay.index_of_node(i);
    free[p] = 1;
    b[p] = f[i];
  }
  DirichletSolution s;
  s.cg = conjugate_gradient([&](const double* in, double* out) { form.apply_padded(in, out); }, free, b, x, cg);
  s.u = GridFunction(g);
  lay.to_box(x, s.u.values());
  return s;
}

Mask domain_mask(const Grid& grid, const ComplementShape& complement, double radius) {
  if (complement.dimension() != grid.dimension()) throw InputError("domain_mask: dimension mismatch");
  const double h = grid.spacing();
  const double r2 = radius * radius * (1.0 - 1e-12);
  return Mask::from_predicate(grid, [&](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s < r2 && !complement.contains(x, h);
  });
}

nlohmann::json RegularityProbe::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : sup) {
    nlohmann::json row = nlohmann::json::array();
    for (double v : r) row.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
    rows.push_back(row);
  }
  return {{"spacings", spacings}, {"radii", radii},   {"sup", rows},           {"finest", finest},
          {"finest_radius", finest_radius},          {"u_max", u_max},       {"trend", to_string(trend)},
          {"wiener_label", wiener_label}};
}

std::string RegularityProbe::csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "h,rho,sup\n";
  for (std::size_t k = 0; k < spacings.size(); ++k)
    for (std::size_t i = 0; i < radii.size(); ++i)
      if (!std::isnan(sup[k][i])) os << spacings[k] << ',' << radii[i] << ',' << sup[k][i] << '\n';
  return os.str();
}

SourceFunction shell_source(double r0, double width) {
  if (!(r0 > 0.0) || !(width > 0.0)) throw InputError("shell_source: radius and width must be positive");
  return [r0, width](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    const double d = std::sqrt(s) - r0;
    const double t = 1.0 - d * d / (width * width);
    return t > 0.0 ? t * t * t : 0.0;
  };
}

RegularityProbe regularity_probe(const EllipticOperator& op, const ComplementShape& complement, const SourceFunction& f,
                                 const ProbeOptions& opts) {
  const int n = op.dimension();
  if (complement.dimension() != n) throw InputError("regularity_probe: dimension mismatch");
  if (opts.spacings.size() < 3) throw InputError("regularity_probe: needs at least 3 refinements");
  RegularityProbe p;
  p.spacings = opts.spacings;
  p.radii = opts.radii;
  const std::size_t K = opts.spacings.size();
  p.sup.assign(K, std::vector<double>(opts.radii.size(), std::nan("")));
  p.finest.assign(K, 0.0);
  p.finest_radius.assign(K, 0.0);
  p.u_max.assign(K, 0.0);
  std::vector<std::string> errors(K);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t k = 0; k < K; ++k) {
    try {
      const double h = opts.spacings[k];
      const Grid g(n, h, static_cast<int>(std::ceil(opts.domain_radius / h - 1e-9)));
      const Mask omega = domain_mask(g, complement, opts.domain_radius);
      GridFunction fv = GridFunction::from_function(g, f);
      const Mask band = (~omega).dilated(op.half_order());
      for (std::size_t i = 0; i < g.size(); ++i)
        if (band.test(i)) fv[i] = 0.0;
      const auto s = dirichlet_solve(op, omega, fv, opts.cg);
      p.u_max[k] = s.u.max_abs();
      for (std::size_t ri = 0; ri < opts.radii.size(); ++ri) {
        const double rho = opts.radii[ri];
        if (rho < 2.0 * h - 1e-12) continue;
        double best = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
          if (omega.test(i) && g.radius(i) <= rho + 1e-12) best = std::max(best, std::abs(s.u[i]));
        p.sup[k][ri] = best;
        p.finest[k] = best;
        p.finest_radius[k] = rho;
      }
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw InputError("regularity_probe: " + e);

  bool zero = true;
  for (double v : p.u_max) zero = zero && v == 0.0;
  if (zero) {
    p.trend = Trend::vanishing;
    return p;
  }
  bool vanishing = true;
  for (std::size_t k = 1; k < K; ++k)
    vanishing = vanishing && p.finest_radius[k] < p.finest_radius[k - 1] && p.finest[k] < opts.vanish_ratio * p.finest[k - 1];
  const double last = p.finest[K - 1], prev = p.finest[K - 2];
  const bool stable = std::abs(last - prev) < opts.stable_change * prev && last > opts.floor * p.u_max[K - 1];
  p.trend = vanishing ? Trend::vanishing : stable ? Trend::non_vanishing : Trend::inconclusive;
  return p;
}

nlohmann::json DecayReport::to_json() const {
  nlohmann::json rj = nlohmann::json::array();
  for (const auto& r : rows)
    rj.push_back({{"rho", r.rho}, {"sup_term", r.sup_term}, {"energy_term", r.energy_term}, {"cap_integral", r.cap_integral}});
  return {{"R", R},   {"M_R", M_R},       {"rows", rj}, {"c1", c1},
          {"c2", c2}, {"fitted", fitted}, {"status", status}, {"grid", grid.to_json()}, {"cg_iterations", cg_iterations}};
}

std::string DecayReport::csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "rho,sup_term,energy_term,cap_integral\n";
  for (const auto& r : rows) os << r.rho << ',' << r.sup_term << ',' << r.energy_term << ',' << r.cap_integral << '\n';
  return os.str();
}

namespace {

int dyadic_level(double x, const char* what) {
  const double l = -std::log2(x);
  const int j = static_cast<int>(std::lround(l));
  if (!(x > 0.0) || std::abs(l - j) > 1e-9) throw InputError(std::string("decay_check: ") + what + " must be a power of 2");
  return j;
}

}  // namespace

DecayReport decay_check(const EllipticOperator& op, const ComplementShape& complement, const Grid& grid,
                        const DecayOptions& opts) {
  const int n = grid.dimension();
  const int m = op.half_order();
  if (op.dimension() != n || complement.dimension() != n) throw InputError("decay_check: dimension mismatch");
  if (n <= 2 * m) throw UnsupportedRegime("decay_check: requires n > 2m");
  const double h = grid.spacing();
  const double L = opts.domain_radius;
  if (grid.extent() * h < L - 1e-12) throw InputError("decay_check: the grid does not cover the domain ball");
  if (!(2.0 * opts.R < L)) throw InputError("decay_check: need 2R < domain radius");
  const int a = dyadic_level(opts.R, "R");
  int b = a;
  for (double rho : opts.radii) {
    const int j = dyadic_level(rho, "each radius");
    if (j <= a) throw InputError("decay_check: radii must be smaller than R");
    if (rho < h - 1e-12) throw InputError("decay_check: radius below the grid spacing");
    b = std::max(b, j);
  }

  DecayReport rep;
  rep.R = opts.R;
  rep.grid = grid;
  std::vector<double> c(static_cast<std::size_t>(n), 0.0);
  c.back() = 0.5 * (2.0 * opts.R + L);
  const double br = 0.25 * (L - 2.0 * opts.R);
  if (complement.contains(c, h)) throw InputError("decay_check: the source centre lies in the complement");
  const Mask omega = domain_mask(grid, complement, L);
  GridFunction f = GridFunction::from_function(grid, [&](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - c[i]) * (x[i] - c[i]);
    const double t = 1.0 - s / (br * br);
    return t > 0.0 ? std::pow(t, m + 2) : 0.0;
  });
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (!omega.test(i)) f[i] = 0.0;
  const auto sol = dirichlet_solve(op, omega, f, opts.cg);
  rep.cg_iterations = sol.cg.iterations;
  const GridFunction& u = sol.u;

  double mr = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid.radius(i);
    if (omega.test(i) && r >= opts.R && r < 2.0 * opts.R) mr += u[i] * u[i];
  }
  rep.M_R = mr * grid.cell_volume() * std::pow(opts.R, -n);

  // Weighted energy density: sum_k sum_{|a|=k} k!/a! |D^a u(x)|^2 |x + a h/2|^{2k-n} h^n.
  struct Term {
    MultiIndex alpha;
    double coefficient;
    Stencil s;
  };
  std::vector<Term> terms;
  for (int k = 1; k <= m; ++k)
    for (const auto& al : multi_indices(n, k)) terms.push_back({al, al.multinomial(), difference_stencil(al, h)});
  const double rmax = *std::max_element(opts.radii.begin(), opts.radii.end());
  rep.rows.resize(opts.radii.size());
  for (std::size_t ri = 0; ri < opts.radii.size(); ++ri) rep.rows[ri].rho = opts.radii[ri];
  std::vector<int> x(static_cast<std::size_t>(n)), q(x.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid.radius(i);
    if (r > rmax + 1e-12) continue;
    grid.coords(i, x);
    double dens = 0.0;
    for (const auto& t : terms) {
      double d = 0.0;
      for (std::size_t s = 0; s < t.s.offsets.size(); ++s) {
        for (int ax = 0; ax < n; ++ax)
          q[static_cast<std::size_t>(ax)] = x[static_cast<std::size_t>(ax)] + t.s.offsets[s][static_cast<std::size_t>(ax)];
        d += t.s.weights[s] * u.at(q);
      }
      double w2 = 0.0;
      for (int ax = 0; ax < n; ++ax) {
        const double y = (x[static_cast<std::size_t>(ax)] + 0.5 * t.alpha[ax]) * h;
        w2 += y * y;
      }
      dens += t.coefficient * d * d * std::pow(w2, 0.5 * (2 * t.alpha.order() - n));
    }
    dens *= grid.cell_volume();
    for (auto& row : rep.rows) {
      if (r > row.rho + 1e-12) continue;
      row.energy_term += dens;
      if (omega.test(i)) row.sup_term = std::max(row.sup_term, u[i] * u[i]);
    }
  }

  SeriesOptions so = opts.series;
  so.j_min = a;
  so.j_max = b;
  so.cg = opts.cg;
  const auto series = annulus_series(complement, m, n, so);
  for (auto& row : rep.rows) {
    const int j = dyadic_level(row.rho, "radius");
    double s = 0.0;
    for (int l = a; l < j; ++l) {
      const auto& t0 = series.terms[static_cast<std::size_t>(l - a)];
      const auto& t1 = series.terms[static_cast<std::size_t>(l + 1 - a)];
      s += 0.5 * (t0.term + t1.term) * std::numbers::ln2;
    }
    row.cap_integral = s;
  }
  std::vector<double> xs, ys;
  for (const auto& row : rep.rows) {
    const double left = row.sup_term + row.energy_term;
    if (!(left > 0.0) || !(rep.M_R > 0.0)) continue;
    xs.push_back(row.cap_integral);
    ys.push_back(std::log(left / rep.M_R));
  }
  if (xs.size() < 2) {
    rep.status = "degenerate: solution vanishes";
    return rep;
  }
  const double lo = *std::min_element(xs.begin(), xs.end()), hi = *std::max_element(xs.begin(), xs.end());
  if (hi - lo <= 1e-3 * std::max(1.0, std::abs(hi))) {
    rep.status = "degenerate: capacity integral nearly constant";
    rep.c1 = std::exp(*std::max_element(ys.begin(), ys.end()));
    return rep;
  }
  const auto [slope, icpt] = fit_line(xs, ys);
  rep.c2 = -slope;
  // Smallest c1 that makes the fitted bound hold at every radius.
  rep.c1 = std::exp(icpt);
  for (std::size_t i = 0; i < xs.size(); ++i) rep.c1 = std::max(rep.c1, std::exp(ys[i] + rep.c2 * xs[i]));
  rep.fitted = true;
  rep.status = "fitted";
  return rep;
}

}  // namespace pplab
