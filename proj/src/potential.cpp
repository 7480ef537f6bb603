#include "pplab/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "pplab/errors.hpp"
#include "pplab/fundsol.hpp"

namespace pplab {

namespace {

std::vector<double> node_position(const Grid& g, std::span<const int> c) {
  std::vector<double> x(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) x[i] = c[i] * g.spacing();
  return x;
}

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

int linf(std::span<const int> c) {
  int r = 0;
  for (int v : c) r = std::max(r, std::abs(v));
  return r;
}

std::vector<int> snap(const Grid& g, std::span<const double> x) {
  if (static_cast<int>(x.size()) != g.dimension()) throw InputError("probe dimension differs from the grid");
  std::vector<int> c(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) c[i] = static_cast<int>(std::lround(x[i] / g.spacing()));
  return c;
}

double distance_to(const Mask& K, std::span<const double> y) {
  const Grid& g = K.grid();
  std::vector<double> x(static_cast<std::size_t>(g.dimension()));
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!K.test(i)) continue;
    g.position(i, x);
    double s = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) s += (x[a] - y[a]) * (x[a] - y[a]);
    best = std::min(best, s);
  }
  return std::sqrt(best);
}

}  // namespace

nlohmann::json PotentialReport::to_json() const {
  return {{"m", m},
          {"n", n},
          {"capacity", cap.to_json()},
          {"riesz_constant", riesz},
          {"box_lambda", lambda},
          {"box_corrected", corrected},
          {"trusted_extent", trusted_extent},
          {"range", {{"min", range_min}, {"max", range_max}, {"argmin", argmin}, {"argmax", argmax}}},
          {"box_range", {{"min", box_range_min}, {"max", box_range_max}}},
          {"cg", {{"iterations", solve.iterations}, {"relative_residual", solve.relative_residual}, {"converged", solve.converged}}},
          {"K_nodes", K.count()}};
}

PotentialReport capacitary_potential(const EllipticOperator& op, const Mask& K, const PotentialOptions& opts) {
  const Grid& g = K.grid();
  const int n = op.dimension();
  const int m = op.half_order();
  if (g.dimension() != n) throw InputError("capacitary_potential: grid dimension differs from the operator");
  if (n <= 2 * m)
    throw UnsupportedRegime("capacitary_potential: requires n > 2m (got n=" + std::to_string(n) + ", m=" +
                            std::to_string(m) + ")");
  if (g.extent() < 2 * m) throw ConfigError("capacitary_potential: extent must be at least 2m");

  PotentialReport r;
  r.m = m;
  r.n = n;
  r.K = K;
  r.riesz = op.is_polyharmonic() ? riesz_constant(m, n) : 1.0;
  r.cap.grid = g;
  // The box boundary layer carries the truncation artifact in either case.
  r.trusted_extent = g.extent() / 2;
  r.U = GridFunction(g);
  r.U_box = GridFunction(g);
  if (K.empty()) {
    r.solve.converged = true;
    return r;
  }
  if (K.linf_radius() >= g.extent()) throw InputError("capacitary_potential: K touches the box boundary");

  const auto form = assemble(EnergyKind::operator_form, op, g);
  auto full = minimize_with_unit_constraint(form, K, opts.cg);
  r.solve = full.cg;
  r.cap.raw = full.energy;
  r.cap.value = full.energy;
  r.cap.iterations = full.cg.iterations;
  r.cap.converged = full.cg.converged;
  r.U_box = std::move(full.u);

  const int e2 = g.extent() / 2;
  if (opts.box_correction && e2 >= 2 * m && K.linf_radius() + 2 * m <= e2) {
    const Mask Kh = K.embedded(g.with_extent(e2));
    const auto half = minimize_with_unit_constraint(assemble(EnergyKind::operator_form, op, Kh.grid()), Kh, opts.cg);
    r.cap.half_box = half.energy;
    r.cap.iterations += half.cg.iterations;
    r.cap.converged = r.cap.converged && half.cg.converged;
    const double f = std::pow(2.0, n - 2 * m);
    const double inv = (f / r.cap.raw - 1.0 / r.cap.half_box) / (f - 1.0);
    if (inv > 0.0 && 1.0 / inv <= r.cap.raw) {
      r.cap.value = 1.0 / inv;
      r.cap.extrapolated = true;
      r.corrected = true;
      r.lambda = r.cap.value / r.cap.raw;
    }
  }
  r.cap.box_estimate = std::abs(r.cap.value - r.cap.raw);
  for (std::size_t i = 0; i < g.size(); ++i) r.U[i] = K.test(i) ? 1.0 : 1.0 - r.lambda * (1.0 - r.U_box[i]);

  r.range_min = std::numeric_limits<double>::infinity();
  r.range_max = -std::numeric_limits<double>::infinity();
  r.box_range_min = r.range_min;
  r.box_range_max = r.range_max;
  std::vector<int> c(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (K.test(i)) continue;
    r.box_range_min = std::min(r.box_range_min, r.U_box[i]);
    r.box_range_max = std::max(r.box_range_max, r.U_box[i]);
    g.coords(i, c);
    if (linf(c) > r.trusted_extent) continue;
    if (r.U[i] < r.range_min) {
      r.range_min = r.U[i];
      r.argmin = c;
    }
    if (r.U[i] > r.range_max) {
      r.range_max = r.U[i];
      r.argmax = c;
    }
  }
  return r;
}

nlohmann::json RangeCheck::to_json() const {
  return {{"pass", pass}, {"tol", tol}, {"min", min}, {"max", max}, {"argmin", argmin}, {"argmax", argmax}};
}

RangeCheck range_check(const PotentialReport& report, double tol) {
  RangeCheck c;
  c.tol = tol;
  if (report.argmin.empty()) {
    c.pass = true;
    return c;
  }
  c.min = report.range_min;
  c.max = report.range_max;
  c.argmin = node_position(report.U.grid(), report.argmin);
  c.argmax = node_position(report.U.grid(), report.argmax);
  c.pass = c.min > -tol && c.max < 2.0 + tol;
  return c;
}

RadialPotential radial_ball_potential(int m, int n, double radius) {
  if (m < 1) throw InputError("radial potential: m must be positive");
  if (n <= 2 * m) throw UnsupportedRegime("radial potential: requires n > 2m");
  if (!(radius > 0.0)) throw InputError("radial potential: radius must be positive");
  RadialPotential u;
  u.m = m;
  u.n = n;
  u.radius = radius;
  Eigen::MatrixXd a(m, m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  rhs(0) = 1.0;
  for (int i = 0; i < m; ++i) u.exponents.push_back(2.0 + 2.0 * i - n);
  for (int q = 0; q < m; ++q) {
    for (int i = 0; i < m; ++i) {
      double ff = 1.0;
      for (int t = 0; t < q; ++t) ff *= u.exponents[static_cast<std::size_t>(i)] - t;
      a(q, i) = ff;
    }
  }
  const Eigen::VectorXd c = a.fullPivLu().solve(rhs);
  u.coefficients.assign(c.data(), c.data() + m);
  return u;
}

double RadialPotential::derivative(double r, int order) const {
  if (r <= radius) return order == 0 ? 1.0 : 0.0;
  const double s = r / radius;
  double v = 0.0;
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    double ff = 1.0;
    for (int t = 0; t < order; ++t) ff *= exponents[i] - t;
    v += coefficients[i] * ff * std::pow(s, exponents[i] - order);
  }
  return v / std::pow(radius, order);
}

double RadialPotential::value(double r) const { return derivative(r, 0); }

double RadialPotential::gradient_norm(double r, int order) const {
  switch (order) {
    case 0: return std::abs(value(r));
    case 1: return std::abs(derivative(r, 1));
    case 2: {
      const double d1 = derivative(r, 1) / r;
      const double d2 = derivative(r, 2);
      return std::sqrt(d2 * d2 + (n - 1) * d1 * d1);
    }
    default: throw InputError("radial potential: gradient order must be <= 2");
  }
}

double RadialPotential::capacity() const {
  return coefficients.back() * std::pow(radius, n - 2 * m) / riesz_constant(m, n);
}

nlohmann::json RadialPotential::to_json() const {
  return {{"m", m}, {"n", n}, {"radius", radius}, {"exponents", exponents}, {"coefficients", coefficients},
          {"capacity", capacity()}};
}

RangeCheck range_check(const RadialPotential& u, double outer, int samples, double tol) {
  RangeCheck c;
  c.tol = tol;
  c.min = std::numeric_limits<double>::infinity();
  c.max = -c.min;
  // Geometric samples resolve both the boundary layer and the far field.
  const double lo = std::log(u.radius), hi = std::log(u.radius * outer);
  for (int i = 1; i <= samples; ++i) {
    const double r = std::exp(lo + (hi - lo) * i / samples);
    const double v = u.value(r);
    if (v < c.min) {
      c.min = v;
      c.argmin = {r};
    }
    if (v > c.max) {
      c.max = v;
      c.argmax = {r};
    }
  }
  c.pass = c.min > -tol && c.max < 2.0 + tol;
  return c;
}

double gradient_norm_at(const GridFunction& u, std::span<const int> node, int order) {
  const Grid& g = u.grid();
  const int n = g.dimension();
  const double h = g.spacing();
  std::vector<int> c(node.begin(), node.end());
  auto at = [&](const std::vector<int>& p) { return u.at(p); };
  if (order == 0) return std::abs(at(c));
  if (order == 1) {
    double s = 0.0;
    for (int a = 0; a < n; ++a) {
      auto p = c, q = c;
      ++p[static_cast<std::size_t>(a)];
      --q[static_cast<std::size_t>(a)];
      const double d = (at(p) - at(q)) / (2.0 * h);
      s += d * d;
    }
    return std::sqrt(s);
  }
  if (order == 2) {
    double s = 0.0;
    for (int a = 0; a < n; ++a) {
      for (int b = a; b < n; ++b) {
        double d;
        if (a == b) {
          auto p = c, q = c;
          ++p[static_cast<std::size_t>(a)];
          --q[static_cast<std::size_t>(a)];
          d = (at(p) - 2.0 * at(c) + at(q)) / (h * h);
        } else {
          double acc = 0.0;
          for (int sa : {1, -1}) {
            for (int sb : {1, -1}) {
              auto p = c;
              p[static_cast<std::size_t>(a)] += sa;
              p[static_cast<std::size_t>(b)] += sb;
              acc += sa * sb * at(p);
            }
          }
          d = acc / (4.0 * h * h);
        }
        s += (a == b ? 1.0 : 2.0) * d * d;
      }
    }
    return std::sqrt(s);
  }
  throw InputError("gradient order must be <= 2");
}

nlohmann::json GradientDecay::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& p : probes)
    rows.push_back({{"point", p.point},
                    {"order", p.order},
                    {"gradient", p.gradient},
                    {"distance", p.distance},
                    {"ratio", p.ratio},
                    {"ratio_dist", p.ratio_dist},
                    {"skipped", p.skipped},
                    {"reason", p.reason}});
  return {{"fitted", fitted}, {"probes", rows}};
}

GradientDecay gradient_decay_check(const PotentialReport& report, const std::vector<int>& orders,
                                   const std::vector<std::vector<double>>& probes) {
  const Grid& g = report.U.grid();
  const int n = report.n, m = report.m;
  GradientDecay out;
  out.fitted.assign(orders.size(), 0.0);
  for (std::size_t oi = 0; oi < orders.size(); ++oi) {
    const int j = orders[oi];
    if (j < 0 || j > 2) throw InputError("gradient_decay_check: orders limited to j <= 2");
    for (const auto& y : probes) {
      ProbeRatio p;
      p.order = j;
      const auto c = snap(g, y);
      p.point = node_position(g, c);
      p.distance = distance_to(report.K, p.point);
      const double width = std::max(1, 2 * m) * g.spacing();
      if (p.distance < 2.0 * width) {
        p.skipped = true;
        p.reason = "dist(y, K) below two stencil widths";
      } else if (linf(c) + j > report.trusted_extent) {
        p.skipped = true;
        p.reason = "outside the trusted region";
      } else if (report.cap.value > 0.0) {
        p.gradient = gradient_norm_at(report.U, c, j);
        const double e = n + j - 2 * m;
        p.ratio = p.gradient * std::pow(norm(p.point), e) / (report.riesz * report.cap.value);
        p.ratio_dist = p.gradient * std::pow(p.distance, e) / report.cap.value;
        out.fitted[oi] = std::max(out.fitted[oi], p.ratio);
      }
      out.probes.push_back(p);
    }
  }
  return out;
}

nlohmann::json MaximalBound::to_json() const {
  return {{"rho", rho}, {"theta", theta}, {"orders", orders}, {"maximal", maximal}, {"ratio", ratio}, {"radii", radii}};
}

MaximalBound maximal_bound_check(const PotentialReport& report, double rho, double theta, const std::vector<int>& orders) {
  if (!(theta > 0.0 && theta < 1.0) || !(rho > 0.0)) throw InputError("maximal_bound_check: need rho > 0, 0 < theta < 1");
  const Grid& g = report.U.grid();
  const int n = report.n, m = report.m;
  MaximalBound mb;
  mb.rho = rho;
  mb.theta = theta;
  mb.orders = orders;
  std::vector<double> x(static_cast<std::size_t>(n));
  const double slack = 1e-9 * g.spacing();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!report.K.test(i)) continue;
    g.position(i, x);
    const double r = norm(x);
    if (r < theta * rho - slack || r > rho + slack)
      throw InputError("maximal_bound_check: K is not contained in the closed annulus theta*rho <= |x| <= rho");
  }
  for (int l : orders)
    if (l < 0 || l > std::max(2, m)) throw InputError("maximal_bound_check: unsupported order");
  const int reach = report.trusted_extent - 2;
  for (double r = g.spacing(); r <= reach * g.spacing() + 1e-12; r *= 2.0) mb.radii.push_back(r);
  if (mb.radii.empty()) throw ConfigError("maximal_bound_check: trusted region too small");
  std::vector<int> c(static_cast<std::size_t>(n));
  for (int l : orders) {
    std::vector<double> sum(mb.radii.size(), 0.0), cnt(mb.radii.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      g.coords(i, c);
      if (linf(c) > reach) continue;
      g.position(i, x);
      const double r = norm(x);
      if (r > mb.radii.back() + 1e-12) continue;
      const double v = report.K.empty() ? 0.0 : gradient_norm_at(report.U, c, l);
      for (std::size_t b = 0; b < mb.radii.size(); ++b)
        if (r <= mb.radii[b] + 1e-12) {
          sum[b] += v;
          cnt[b] += 1.0;
        }
    }
    double best = 0.0;
    for (std::size_t b = 0; b < mb.radii.size(); ++b)
      if (cnt[b] > 0.0) best = std::max(best, sum[b] / cnt[b]);
    mb.maximal.push_back(best);
    mb.ratio.push_back(report.cap.value > 0.0
                           ? best * std::pow(rho, n + l - 2 * m) / (report.riesz * report.cap.value)
                           : 0.0);
  }
  return mb;
}

nlohmann::json LowerBound::to_json() const { return {{"d", d}, {"fitted", fitted}, {"ratios", ratios}, {"pass", pass}}; }

LowerBound lower_bound_check(const PotentialReport& report, double d, const std::vector<std::vector<double>>& probes) {
  const Grid& g = report.U.grid();
  if (report.K.max_radius() > d + 1e-9 * g.spacing()) throw InputError("lower_bound_check: K is not contained in B_d");
  if (probes.empty()) throw InputError("lower_bound_check: no probes");
  LowerBound lb;
  lb.d = d;
  lb.fitted = std::numeric_limits<double>::infinity();
  for (const auto& y : probes) {
    const auto c = snap(g, y);
    if (linf(c) > report.trusted_extent) throw InputError("lower_bound_check: probe outside the trusted region");
    const auto x = node_position(g, c);
    const double ratio = report.cap.value > 0.0 ? report.U.at(c) * std::pow(norm(x) + d, report.n - 2 * report.m) /
                                                      (report.riesz * report.cap.value)
                                                : 0.0;
    lb.ratios.push_back(ratio);
    lb.fitted = std::min(lb.fitted, ratio);
  }
  lb.pass = lb.fitted > 0.0;
  return lb;
}

std::vector<std::pair<std::string, Mask>> sign_candidates(const Grid& grid) {
  const int n = grid.dimension();
  const int p = std::max(2, grid.extent() / 4);
  std::vector<int> c(static_cast<std::size_t>(n));
  auto build = [&](auto pred) {
    Mask k(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      grid.coords(i, c);
      if (pred(c)) k.set(i);
    }
    return k;
  };
  auto inplane = [&](const std::vector<int>& v) {
    for (int a = 0; a + 1 < n; ++a)
      if (std::abs(v[static_cast<std::size_t>(a)]) > p) return false;
    return true;
  };
  std::vector<std::pair<std::string, Mask>> out;
  out.emplace_back("plate_with_gap", build([&](const std::vector<int>& v) {
                     return v.back() == 0 && inplane(v) && v[0] != 0;
                   }));
  out.emplace_back("two_component", build([&](const std::vector<int>& v) {
                     const int off = std::abs(v[0]);
                     if (off < 1 || off > 3) return false;
                     for (int a = 1; a < n; ++a)
                       if (std::abs(v[static_cast<std::size_t>(a)]) > 1) return false;
                     return true;
                   }));
  out.emplace_back("comb", build([&](const std::vector<int>& v) {
                     for (int a = 1; a + 1 < n; ++a)
                       if (v[static_cast<std::size_t>(a)] != 0) return false;
                     if (std::abs(v[0]) > p) return false;
                     if (v.back() == 0) return true;
                     return v.back() > 0 && v.back() <= p / 2 && v[0] % 2 == 0;
                   }));
  return out;
}

nlohmann::json SignProbe::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : sites) rows.push_back({{"candidate", s.candidate}, {"node", s.node}, {"below", s.below}, {"above", s.above}});
  return {{"candidates", candidates}, {"sites", rows}, {"count", sites.size()},
          {"note", "exploratory; absence of sites is not a failure"}};
}

SignProbe sign_probe(const EllipticOperator& op, const std::vector<std::pair<std::string, Mask>>& candidates, double tol,
                     const CGOptions& cg) {
  SignProbe out;
  std::vector<std::vector<SignSite>> found(candidates.size());
  PotentialOptions po;
  po.cg = cg;
  po.box_correction = false;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    const auto& [name, K] = candidates[ci];
    if (K.empty()) continue;
    const auto rep = capacitary_potential(op, K, po);
    const Grid& g = K.grid();
    const int n = g.dimension();
    std::vector<int> c(static_cast<std::size_t>(n)), q(c.size());
    const int cube = static_cast<int>(std::pow(3, n));
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (K.test(i)) continue;
      g.coords(i, c);
      bool touches = false;
      double lo = 0.0, hi = 0.0;
      for (int t = 0; t < cube; ++t) {
        int r = t;
        bool inside = true;
        for (int a = 0; a < n; ++a) {
          q[static_cast<std::size_t>(a)] = c[static_cast<std::size_t>(a)] + r % 3 - 1;
          r /= 3;
          if (std::abs(q[static_cast<std::size_t>(a)]) > g.extent()) inside = false;
        }
        if (!inside) continue;
        const std::size_t j = g.index(q);
        if (K.test(j)) {
          touches = true;
          continue;
        }
        const double v = rep.U_box[j] - 1.0;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (touches && lo < -tol && hi > tol) found[ci].push_back({name, c, lo, hi});
    }
  }
  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    out.candidates.push_back(candidates[ci].first);
    out.sites.insert(out.sites.end(), found[ci].begin(), found[ci].end());
  }
  return out;
}

}  // namespace pplab
