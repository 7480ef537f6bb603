#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "pplab/capacity.hpp"
#include "pplab/domains.hpp"
#include "pplab/energy.hpp"
#include "pplab/errors.hpp"
#include "pplab/regularity.hpp"

using namespace pplab;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

GridFunction bump(const Grid& g, std::vector<double> c, double w) {
  return GridFunction::from_function(g, [&](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - c[i]) * (x[i] - c[i]);
    const double t = 1.0 - s / (w * w);
    return t > 0.0 ? t * t * t : 0.0;
  });
}

// Negative (2n+1)-point Laplacian at node i.
double minus_laplacian(const GridFunction& u, std::size_t i) {
  const Grid& g = u.grid();
  auto x = g.coords(i);
  double s = 2.0 * g.dimension() * u[i];
  for (int a = 0; a < g.dimension(); ++a) {
    for (int d : {-1, 1}) {
      auto y = x;
      y[static_cast<std::size_t>(a)] += d;
      s -= u.at(y);
    }
  }
  return s / (g.spacing() * g.spacing());
}

}  // namespace

TEST_CASE("cusp profiles") {
  CHECK_THROWS_AS(CuspProfile::power(0.5), InputError);
  CHECK_THROWS_AS(CuspProfile::exponential(0.0), InputError);
  CHECK_THROWS_AS(CuspProfile::tabulated({0.5, 0.25}, {0.1, 0.2}), InputError);
  CHECK_THROWS_AS(CuspProfile::tabulated({0.25, 0.5}, {0.2, 0.1}), InputError);
  const auto p = CuspProfile::power(2.5);
  CHECK(p(0.3) == doctest::Approx(std::pow(0.3, 2.5)));
  const auto e = CuspProfile::exponential(1.0);
  CHECK(e(0.2) == doctest::Approx(std::exp(-5.0)));
  const auto t = p.tabulate(1e-6, 100);
  for (double tau : {1e-5, 3e-3, 0.17, 0.9}) CHECK(t(tau) == doctest::Approx(p(tau)).epsilon(1e-9));
  CHECK(CuspProfile::from_json(e.to_json())(0.3) == doctest::Approx(e(0.3)));
}

TEST_CASE("cusp criterion closed forms") {
  struct Case {
    CuspProfile f;
    int m, n;
    Classification expect;
    double integral;
  };
  // Antiderivatives: int_0^1 tau^{p+2m-n} = 1/(p+2m-n+1); int_0^{1/2} tau^{a-1} = 2^{-a}/a.
  const Case cases[] = {
      {CuspProfile::power(1), 1, 4, Classification::regular, inf},
      {CuspProfile::power(2), 1, 4, Classification::irregular, 1.0},
      {CuspProfile::power(2), 1, 3, Classification::regular, inf},
      {CuspProfile::exponential(1), 1, 3, Classification::irregular, 0.5},
      {CuspProfile::power(2), 2, 6, Classification::irregular, 1.0},
      {CuspProfile::power(3), 2, 5, Classification::regular, inf},
      {CuspProfile::power(4), 1, 5, Classification::irregular, 0.5},
      {CuspProfile::exponential(2), 2, 5, Classification::irregular, 0.125},
  };
  for (const auto& c : cases) {
    CAPTURE(c.f.name());
    CAPTURE(c.m);
    CAPTURE(c.n);
    const auto v = cusp_criterion(c.f, c.m, c.n);
    CHECK(v.method == "closed_form");
    CHECK(v.criterion == (c.n == 2 * c.m + 1 ? "log" : "power"));
    CHECK(v.classification == c.expect);
    if (std::isinf(c.integral))
      CHECK(std::isinf(v.integral));
    else
      CHECK(v.integral == doctest::Approx(c.integral).epsilon(1e-10));

    const auto q = cusp_criterion_quadrature(c.f, c.m, c.n);
    CHECK(q.method == "quadrature");
    CHECK(q.classification == c.expect);
    if (!std::isinf(c.integral)) CHECK(q.integral == doctest::Approx(c.integral).epsilon(1e-6));
  }
}

TEST_CASE("exponential cusp integral against a direct quadrature") {
  // n = 2m+1: int_0^{1/2} tau^{a-1} d tau, by Simpson's rule in u = -log tau on [log 2, 80].
  const double a = 0.7;
  const int steps = 20000;
  const double lo = std::numbers::ln2, hi = 80.0, du = (hi - lo) / steps;
  double s = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * std::exp(-a * (lo + i * du));
  }
  s *= du / 3.0;
  const auto v = cusp_criterion(CuspProfile::exponential(a), 1, 3);
  CHECK(v.integral == doctest::Approx(s).epsilon(1e-9));
}

TEST_CASE("tabulated profiles agree with the closed form") {
  const std::pair<int, int> regimes[] = {{1, 3}, {1, 4}, {2, 5}, {2, 6}};
  for (const auto& f : {CuspProfile::power(1), CuspProfile::power(2), CuspProfile::power(3),
                        CuspProfile::exponential(1)}) {
    const double tau_min = f.kind() == CuspProfile::Kind::exponential ? 1.0 / 600 : 1e-12;
    const auto t = f.tabulate(tau_min, 200);
    for (const auto& [m, n] : regimes) {
      CAPTURE(f.name());
      CAPTURE(n);
      const auto a = cusp_criterion(f, m, n);
      const auto b = cusp_criterion(t, m, n);
      CHECK(b.method == "quadrature");
      CHECK(b.classification != Classification::inconclusive);
      CHECK(b.classification == a.classification);
    }
  }
}

TEST_CASE("cusp criterion regime") {
  CHECK_THROWS_AS(cusp_criterion(CuspProfile::power(2), 1, 2), UnsupportedRegime);
  CHECK_THROWS_AS(cusp_criterion(CuspProfile::power(2), 2, 4), UnsupportedRegime);
}

TEST_CASE("wiener classification") {
  SeriesOptions o;
  o.j_max = 10;
  SUBCASE("cone is regular") {
    const auto s = annulus_series(ConeComplement(3, std::numbers::pi / 4), 1, 3, o);
    const auto v = wiener_classify(s);
    CHECK(v.classification == Classification::regular);
    CHECK(v.regime == "n>2m");
    CHECK(v.usable == 10);
    for (double lambda : {0.25, 4.0}) CHECK(wiener_classify(s.scaled(lambda)).classification == v.classification);
  }
  SUBCASE("empty complement is irregular") {
    const auto v = wiener_classify(annulus_series(EmptyComplement(3), 1, 3, o));
    CHECK(v.classification == Classification::irregular);
  }
  SUBCASE("ray in the critical dimension is regular") {
    const auto s = annulus_series(RayComplement(2), 1, 2, o);
    const auto v = wiener_classify(s);
    CHECK(v.regime == "n=2m");
    CHECK(v.classification == Classification::regular);
    for (double lambda : {0.25, 4.0}) CHECK(wiener_classify(s.scaled(lambda)).classification == v.classification);
  }
  SUBCASE("too few scales are inconclusive") {
    o.j_max = 4;
    const auto v = wiener_classify(annulus_series(ConeComplement(3, std::numbers::pi / 4), 1, 3, o));
    CHECK(v.classification == Classification::inconclusive);
  }
  SUBCASE("rasterized cusps never contradict the cusp criterion") {
    for (const auto& f : {CuspProfile::power(2), CuspProfile::exponential(1)}) {
      const auto c = cusp_criterion(f, 1, 3);
      const auto w = wiener_classify(annulus_series(CuspComplement(3, f), 1, 3, o));
      CAPTURE(f.name());
      if (w.classification != Classification::inconclusive) CHECK(w.classification == c.classification);
    }
  }
  SUBCASE("n < 2m is unsupported") {
    AnnulusCapacitySeries s;
    s.n = 3;
    s.m = 2;
    CHECK_THROWS_AS(wiener_classify(s), UnsupportedRegime);
  }
}

TEST_CASE("dirichlet solve") {
  const Grid g(3, 0.1, 12);
  const ConeComplement cone(3, std::numbers::pi / 4);
  const Mask omega = domain_mask(g, cone, 1.2);
  const auto lap = EllipticOperator::laplacian(3);
  CGOptions tight;
  tight.rel_tol = 1e-13;
  const GridFunction f1 = bump(g, {0.0, 0.0, 0.5}, 0.3);
  const GridFunction f2 = bump(g, {0.3, -0.2, 0.4}, 0.25);

  SUBCASE("zero source gives zero") {
    const auto s = dirichlet_solve(lap, omega, GridFunction(g));
    CHECK(s.u.max_abs() == 0.0);
  }
  SUBCASE("linear in f") {
    GridFunction f(g);
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = f1[i] + 2.0 * f2[i];
    const auto a = dirichlet_solve(lap, omega, f1, tight);
    const auto b = dirichlet_solve(lap, omega, f2, tight);
    const auto c = dirichlet_solve(lap, omega, f, tight);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(c.u[i] - a.u[i] - 2.0 * b.u[i]));
    CHECK(err <= 1e-9 * c.u.max_abs());
  }
  SUBCASE("laplacian solution satisfies the 7-point scheme") {
    const auto s = dirichlet_solve(lap, omega, f1, tight);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (omega.test(i))
        err = std::max(err, std::abs(minus_laplacian(s.u, i) - f1[i]));
      else
        CHECK(s.u[i] == 0.0);
    }
    CHECK(err <= 1e-8);
  }
  SUBCASE("biharmonic galerkin orthogonality") {
    const Grid gb(3, 0.2, 10);
    const Mask ob = domain_mask(gb, cone, 2.0);
    const auto bih = EllipticOperator::polyharmonic(2, 3);
    const GridFunction f = bump(gb, {0.0, 0.0, 0.8}, 0.35);
    const auto s = dirichlet_solve(bih, ob, f, tight);
    REQUIRE(s.cg.converged);
    const auto form = assemble(EnergyKind::operator_form, bih, gb);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    const double scale = std::sqrt(form.energy(s.u));
    for (int k = 0; k < 100; ++k) {
      GridFunction v(gb);
      for (std::size_t i = 0; i < gb.size(); ++i)
        if (ob.test(i)) v[i] = nd(rng);
      double rhs = 0.0;
      for (std::size_t i = 0; i < gb.size(); ++i) rhs += f[i] * v[i];
      rhs *= gb.cell_volume();
      CHECK(std::abs(form.bilinear(s.u, v) - rhs) <= 1e-6 * scale * std::sqrt(form.energy(v)));
    }
  }
  SUBCASE("support touching the boundary is rejected") {
    GridFunction f(g);
    std::vector<int> x{0, 0, -1};  // on the cone axis, next to the vertex
    f[g.index(x)] = 1.0;
    CHECK_THROWS_AS(dirichlet_solve(lap, omega, f), InputError);
    CHECK_THROWS_AS(dirichlet_solve(EllipticOperator::laplacian(2), omega, f1), InputError);
  }
}

TEST_CASE("point mass reproduces the green function of the ball") {
  // u = 1/(4 pi r) - 1/(4 pi L) for a unit point mass at the centre of the ball of radius L.
  const double h = 0.1, L = 4.0;
  const Grid g(3, h, 40);
  const Mask omega = domain_mask(g, EmptyComplement(3), L);
  GridFunction f(g);
  f[g.origin()] = 1.0 / g.cell_volume();
  const auto s = dirichlet_solve(EllipticOperator::laplacian(3), omega, f);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = g.radius(i);
    if (r < 4 * h || r > 0.75 * L) continue;
    const double G = (1.0 / r - 1.0 / L) / (4 * std::numbers::pi);
    worst = std::max(worst, std::abs(s.u[i] - G) / G);
  }
  CHECK(worst < 0.10);
}

TEST_CASE("regularity probe trends") {
  const auto lap = EllipticOperator::laplacian(3);
  const auto f = shell_source();
  SUBCASE("cone vanishes") {
    const auto p = regularity_probe(lap, ConeComplement(3, std::numbers::pi / 4), f);
    CHECK(p.trend == Trend::vanishing);
    for (std::size_t k = 0; k + 1 < p.finest.size(); ++k) CHECK(p.finest[k + 1] < 0.9 * p.finest[k]);
  }
  SUBCASE("exponential cusp does not vanish") {
    const auto p = regularity_probe(lap, CuspComplement(3, CuspProfile::exponential(1)), f);
    CHECK(p.trend == Trend::non_vanishing);
  }
  SUBCASE("empty complement does not vanish") {
    const auto p = regularity_probe(lap, EmptyComplement(3), f);
    CHECK(p.trend == Trend::non_vanishing);
    for (const auto& row : p.sup)
      for (double v : row)
        if (!std::isnan(v)) CHECK(v > 0.0);
  }
  SUBCASE("preconditions") {
    ProbeOptions o;
    o.spacings = {0.125, 0.0625};
    CHECK_THROWS_AS(regularity_probe(lap, EmptyComplement(3), f, o), InputError);
    CHECK_THROWS_AS(regularity_probe(lap, EmptyComplement(2), f), InputError);
    CHECK_THROWS_AS(shell_source(0.5, 0.0), InputError);
  }
}

TEST_CASE("decay estimate") {
  const auto lap = EllipticOperator::laplacian(3);
  const Grid g(3, 1.0 / 32, 32);
  SUBCASE("cone") {
    const auto r = decay_check(lap, ConeComplement(3, std::numbers::pi / 4), g);
    REQUIRE(r.fitted);
    CHECK(r.status == "fitted");
    CHECK(r.M_R > 0.0);
    CHECK(r.c2 > 0.0);
    CHECK(std::isfinite(r.c1));
    REQUIRE(r.rows.size() == 3u);
    for (std::size_t k = 0; k + 1 < r.rows.size(); ++k) {
      CHECK(r.rows[k].energy_term >= r.rows[k + 1].energy_term);
      CHECK(r.rows[k].sup_term >= r.rows[k + 1].sup_term);
      CHECK(r.rows[k].cap_integral < r.rows[k + 1].cap_integral);
    }
    // The cone series is constant in the level, so the capacity integral is linear in log(1/rho).
    const double step = r.rows[0].cap_integral;
    CHECK(r.rows[1].cap_integral - r.rows[0].cap_integral == doctest::Approx(step).epsilon(0.15));
    CHECK(r.rows[2].cap_integral - r.rows[1].cap_integral == doctest::Approx(step).epsilon(0.15));
    for (const auto& row : r.rows)
      CHECK(row.sup_term + row.energy_term <= r.c1 * r.M_R * std::exp(-r.c2 * row.cap_integral) * (1 + 1e-12));
  }
  SUBCASE("empty complement has no decay to fit") {
    const auto r = decay_check(lap, EmptyComplement(3), g);
    CHECK_FALSE(r.fitted);
    for (const auto& row : r.rows) CHECK(row.cap_integral == 0.0);
    CHECK(std::isfinite(r.c1));
    CHECK(r.c1 > 0.0);
  }
  SUBCASE("preconditions") {
    DecayOptions o;
    o.radii = {0.1};
    CHECK_THROWS_AS(decay_check(lap, EmptyComplement(3), g, o), InputError);
    o.radii = {0.5};
    CHECK_THROWS_AS(decay_check(lap, EmptyComplement(3), g, o), InputError);
    o = {};
    o.R = 0.5;
    CHECK_THROWS_AS(decay_check(lap, EmptyComplement(3), g, o), InputError);
    CHECK_THROWS_AS(decay_check(lap, EmptyComplement(3), Grid(3, 1.0 / 32, 16)), InputError);
    CHECK_THROWS_AS(decay_check(EllipticOperator::polyharmonic(2, 4), EmptyComplement(4), Grid(4, 0.25, 4)),
                    UnsupportedRegime);
  }
}
