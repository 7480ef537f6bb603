#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pplab/capacity.hpp"
#include "pplab/domains.hpp"
#include "pplab/errors.hpp"

using namespace pplab;

namespace {

CapacityOptions plain() {
  CapacityOptions o;
  o.extrapolate_box = false;
  o.estimate_refinement = false;
  return o;
}

Mask random_mask(const Grid& g, std::uint64_t seed, int count, int radius) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> c(-radius, radius);
  Mask k(g);
  std::vector<int> x(static_cast<std::size_t>(g.dimension()));
  for (int i = 0; i < count; ++i) {
    for (auto& v : x) v = c(rng);
    k.set(g.index(x));
  }
  return k;
}

}  // namespace

TEST_CASE("empty set has zero capacity") {
  Grid g(3, 0.25, 8);
  CHECK(cap_m(Mask(g), 1).value == 0.0);
  CHECK(bessel_capacity(Mask(g), 1).value == 0.0);
  CHECK(condenser_capacity(Mask(g), 1, CapacityKind::homogeneous) == 0.0);
}

TEST_CASE("newtonian capacity of the unit ball") {
  Grid g(3, 0.1, 40);
  auto v = cap_m(Mask::ball(g, 1.0), 1);
  const double ref = 4 * std::numbers::pi;
  CHECK(v.converged);
  CHECK(v.extrapolated);
  CHECK(std::abs(v.value - ref) <= 0.1 * ref);
  CHECK(v.raw > v.value);  // the box makes the condenser capacity larger
  CHECK(v.coarse > 0.0);
  CHECK(v.refinement_estimate == doctest::Approx(std::abs(v.value - v.coarse)));
}

TEST_CASE("refinement changes the value by less than the reported estimate") {
  // A node-aligned cube, so every spacing samples the same set.
  auto cube = [](const Grid& g) {
    return Mask::from_predicate(g, [](std::span<const double> x) {
      return std::abs(x[0]) <= 0.8 + 1e-9 && std::abs(x[1]) <= 0.8 + 1e-9 && std::abs(x[2]) <= 0.8 + 1e-9;
    });
  };
  auto a = cap_m(cube(Grid(3, 0.2, 20)), 1);
  auto b = cap_m(cube(Grid(3, 0.1, 40)), 1);
  CHECK(std::abs(b.value - a.value) < a.refinement_estimate);
  CHECK(b.value < a.value);
}

TEST_CASE("dilation homogeneity") {
  SUBCASE("same grid, n = 3") {
    Grid g(3, 0.1, 40);
    auto o = CapacityOptions{};
    o.estimate_refinement = false;
    const double big = cap_m(Mask::ball(g, 1.0), 1, o).value;
    const double small = cap_m(Mask::ball(g, 0.5), 1, o).value;
    CHECK(big / small == doctest::Approx(2.0).epsilon(0.1));
  }
  SUBCASE("matched grids, n = 5, m = 2") {
    auto o = plain();
    const double a = cap_m(Mask::ball(Grid(5, 0.5, 6), 1.0), 2, o).value;
    const double b = cap_m(Mask::ball(Grid(5, 1.0, 6), 2.0), 2, o).value;
    CHECK(b / a == doctest::Approx(2.0).epsilon(1e-9));
  }
}

TEST_CASE("monotone under inclusion and subadditive") {
  Grid g(3, 0.25, 8);
  for (std::uint64_t s = 1; s <= 4; ++s) {
    auto k1 = random_mask(g, s, 6, 3);
    auto k2 = random_mask(g, s + 100, 6, 3);
    auto u = k1 | k2;
    for (auto kind : {CapacityKind::homogeneous, CapacityKind::inhomogeneous}) {
      const double c1 = condenser_capacity(k1, 1, kind);
      const double c2 = condenser_capacity(k2, 1, kind);
      const double cu = condenser_capacity(u, 1, kind);
      CHECK(c1 <= cu + 1e-10);
      CHECK(c2 <= cu + 1e-10);
      CHECK(cu <= c1 + c2 + 1e-8);
    }
    CHECK(cap_m(k1, 1, plain()).value <= cap_m(u, 1, plain()).value + 1e-10);
    CHECK(bessel_capacity(k1, 1, plain()).value <= bessel_capacity(u, 1, plain()).value + 1e-10);
  }
}

TEST_CASE("condenser capacity of a small disk in the plane") {
  // Exterior of B_r inside B_1: 2 pi / log(1/r).
  const double r = 0.1;
  Grid g(2, 0.01, 100);
  auto disk = Mask::ball(g, r);
  auto v = bessel_capacity(disk, 1);
  const double ref = 2 * std::numbers::pi / std::log(1 / r);
  CHECK(v.value == doctest::Approx(ref).epsilon(0.25));
  CHECK_THROWS_AS(cap_m(disk, 1), UnsupportedRegime);
}

TEST_CASE("annulus series") {
  SeriesOptions o;
  o.j_min = 1;
  o.j_max = 6;
  SUBCASE("empty complement") {
    auto s = annulus_series(EmptyComplement(3), 1, 3, o);
    REQUIRE(s.terms.size() == 6u);
    for (const auto& t : s.terms) CHECK(t.term == 0.0);
  }
  SUBCASE("ray: capacity halves per level on per-scale grids") {
    auto s = annulus_series(RayComplement(3), 1, 3, o);
    for (std::size_t j = 0; j + 1 < s.terms.size(); ++j) {
      CHECK(s.terms[j].rho > s.terms[j + 1].rho);
      CHECK(s.terms[j].capacity / s.terms[j + 1].capacity == doctest::Approx(2.0).epsilon(0.15));
    }
    CHECK(s.distinct_solves == 1);
  }
  SUBCASE("cone: weighted terms are constant") {
    auto s = annulus_series(ConeComplement(3, std::numbers::pi / 4), 1, 3, o);
    for (const auto& t : s.terms) {
      CHECK(t.capacity >= 0.0);
      CHECK(t.weight == doctest::Approx(1.0 / t.rho));
      CHECK(t.term == doctest::Approx(s.terms.front().term).epsilon(0.15));
    }
    CHECK(s.terms.back().partial_sum == doctest::Approx(6 * s.terms.front().term).epsilon(0.15));
  }
  SUBCASE("rescaling multiplies every term") {
    auto s = annulus_series(RayComplement(3), 1, 3, o);
    auto t = s.scaled(0.25);
    for (std::size_t j = 0; j < s.terms.size(); ++j) CHECK(t.terms[j].term == doctest::Approx(0.25 * s.terms[j].term));
  }
}

TEST_CASE("log coefficient of the planar laplacian") {
  CHECK(log_coefficient(EllipticOperator::laplacian(2)) == doctest::Approx(1 / (2 * std::numbers::pi)).epsilon(1e-6));
  // Biharmonic in R^4: 1 / (8 pi^2).
  CHECK(log_coefficient(EllipticOperator::polyharmonic(2, 4)) ==
        doctest::Approx(1 / (8 * std::numbers::pi * std::numbers::pi)).epsilon(1e-6));
}

TEST_CASE("capacity preconditions") {
  Grid g(3, 0.25, 4);
  auto full = Mask::ball(g, 10.0);
  CHECK_THROWS_AS(cap_m(full, 1), InputError);
  CHECK_THROWS_AS(cap_m(Mask::ball(Grid(4, 0.25, 8), 1.0), 2), UnsupportedRegime);
}
