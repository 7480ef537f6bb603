#include <doctest.h>

#include <omp.h>

#include <random>

#include "pplab/energy.hpp"
#include "pplab/errors.hpp"
#include "pplab/kernels.hpp"

using namespace pplab;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

Stencil random_stencil(int n, int radius, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> off(-radius, radius);
  std::uniform_real_distribution<double> w(-2.0, 2.0);
  Stencil s;
  s.dimension = n;
  for (int k = 0; k < 15; ++k) {
    std::vector<int> o(static_cast<std::size_t>(n));
    for (auto& v : o) v = off(rng);
    s.add(o, w(rng));
  }
  s.canonicalize();
  return s;
}

void compare_apply(const Grid& g, const Stencil& s, int grow) {
  Layout layout(g, s.radius + grow);
  auto region = Region::box(g, grow);
  auto in = random_vector(layout.size(), 5);
  std::vector<double> a(layout.size(), 0.0), b(layout.size(), 0.0);
  kernels::serial::apply(layout, region, s, in.data(), a.data());
  kernels::omp::apply(layout, region, s, in.data(), b.data());
  double scale = 0.0;
  for (double w : s.weights) scale += std::abs(w);
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
  CHECK(diff <= 1e-14 * scale);
}

}  // namespace

TEST_CASE("stencil canonicalization merges and sorts") {
  Stencil s;
  s.dimension = 2;
  s.add({1, 0}, 1.0);
  s.add({0, 1}, 2.0);
  s.add({1, 0}, -1.0);
  s.add({-1, 0}, 0.5);
  s.canonicalize();
  REQUIRE(s.offsets.size() == 2);
  CHECK(s.offsets[0] == std::vector<int>{-1, 0});
  CHECK(s.radius == 1);
  CHECK_THROWS_AS(s.add({1}, 1.0), InputError);
}

TEST_CASE("serial and OpenMP stencil application agree") {
  compare_apply(Grid(3, 0.1, 6), random_stencil(3, 2, 1), 0);
  compare_apply(Grid(2, 0.1, 9), random_stencil(2, 3, 2), 1);
  compare_apply(Grid(5, 0.1, 2), random_stencil(5, 2, 3), 0);
  compare_apply(Grid(1, 0.1, 40), random_stencil(1, 4, 4), 2);
  auto k = energy_kernel(EllipticOperator::polyharmonic(2, 3).expanded_terms(), 3, 0.2);
  compare_apply(Grid(3, 0.2, 7), k, 0);
}

TEST_CASE("stencils that leave the padded storage are rejected") {
  Grid g(2, 0.1, 4);
  auto s = random_stencil(2, 2, 9);
  Layout layout(g, 1);
  std::vector<double> in(layout.size()), out(layout.size());
  auto region = Region::box(g);
  CHECK_FALSE(layout.fits(region, s));
  CHECK_THROWS_AS(kernels::serial::apply(layout, region, s, in.data(), out.data()), ConfigError);
  CHECK_THROWS_AS(kernels::omp::apply(layout, region, s, in.data(), out.data()), ConfigError);
}

TEST_CASE("reductions agree with the serial reference and ignore thread count") {
  auto a = random_vector(300001, 1);
  auto b = random_vector(300001, 2);
  const double ref = kernels::serial::dot(a, b);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const double one = kernels::omp::dot(a, b);
  omp_set_num_threads(4);
  const double four = kernels::omp::dot(a, b);
  omp_set_num_threads(saved);
  CHECK(one == four);
  CHECK(std::abs(one - ref) <= 1e-12 * 300001);

  auto y1 = b, y2 = b;
  kernels::serial::axpy(0.75, a, y1);
  kernels::omp::axpy(0.75, a, y2);
  CHECK(y1 == y2);

  std::vector<double> z(a.size());
  kernels::omp::multiply(a, b, z);
  for (std::size_t i = 0; i < z.size(); i += 1000) CHECK(z[i] == a[i] * b[i]);
  auto x = b;
  kernels::omp::xpby(a, 0.5, x);
  for (std::size_t i = 0; i < x.size(); i += 1000) CHECK(x[i] == a[i] + 0.5 * b[i]);
}

TEST_CASE("layout maps box nodes into padded storage") {
  Grid g(3, 0.5, 2);
  Layout layout(g, 2);
  CHECK(layout.side() == g.side() + 4);
  auto box = random_vector(g.size(), 3);
  auto padded = layout.to_padded(box);
  std::vector<double> back(g.size());
  layout.to_box(padded, back);
  CHECK(back == box);
  std::vector<int> c{-4, -4, -4};
  CHECK(layout.index(c) == 0u);
  CHECK(padded[layout.index_of_node(g.origin())] == box[g.origin()]);
}
