#include <doctest.h>

#include <cmath>
#include <numbers>

#include "pplab/energy.hpp"
#include "pplab/errors.hpp"
#include "pplab/positivity.hpp"

using namespace pplab;

namespace {

// Gauss-Legendre nodes on [-1, 1] by Newton iteration on P_n.
void gauss_legendre_rule(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(static_cast<std::size_t>(n));
  w.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[static_cast<std::size_t>(i)] = z;
    w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

// u(x) = |x|^{s-k} P_k(x) in R^3 with P_k a zonal harmonic polynomial.
double harmonic_polynomial(int k, const double* x) {
  switch (k) {
    case 0: return 1.0;
    case 1: return x[2];
    case 2: return 2 * x[2] * x[2] - x[0] * x[0] - x[1] * x[1];
    default: return x[2] * (2 * x[2] * x[2] - 3 * x[0] * x[0] - 3 * x[1] * x[1]);
  }
}

double homogeneous_function(int k, double s, const double* x) {
  const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
  return std::pow(r, s - k) * harmonic_polynomial(k, x);
}

// j-th derivative tensor by central differences, flattened.
std::vector<double> derivative_tensor(int j, int k, double s, const double* x) {
  const double d = 1e-3;
  std::vector<double> out;
  if (j == 1) {
    for (int i = 0; i < 3; ++i) {
      double a[3] = {x[0], x[1], x[2]}, b[3] = {x[0], x[1], x[2]};
      a[i] += d;
      b[i] -= d;
      out.push_back((homogeneous_function(k, s, a) - homogeneous_function(k, s, b)) / (2 * d));
    }
    return out;
  }
  for (int i = 0; i < 3; ++i)
    for (int l = 0; l < 3; ++l) {
      double v = 0.0;
      for (int si : {1, -1})
        for (int sl : {1, -1}) {
          double p[3] = {x[0], x[1], x[2]};
          p[i] += si * d;
          p[l] += sl * d;
          v += si * sl * homogeneous_function(k, s, p);
        }
      out.push_back(v / (4 * d * d));
    }
  return out;
}

// Sphere average of grad_j u_s . grad_j u_t over the average of Y_k^2.
double sphere_pairing(int j, int k, double s, double t) {
  std::vector<double> gx, gw;
  gauss_legendre_rule(24, gx, gw);
  const int nphi = 48;
  double num = 0.0, den = 0.0;
  for (std::size_t a = 0; a < gx.size(); ++a) {
    const double z = gx[a], rho = std::sqrt(1 - z * z);
    for (int b = 0; b < nphi; ++b) {
      const double phi = 2 * std::numbers::pi * b / nphi;
      const double x[3] = {rho * std::cos(phi), rho * std::sin(phi), z};
      auto du = derivative_tensor(j, k, s, x);
      auto dv = derivative_tensor(j, k, t, x);
      double dot = 0.0;
      for (std::size_t i = 0; i < du.size(); ++i) dot += du[i] * dv[i];
      const double y = harmonic_polynomial(k, x);
      num += gw[a] * dot;
      den += gw[a] * y * y;
    }
  }
  return num / den;
}

}  // namespace

TEST_CASE("comparison kernel against numerical derivative tensors") {
  for (int k = 0; k <= 3; ++k)
    for (auto [s, t] : {std::pair{-0.7, -0.7}, std::pair{0.4, -1.3}, std::pair{1.5, 2.2}}) {
      const double g1 = comparison_kernel(1, 3, k, s, t).real();
      const double g2 = comparison_kernel(2, 3, k, s, t).real();
      CHECK(g1 == doctest::Approx(s * t + k * (k + 1)).epsilon(1e-12));
      CHECK(g1 == doctest::Approx(sphere_pairing(1, k, s, t)).epsilon(1e-5));
      CHECK(g2 == doctest::Approx(sphere_pairing(2, k, s, t)).epsilon(1e-5));
    }
  // Radial channel, any n: |Hess r^s|^2 = s^2 ((s - 1)^2 + n - 1) on the sphere.
  for (int n : {4, 5, 8})
    for (double s : {-2.5, 0.3, 1.7}) {
      CHECK(comparison_kernel(2, n, 0, s, s).real() == doctest::Approx(s * s * ((s - 1) * (s - 1) + n - 1)).epsilon(1e-12));
    }
}

TEST_CASE("comparison coefficients") {
  // k = 0, n = 5, m = 2: H = tau^2 + (tau^4 + 5 tau^2).
  auto h = comparison_coefficients(2, 5, 0);
  REQUIRE(h.size() == 3u);
  CHECK(h[0] == doctest::Approx(0.0));
  CHECK(h[1] == doctest::Approx(6.0));
  CHECK(h[2] == doctest::Approx(1.0));
  // m = 1: H = tau^2 + k(k + n - 2).
  auto h1 = comparison_coefficients(1, 3, 2);
  CHECK(h1[0] == doctest::Approx(6.0));
  CHECK(h1[1] == doctest::Approx(1.0));
}

TEST_CASE("weighted symbol of the laplacian channel") {
  // m = 1: Re M_k(i tau) = tau^2 + k(k + n - 2), the comparison symbol itself.
  for (int k = 0; k <= 4; ++k)
    for (double tau : {0.0, 0.5, 2.0}) CHECK(weighted_symbol(1, 3, k, tau) == doctest::Approx(tau * tau + k * (k + 1)));
}

TEST_CASE("channel forms") {
  auto f = build_channel_form(2, 5, 1, 0.1, 120);
  CHECK((f.A - f.A.transpose()).norm() <= 1e-12 * f.A.norm());
  CHECK((f.B - f.B.transpose()).norm() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f.B);
  CHECK(es.eigenvalues().minCoeff() > 0.0);

  SUBCASE("finite differences approach the exact symbol") {
    auto g = std::vector<double>(120, 0.0);
    Eigen::VectorXd gv(120);
    for (int i = 0; i < 120; ++i) {
      const double t = (i - 59.5) * 0.1;
      g[static_cast<std::size_t>(i)] = gv[i] = std::exp(-t * t / 2.0);
    }
    const double fd = channel_weighted_value(f, gv);
    const double exact = continuum_weighted_value(2, 5, 1, 0.1, g);
    CHECK(fd == doctest::Approx(exact).epsilon(0.01));
  }
  SUBCASE("translation along the log-radial grid leaves the quotient unchanged") {
    auto q = [&](int shift) {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(120);
      for (int i = 0; i < 40; ++i) {
        const double t = (i - 19.5) / 20.0;
        g[30 + shift + i] = std::pow(1 - t * t, 3) * (1 + 0.3 * t);
      }
      return channel_weighted_value(f, g) / channel_comparison_value(f, g);
    };
    const double base = q(0);
    for (int s : {-20, 7, 30}) CHECK(std::abs(q(s) - base) <= 1e-8 * std::abs(base));
  }
  CHECK_THROWS_AS(build_channel_form(2, 4, 0, 0.1, 50), UnsupportedRegime);
  CHECK_THROWS_AS(build_channel_form(2, 5, -1, 0.1, 50), InputError);
  CHECK_THROWS_AS(build_channel_form(2, 5, 0, 0.1, 2), InputError);
}

TEST_CASE("channel verdicts") {
  SUBCASE("second order, n = 3") {
    auto v = channel_positivity(1, 3);
    CHECK(v.status == PositivityStatus::positive_at_resolution);
    CHECK(v.min_quotient > 0.0);
    CHECK(v.channels.size() >= 13u);
  }
  SUBCASE("biharmonic, n = 5") {
    auto v = channel_positivity(2, 5);
    CHECK(v.status == PositivityStatus::positive_at_resolution);
    for (const auto& c : v.channels) {
      CHECK(c.quotient > 0.0);
      CHECK(c.quotient_refined == doctest::Approx(c.quotient).epsilon(0.05));
    }
  }
  SUBCASE("biharmonic, n = 8 has a validated witness") {
    auto v = channel_positivity(2, 8);
    REQUIRE(v.status == PositivityStatus::violated);
    CHECK(v.witness_validated);
    CHECK(v.witness_value < 0.0);
    CHECK(v.witness_refined_value < 0.0);
    CHECK(v.witness_continuum_value < 0.0);
    // Independent re-evaluation of the witness on a fresh channel form.
    auto f = build_channel_form(2, 8, v.witness_channel, v.witness_dt, static_cast<int>(v.witness.size()));
    Eigen::Map<const Eigen::VectorXd> g(v.witness.data(), static_cast<Eigen::Index>(v.witness.size()));
    CHECK(channel_weighted_value(f, g) < 0.0);
    CHECK(channel_weighted_value(f, g) == doctest::Approx(v.witness_value).epsilon(1e-10));
    CHECK_FALSE(v.witness_csv().empty());
  }
  CHECK_THROWS_AS(channel_positivity(2, 4), UnsupportedRegime);
  ChannelOptions bad;
  bad.k_max = -1;
  CHECK_THROWS_AS(channel_positivity(1, 3, bad), InputError);
}

TEST_CASE("grid positivity") {
  auto op = EllipticOperator::laplacian(3);
  auto prof = SphereProfile::isotropic(1, 3);
  Grid g(3, 0.25, 6);
  GridPositivityOptions o;
  o.refine = false;
  SUBCASE("laplacian, n = 3") {
    auto v = grid_positivity(op, g, prof, o);
    CHECK(v.status == PositivityStatus::positive_at_resolution);
    CHECK(v.min_quotient > 0.0);
  }
  SUBCASE("sign-flipped weight is violated with a negative witness") {
    auto v = grid_positivity(op, g, prof.scaled(-1.0), o);
    REQUIRE(v.status == PositivityStatus::violated);
    CHECK(v.witness_validated);
    REQUIRE(v.grid_witness.has_value());
    auto flipped = prof.scaled(-1.0);
    auto form = assemble(EnergyKind::weighted, op, g, &flipped);
    CHECK(form.energy(*v.grid_witness) < 0.0);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (form.excluded().test(i)) CHECK((*v.grid_witness)[i] == 0.0);
  }
  SUBCASE("grid and channel routes agree for the biharmonic in n = 5") {
    auto bih = EllipticOperator::polyharmonic(2, 5);
    auto v = grid_positivity(bih, Grid(5, 0.25, 4), SphereProfile::isotropic(2, 5), o);
    CHECK(v.status == PositivityStatus::positive_at_resolution);
    CHECK(channel_positivity(2, 5).status == v.status);
  }
  CHECK_THROWS_AS(grid_positivity(EllipticOperator::polyharmonic(2, 6), Grid(6, 0.5, 4), SphereProfile::isotropic(2, 6), o),
                  UnsupportedRegime);
}
