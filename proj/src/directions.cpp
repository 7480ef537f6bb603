#include "pplab/directions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

#include "pplab/errors.hpp"

namespace pplab {

namespace {

// Generalized golden ratio: the positive root of x^{d+1} = x + 1.
double harmonious(int d) {
  double x = 2.0;
  for (int it = 0; it < 64; ++it) x = std::pow(1.0 + x, 1.0 / (d + 1));
  return x;
}

std::vector<std::vector<double>> kronecker_gaussian(int n, int count, int skip) {
  const double g = harmonious(n);
  std::vector<double> alpha(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) alpha[static_cast<std::size_t>(i)] = std::fmod(std::pow(1.0 / g, i + 1), 1.0);

  std::vector<std::vector<double>> out;
  out.reserve(static_cast<std::size_t>(count));
  for (long k = skip; static_cast<int>(out.size()) < count; ++k) {
    std::vector<double> v(static_cast<std::size_t>(n));
    double norm2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double u = std::fmod(0.5 + static_cast<double>(k) * alpha[static_cast<std::size_t>(i)], 1.0);
      u = std::clamp(u, 1e-12, 1.0 - 1e-12);
      const double z = std::numbers::sqrt2 * boost::math::erf_inv(2.0 * u - 1.0);
      v[static_cast<std::size_t>(i)] = z;
      norm2 += z * z;
    }
    if (norm2 < 1e-20) continue;
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& c : v) c *= inv;
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace

std::vector<std::vector<double>> unit_directions(int n, int count, bool include_axes) {
  if (n < 1) throw InputError("unit_directions: dimension must be positive");
  if (count < 1) throw InputError("unit_directions: count must be positive");
  std::vector<std::vector<double>> out;
  if (include_axes) {
    count = std::max(count, 2 * n);
    for (int i = 0; i < n; ++i) {
      for (double s : {1.0, -1.0}) {
        std::vector<double> e(static_cast<std::size_t>(n), 0.0);
        e[static_cast<std::size_t>(i)] = s;
        out.push_back(std::move(e));
      }
    }
  }
  auto rest = kronecker_gaussian(n, count - static_cast<int>(out.size()), 1);
  for (auto& v : rest) out.push_back(std::move(v));
  return out;
}

std::vector<std::vector<double>> sphere_nodes(int d, int count) {
  if (d < 2) throw InputError("sphere_nodes: need d >= 2");
  if (count < 2) throw InputError("sphere_nodes: need at least two nodes");
  std::vector<std::vector<double>> out;
  if (d == 2) {
    for (int k = 0; k < count; ++k) {
      const double phi = 2.0 * std::numbers::pi * (k + 0.5) / count;
      out.push_back({std::cos(phi), std::sin(phi)});
    }
    return out;
  }
  const int half = (count + 1) / 2;
  auto base = kronecker_gaussian(d, half, 1);
  for (auto& v : base) {
    std::vector<double> w(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) w[i] = -v[i];
    out.push_back(std::move(v));
    out.push_back(std::move(w));
  }
  return out;
}

double sphere_area(int d) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

}  // namespace pplab
