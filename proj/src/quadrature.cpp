#include "pplab/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <queue>

#include "pplab/errors.hpp"

namespace pplab::quad {

Rule gauss_legendre(int n) {
  if (n < 1) throw InputError("gauss_legendre: n must be positive");
  Rule r;
  r.nodes.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p1 = x, p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[static_cast<std::size_t>(i)] = -x;
    r.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    r.weights[static_cast<std::size_t>(i)] = w;
    r.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  return r;
}

namespace {

constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double rk = fc * kWgk[7];
  double rg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double f1 = f(c - dx);
    const double f2 = f(c + dx);
    rk += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) rg += kWg[j / 2] * (f1 + f2);
  }
  return {a, b, rk * h, std::abs((rk - rg) * h)};
}

}  // namespace

AdaptiveResult adaptive_gk15(const std::function<double(double)>& f, double a, double b, double rel_tol,
                             double abs_tol, int max_intervals) {
  AdaptiveResult res;
  if (a == b) {
    res.converged = true;
    return res;
  }
  std::priority_queue<Segment> heap;
  auto s0 = gk15(f, a, b);
  res.evaluations = 15;
  heap.push(s0);
  double value = s0.value;
  double error = s0.error;
  while (static_cast<int>(heap.size()) < max_intervals) {
    if (error <= std::max(abs_tol, rel_tol * std::abs(value))) {
      res.converged = true;
      break;
    }
    auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    auto left = gk15(f, worst.a, mid);
    auto right = gk15(f, mid, worst.b);
    res.evaluations += 30;
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum from the leaves to avoid drift from the running updates.
  value = 0.0;
  error = 0.0;
  while (!heap.empty()) {
    value += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  res.value = value;
  res.error = error;
  if (!res.converged) res.converged = error <= std::max(abs_tol, rel_tol * std::abs(value));
  return res;
}

}  // namespace pplab::quad
