#include "pplab/errors.hpp"
#include "pplab/kernels.hpp"

namespace pplab::kernels::serial {

void apply(const Layout& layout, const Region& region, const Stencil& s, const double* in, double* out) {
  if (!layout.fits(region, s)) throw ConfigError("stencil exceeds the padded box");
  const std::size_t n = region.lo.size();
  std::vector<int> c(region.lo);
  std::vector<int> nb(n);
  while (true) {
    double acc = 0.0;
    for (std::size_t k = 0; k < s.offsets.size(); ++k) {
      for (std::size_t i = 0; i < n; ++i) nb[i] = c[i] + s.offsets[k][i];
      acc += s.weights[k] * in[layout.index(nb)];
    }
    out[layout.index(c)] = acc;
    // Odometer increment, last axis fastest.
    std::size_t i = n;
    while (i-- > 0) {
      if (++c[i] <= region.hi[i]) break;
      c[i] = region.lo[i];
    }
    if (i == static_cast<std::size_t>(-1)) break;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace pplab::kernels::serial
