#include <algorithm>

#include "pplab/errors.hpp"
#include "pplab/kernels.hpp"

namespace pplab::kernels::omp {

namespace {
constexpr std::size_t kChunk = 4096;
}

void apply(const Layout& layout, const Region& region, const Stencil& s, const double* in, double* out) {
  if (!layout.fits(region, s)) throw ConfigError("stencil exceeds the padded box");
  const std::size_t rows = region.rows();
  const auto len = static_cast<std::size_t>(region.row_length());
  const std::size_t nk = s.offsets.size();
  std::vector<std::ptrdiff_t> offs(nk);
  for (std::size_t k = 0; k < nk; ++k) offs[k] = layout.offset(s.offsets[k]);
  const double* w = s.weights.data();

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r) {
    double* o = out + layout.row_start(region, static_cast<std::size_t>(r));
    const double* base = in + (o - out);
    std::fill(o, o + len, 0.0);
    for (std::size_t k = 0; k < nk; ++k) {
      const double wk = w[k];
      const double* src = base + offs[k];
#pragma omp simd
      for (std::size_t i = 0; i < len; ++i) o[i] += wk * src[i];
    }
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(chunks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const std::size_t lo = static_cast<std::size_t>(c) * kChunk;
    const std::size_t hi = std::min(n, lo + kChunk);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += a[i] * b[i];
    partial[static_cast<std::size_t>(c)] = s;
  }
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for simd schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] += alpha * x[static_cast<std::size_t>(i)];
}

void xpby(std::span<const double> x, double beta, std::span<double> y) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for simd schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    y[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] + beta * y[static_cast<std::size_t>(i)];
}

void multiply(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(a.size());
#pragma omp parallel for simd schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(i)];
}

}  // namespace pplab::kernels::omp
