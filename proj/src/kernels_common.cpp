#include <algorithm>
#include <map>

#include "pplab/errors.hpp"
#include "pplab/kernels.hpp"

namespace pplab {

void Stencil::add(std::vector<int> offset, double weight) {
  if (static_cast<int>(offset.size()) != dimension) throw InputError("Stencil: offset dimension mismatch");
  for (int v : offset) radius = std::max(radius, std::abs(v));
  offsets.push_back(std::move(offset));
  weights.push_back(weight);
}

void Stencil::canonicalize() {
  std::map<std::vector<int>, double> acc;
  for (std::size_t k = 0; k < offsets.size(); ++k) acc[offsets[k]] += weights[k];
  offsets.clear();
  weights.clear();
  radius = 0;
  for (auto& [o, w] : acc) {
    if (w == 0.0) continue;
    add(o, w);
  }
}

Region Region::box(const Grid& grid, int grow) {
  Region r;
  r.lo.assign(static_cast<std::size_t>(grid.dimension()), -grid.extent() - grow);
  r.hi.assign(static_cast<std::size_t>(grid.dimension()), grid.extent() + grow);
  return r;
}

std::size_t Region::rows() const {
  std::size_t r = 1;
  for (std::size_t i = 0; i + 1 < lo.size(); ++i) r *= static_cast<std::size_t>(hi[i] - lo[i] + 1);
  return r;
}

Layout::Layout(Grid grid, int pad) : grid_(std::move(grid)), pad_(pad) {
  if (pad_ < 0) throw InputError("Layout: negative padding");
  const int n = grid_.dimension();
  side_ = grid_.side() + 2 * pad_;
  strides_.assign(static_cast<std::size_t>(n), 1);
  for (int i = n - 2; i >= 0; --i) strides_[static_cast<std::size_t>(i)] = strides_[static_cast<std::size_t>(i + 1)] * side_;
  size_ = static_cast<std::size_t>(strides_[0]) * static_cast<std::size_t>(side_);
  node_map_.resize(grid_.size());
  std::vector<int> c(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    grid_.coords(i, c);
    node_map_[i] = index(c);
  }
}

std::ptrdiff_t Layout::offset(std::span<const int> d) const {
  std::ptrdiff_t o = 0;
  for (std::size_t i = 0; i < d.size(); ++i) o += d[i] * strides_[i];
  return o;
}

std::size_t Layout::index(std::span<const int> c) const {
  std::ptrdiff_t o = 0;
  const int shift = grid_.extent() + pad_;
  for (std::size_t i = 0; i < c.size(); ++i) o += (c[i] + shift) * strides_[i];
  return static_cast<std::size_t>(o);
}

std::vector<double> Layout::to_padded(std::span<const double> box) const {
  std::vector<double> out(size_, 0.0);
  for (std::size_t i = 0; i < node_map_.size(); ++i) out[node_map_[i]] = box[i];
  return out;
}

void Layout::to_box(std::span<const double> padded, std::span<double> box) const {
  for (std::size_t i = 0; i < node_map_.size(); ++i) box[i] = padded[node_map_[i]];
}

std::vector<std::uint8_t> Layout::to_padded(const Mask& mask) const {
  std::vector<std::uint8_t> out(size_, 0);
  for (std::size_t i = 0; i < node_map_.size(); ++i) out[node_map_[i]] = mask.test(i) ? 1 : 0;
  return out;
}

std::size_t Layout::row_start(const Region& region, std::size_t r) const {
  const std::size_t n = region.lo.size();
  std::vector<int> c(n);
  c[n - 1] = region.lo[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    const auto len = static_cast<std::size_t>(region.hi[i] - region.lo[i] + 1);
    c[i] = region.lo[i] + static_cast<int>(r % len);
    r /= len;
  }
  return index(c);
}

bool Layout::fits(const Region& region, const Stencil& s) const {
  const int lim = grid_.extent() + pad_;
  for (std::size_t i = 0; i < region.lo.size(); ++i) {
    int lo = 0, hi = 0;
    for (const auto& o : s.offsets) {
      lo = std::min(lo, o[i]);
      hi = std::max(hi, o[i]);
    }
    if (region.lo[i] + lo < -lim || region.hi[i] + hi > lim) return false;
  }
  return true;
}

}  // namespace pplab
