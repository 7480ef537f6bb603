#pragma once

#include <span>
#include <vector>

#include "pplab/grid.hpp"

namespace pplab {

/// Translation-invariant linear stencil: (S u)(x) = sum_k w_k u(x + o_k).
struct Stencil {
  int dimension = 0;
  int radius = 0;  ///< max |offset| component
  std::vector<std::vector<int>> offsets;
  std::vector<double> weights;

  void add(std::vector<int> offset, double weight);
  /// Merges duplicate offsets and drops exact zeros; entries sorted by offset.
  void canonicalize();
};

/// Inclusive node box [lo, hi] per axis, in grid coordinates (may reach into padding).
struct Region {
  std::vector<int> lo;
  std::vector<int> hi;
  static Region box(const Grid& grid, int grow = 0);
  std::size_t rows() const;
  int row_length() const { return hi.back() - lo.back() + 1; }
};

/// Grid storage with `pad` zero layers on every side; all solver vectors live here.
class Layout {
 public:
  Layout() = default;
  Layout(Grid grid, int pad);

  const Grid& grid() const { return grid_; }
  int pad() const { return pad_; }
  int side() const { return side_; }
  std::size_t size() const { return size_; }
  const std::vector<std::ptrdiff_t>& strides() const { return strides_; }

  std::ptrdiff_t offset(std::span<const int> d) const;
  /// Padded index of grid coordinates c (which may lie in the padding).
  std::size_t index(std::span<const int> c) const;
  /// Padded index of box node with linear grid index i.
  std::size_t index_of_node(std::size_t i) const { return node_map_[i]; }
  const std::vector<std::size_t>& node_map() const { return node_map_; }

  std::vector<double> to_padded(std::span<const double> box) const;
  void to_box(std::span<const double> padded, std::span<double> box) const;
  std::vector<std::uint8_t> to_padded(const Mask& mask) const;

  /// Padded index of the first node of row `r` of `region`.
  std::size_t row_start(const Region& region, std::size_t r) const;
  /// True when every node of `region` shifted by every stencil offset stays in storage.
  bool fits(const Region& region, const Stencil& s) const;

 private:
  Grid grid_;
  int pad_ = 0;
  int side_ = 0;
  std::size_t size_ = 0;
  std::vector<std::ptrdiff_t> strides_;
  std::vector<std::size_t> node_map_;
};

namespace kernels {

/// Reference implementation: one node at a time with explicit coordinate arithmetic.
namespace serial {
void apply(const Layout& layout, const Region& region, const Stencil& s, const double* in, double* out);
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
}  // namespace serial

/// Row-vectorized OpenMP implementation. Reductions are accumulated in fixed
/// chunks and summed in chunk order, so results do not depend on the thread count.
namespace omp {
void apply(const Layout& layout, const Region& region, const Stencil& s, const double* in, double* out);
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
/// y = x + beta * y
void xpby(std::span<const double> x, double beta, std::span<double> y);
/// out = a * b elementwise
void multiply(std::span<const double> a, std::span<const double> b, std::span<double> out);
}  // namespace omp

}  // namespace kernels

}  // namespace pplab
