#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pplab {

/// Uniform grid on [-extent*h, extent*h]^n with (2*extent+1)^n nodes.
/// Nodes are stored in row-major order with the last axis fastest.
class Grid {
 public:
  Grid() = default;
  Grid(int dimension, double spacing, int extent);

  int dimension() const { return n_; }
  double spacing() const { return h_; }
  int extent() const { return extent_; }
  int side() const { return 2 * extent_ + 1; }
  std::size_t size() const { return size_; }
  /// Volume element h^n.
  double cell_volume() const;

  /// Linear index of integer coordinates in [-extent, extent]^n.
  std::size_t index(std::span<const int> coords) const;
  bool contains(std::span<const int> coords) const;
  void coords(std::size_t index, std::span<int> out) const;
  std::vector<int> coords(std::size_t index) const;
  std::vector<double> position(std::size_t index) const;
  void position(std::size_t index, std::span<double> out) const;
  double radius(std::size_t index) const;
  std::size_t origin() const;

  /// Same spacing, different extent.
  Grid with_extent(int extent) const { return Grid(n_, h_, extent); }

  nlohmann::json to_json() const;
  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int n_ = 0;
  double h_ = 0.0;
  int extent_ = 0;
  std::size_t size_ = 0;
};

/// Set of grid nodes (a compact set K or the closed complement of a domain).
class Mask {
 public:
  Mask() = default;
  explicit Mask(Grid grid);
  Mask(Grid grid, std::vector<std::uint8_t> bits);

  /// Nodes x with pred(position(x)).
  static Mask from_predicate(const Grid& grid, const std::function<bool(std::span<const double>)>& pred);
  /// Closed ball |x - center| <= radius.
  static Mask ball(const Grid& grid, double radius, std::vector<double> center = {});
  /// Node-list CSV: one node per line, n integer coordinates in [-extent, extent].
  static Mask from_csv(const Grid& grid, const std::string& text);

  const Grid& grid() const { return grid_; }
  bool test(std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool v = true) { bits_[i] = v ? 1 : 0; }
  std::size_t count() const;
  bool empty() const { return count() == 0; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  /// Max l-infinity node radius of the set (-1 when empty).
  int linf_radius() const;
  /// Max Euclidean radius of the set (0 when empty).
  double max_radius() const;

  /// Re-embeds the set on a grid of the same spacing and different extent.
  /// Throws InputError if a node would fall outside.
  Mask embedded(const Grid& target) const;
  /// Translates by an integer node offset (nodes leaving the box are an error).
  Mask shifted(std::span<const int> offset) const;
  /// Nodes within l-infinity distance `layers` of the set.
  Mask dilated(int layers) const;

  Mask operator|(const Mask& o) const;
  Mask operator&(const Mask& o) const;
  Mask operator~() const;
  bool subset_of(const Mask& o) const;

  std::string to_csv() const;

 private:
  Grid grid_;
  std::vector<std::uint8_t> bits_;
};

/// Real values per grid node; zero outside the box.
class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(Grid grid, double fill = 0.0);
  GridFunction(Grid grid, std::vector<double> values);

  static GridFunction from_function(const Grid& grid, const std::function<double(std::span<const double>)>& f);

  const Grid& grid() const { return grid_; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

  /// Value at integer coordinates (zero outside the box).
  double at(std::span<const int> coords) const;
  double max_abs() const;
  GridFunction shifted(std::span<const int> offset) const;

  /// Node-value CSV: coordinates in length units, then value.
  std::string to_csv(bool skip_zeros = false) const;

 private:
  Grid grid_;
  std::vector<double> values_;
};

}  // namespace pplab
