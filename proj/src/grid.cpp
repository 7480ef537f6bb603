#include "pplab/grid.hpp"

#include <cmath>
#include <sstream>

#include "pplab/errors.hpp"

namespace pplab {

Grid::Grid(int dimension, double spacing, int extent) : n_(dimension), h_(spacing), extent_(extent) {
  if (n_ < 1) throw InputError("Grid: dimension must be positive");
  if (!(h_ > 0.0) || !std::isfinite(h_)) throw InputError("Grid: spacing must be positive");
  if (extent_ < 1) throw InputError("Grid: extent must be positive");
  const double total = std::pow(static_cast<double>(side()), n_);
  if (total > 4.0e8) throw ConfigError("Grid: " + std::to_string(total) + " nodes exceeds the desk-scale limit");
  size_ = static_cast<std::size_t>(total);
}

double Grid::cell_volume() const { return std::pow(h_, n_); }

std::size_t Grid::index(std::span<const int> c) const {
  std::size_t lin = 0;
  for (int i = 0; i < n_; ++i) lin = lin * static_cast<std::size_t>(side()) + static_cast<std::size_t>(c[static_cast<std::size_t>(i)] + extent_);
  return lin;
}

bool Grid::contains(std::span<const int> c) const {
  if (c.size() != static_cast<std::size_t>(n_)) return false;
  for (int v : c)
    if (v < -extent_ || v > extent_) return false;
  return true;
}

void Grid::coords(std::size_t index, std::span<int> out) const {
  for (int i = n_ - 1; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = static_cast<int>(index % static_cast<std::size_t>(side())) - extent_;
    index /= static_cast<std::size_t>(side());
  }
}

std::vector<int> Grid::coords(std::size_t index) const {
  std::vector<int> c(static_cast<std::size_t>(n_));
  coords(index, c);
  return c;
}

std::vector<double> Grid::position(std::size_t index) const {
  const auto c = coords(index);
  std::vector<double> x(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) x[i] = c[i] * h_;
  return x;
}

void Grid::position(std::size_t index, std::span<double> out) const {
  std::size_t r = index;
  for (int a = n_ - 1; a >= 0; --a) {
    const auto s = static_cast<std::size_t>(side());
    out[static_cast<std::size_t>(a)] = (static_cast<int>(r % s) - extent_) * h_;
    r /= s;
  }
}

double Grid::radius(std::size_t index) const {
  const auto c = coords(index);
  double r2 = 0.0;
  for (int v : c) r2 += double(v) * v;
  return std::sqrt(r2) * h_;
}

std::size_t Grid::origin() const {
  std::vector<int> z(static_cast<std::size_t>(n_), 0);
  return index(z);
}

nlohmann::json Grid::to_json() const { return {{"n", n_}, {"h", h_}, {"extent", extent_}, {"nodes", size_}}; }

Mask::Mask(Grid grid) : grid_(std::move(grid)), bits_(grid_.size(), 0) {}

Mask::Mask(Grid grid, std::vector<std::uint8_t> bits) : grid_(std::move(grid)), bits_(std::move(bits)) {
  if (bits_.size() != grid_.size()) throw InputError("Mask: size does not match grid");
}

Mask Mask::from_predicate(const Grid& grid, const std::function<bool(std::span<const double>)>& pred) {
  Mask m(grid);
  std::vector<int> c(static_cast<std::size_t>(grid.dimension()));
  std::vector<double> x(c.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.coords(i, c);
    for (std::size_t k = 0; k < c.size(); ++k) x[k] = c[k] * grid.spacing();
    if (pred(x)) m.bits_[i] = 1;
  }
  return m;
}

Mask Mask::ball(const Grid& grid, double radius, std::vector<double> center) {
  if (center.empty()) center.assign(static_cast<std::size_t>(grid.dimension()), 0.0);
  if (center.size() != static_cast<std::size_t>(grid.dimension())) throw InputError("Mask::ball: center dimension mismatch");
  // Small slack so that nodes exactly on the sphere are included despite rounding.
  const double r2 = radius * radius * (1.0 + 1e-12);
  return from_predicate(grid, [&](std::span<const double> x) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) d2 += (x[k] - center[k]) * (x[k] - center[k]);
    return d2 <= r2;
  });
}

Mask Mask::from_csv(const Grid& grid, const std::string& text) {
  Mask m(grid);
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    for (auto& ch : line)
      if (ch == ',') ch = ' ';
    std::istringstream ls(line);
    std::vector<int> c;
    int v;
    while (ls >> v) c.push_back(v);
    if (c.size() != static_cast<std::size_t>(grid.dimension()))
      throw InputError("mask CSV line " + std::to_string(lineno) + ": expected " +
                       std::to_string(grid.dimension()) + " integer coordinates");
    if (!grid.contains(c)) throw InputError("mask CSV line " + std::to_string(lineno) + ": node outside the grid");
    m.bits_[grid.index(c)] = 1;
  }
  return m;
}

std::size_t Mask::count() const {
  std::size_t c = 0;
  for (auto b : bits_) c += b;
  return c;
}

int Mask::linf_radius() const {
  int r = -1;
  std::vector<int> c(static_cast<std::size_t>(grid_.dimension()));
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (!bits_[i]) continue;
    grid_.coords(i, c);
    for (int v : c) r = std::max(r, std::abs(v));
  }
  return r;
}

double Mask::max_radius() const {
  double r = 0.0;
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i]) r = std::max(r, grid_.radius(i));
  return r;
}

Mask Mask::embedded(const Grid& target) const {
  if (target.dimension() != grid_.dimension() || target.spacing() != grid_.spacing())
    throw InputError("Mask::embedded: target grid must share dimension and spacing");
  Mask out(target);
  std::vector<int> c(static_cast<std::size_t>(grid_.dimension()));
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (!bits_[i]) continue;
    grid_.coords(i, c);
    if (!target.contains(c)) throw InputError("Mask::embedded: set does not fit in the target grid");
    out.bits_[target.index(c)] = 1;
  }
  return out;
}

Mask Mask::shifted(std::span<const int> offset) const {
  Mask out(grid_);
  std::vector<int> c(static_cast<std::size_t>(grid_.dimension()));
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (!bits_[i]) continue;
    grid_.coords(i, c);
    for (std::size_t k = 0; k < c.size(); ++k) c[k] += offset[k];
    if (!grid_.contains(c)) throw InputError("Mask::shifted: set leaves the grid");
    out.bits_[grid_.index(c)] = 1;
  }
  return out;
}

Mask Mask::dilated(int layers) const {
  Mask out = *this;
  const int n = grid_.dimension();
  std::vector<int> c(static_cast<std::size_t>(n));
  // Separable l-infinity dilation, one axis at a time.
  for (int axis = 0; axis < n; ++axis) {
    Mask next = out;
    for (std::size_t i = 0; i < bits_.size(); ++i) {
      if (!out.bits_[i]) continue;
      grid_.coords(i, c);
      const int c0 = c[static_cast<std::size_t>(axis)];
      for (int d = -layers; d <= layers; ++d) {
        c[static_cast<std::size_t>(axis)] = c0 + d;
        if (grid_.contains(c)) next.bits_[grid_.index(c)] = 1;
      }
      c[static_cast<std::size_t>(axis)] = c0;
    }
    out = std::move(next);
  }
  return out;
}

Mask Mask::operator|(const Mask& o) const {
  if (!(o.grid_ == grid_)) throw InputError("Mask: grid mismatch");
  Mask out(grid_);
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] | o.bits_[i];
  return out;
}

Mask Mask::operator&(const Mask& o) const {
  if (!(o.grid_ == grid_)) throw InputError("Mask: grid mismatch");
  Mask out(grid_);
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] & o.bits_[i];
  return out;
}

Mask Mask::operator~() const {
  Mask out(grid_);
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] ? 0 : 1;
  return out;
}

bool Mask::subset_of(const Mask& o) const {
  if (!(o.grid_ == grid_)) throw InputError("Mask: grid mismatch");
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i] && !o.bits_[i]) return false;
  return true;
}

std::string Mask::to_csv() const {
  std::ostringstream os;
  std::vector<int> c(static_cast<std::size_t>(grid_.dimension()));
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (!bits_[i]) continue;
    grid_.coords(i, c);
    for (std::size_t k = 0; k < c.size(); ++k) os << (k ? "," : "") << c[k];
    os << '\n';
  }
  return os.str();
}

GridFunction::GridFunction(Grid grid, double fill) : grid_(std::move(grid)), values_(grid_.size(), fill) {}

GridFunction::GridFunction(Grid grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size()) throw InputError("GridFunction: size does not match grid");
}

GridFunction GridFunction::from_function(const Grid& grid, const std::function<double(std::span<const double>)>& f) {
  GridFunction u(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) u.values_[i] = f(grid.position(i));
  return u;
}

double GridFunction::at(std::span<const int> c) const { return grid_.contains(c) ? values_[grid_.index(c)] : 0.0; }

double GridFunction::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

GridFunction GridFunction::shifted(std::span<const int> offset) const {
  GridFunction out(grid_);
  std::vector<int> c(static_cast<std::size_t>(grid_.dimension()));
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] == 0.0) continue;
    grid_.coords(i, c);
    for (std::size_t k = 0; k < c.size(); ++k) c[k] += offset[k];
    if (!grid_.contains(c)) throw InputError("GridFunction::shifted: support leaves the grid");
    out.values_[grid_.index(c)] = values_[i];
  }
  return out;
}

std::string GridFunction::to_csv(bool skip_zeros) const {
  std::ostringstream os;
  os.precision(17);
  for (int k = 0; k < grid_.dimension(); ++k) os << 'x' << k << ',';
  os << "value\n";
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (skip_zeros && values_[i] == 0.0) continue;
    for (double x : grid_.position(i)) os << x << ',';
    os << values_[i] << '\n';
  }
  return os.str();
}

}  // namespace pplab
