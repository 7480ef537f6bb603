#include "pplab/domains.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pplab/errors.hpp"

namespace pplab {

CuspProfile CuspProfile::power(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw InputError("power cusp: exponent p must be >= 1");
  CuspProfile c;
  c.kind_ = Kind::power;
  c.parameter_ = p;
  return c;
}

CuspProfile CuspProfile::exponential(double a) {
  if (!(a > 0.0) || !std::isfinite(a)) throw InputError("exponential cusp: parameter a must be positive");
  CuspProfile c;
  c.kind_ = Kind::exponential;
  c.parameter_ = a;
  return c;
}

CuspProfile CuspProfile::tabulated(std::vector<double> tau, std::vector<double> f) {
  if (tau.size() != f.size() || tau.size() < 4) throw InputError("tabulated cusp: need at least 4 (tau, f) pairs");
  CuspProfile c;
  c.kind_ = Kind::tabulated;
  c.parameter_ = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (!(tau[i] > 0.0 && tau[i] <= 1.0)) throw InputError("tabulated cusp: tau must lie in (0, 1]");
    if (!(f[i] > 0.0)) throw InputError("tabulated cusp: f must be positive on (0, 1]");
    if (i > 0 && !(tau[i] > tau[i - 1])) throw InputError("tabulated cusp: tau must be strictly increasing");
    if (i > 0 && !(f[i] > f[i - 1])) throw InputError("tabulated cusp: f must be strictly increasing");
    c.log_tau_.push_back(std::log(tau[i]));
    c.log_f_.push_back(std::log(f[i]));
  }
  return c;
}

CuspProfile CuspProfile::tabulate(double tau_min, int count) const {
  if (!(tau_min > 0.0 && tau_min < 1.0) || count < 4) throw InputError("tabulate: invalid range");
  std::vector<double> tau(static_cast<std::size_t>(count)), f(tau.size());
  const double l0 = std::log(tau_min);
  for (int i = 0; i < count; ++i) {
    const double lt = l0 * (1.0 - static_cast<double>(i) / (count - 1));
    tau[static_cast<std::size_t>(i)] = std::exp(lt);
    f[static_cast<std::size_t>(i)] = std::exp(log_value(lt));
  }
  tau.back() = 1.0;
  return tabulated(std::move(tau), std::move(f));
}

double CuspProfile::log_value(double lt) const {
  switch (kind_) {
    case Kind::power: return parameter_ * lt;
    case Kind::exponential: return -std::exp(-parameter_ * lt);
    case Kind::tabulated: {
      const auto& x = log_tau_;
      const auto& y = log_f_;
      std::size_t i;
      if (lt <= x.front()) {
        i = 0;
      } else if (lt >= x.back()) {
        i = x.size() - 2;
      } else {
        i = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), lt) - x.begin()) - 1;
      }
      const double t = (lt - x[i]) / (x[i + 1] - x[i]);
      return y[i] + t * (y[i + 1] - y[i]);
    }
  }
  return 0.0;
}

double CuspProfile::operator()(double tau) const {
  if (tau <= 0.0) return 0.0;
  return std::exp(log_value(std::log(tau)));
}

double CuspProfile::tau_min() const { return kind_ == Kind::tabulated ? std::exp(log_tau_.front()) : 0.0; }

std::string CuspProfile::name() const {
  switch (kind_) {
    case Kind::power: return "power";
    case Kind::exponential: return "exponential";
    case Kind::tabulated: return "tabulated";
  }
  return "unknown";
}

nlohmann::json CuspProfile::to_json() const {
  nlohmann::json j{{"kind", name()}};
  if (kind_ == Kind::power) j["p"] = parameter_;
  if (kind_ == Kind::exponential) j["a"] = parameter_;
  if (kind_ == Kind::tabulated) {
    std::vector<double> tau, f;
    for (std::size_t i = 0; i < log_tau_.size(); ++i) {
      tau.push_back(std::exp(log_tau_[i]));
      f.push_back(std::exp(log_f_[i]));
    }
    j["tau"] = tau;
    j["f"] = f;
  }
  return j;
}

CuspProfile CuspProfile::from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "power") return power(j.value("p", 2.0));
  if (kind == "exponential") return exponential(j.value("a", 1.0));
  if (kind == "tabulated") return tabulated(j.at("tau").get<std::vector<double>>(), j.at("f").get<std::vector<double>>());
  throw InputError("unknown cusp kind '" + kind + "'");
}

bool ComplementShape::resolvable(double, double) const { return true; }

Mask ComplementShape::rasterize(const Grid& grid) const {
  if (grid.dimension() != dimension()) throw InputError("rasterize: dimension mismatch");
  const double h = grid.spacing();
  return Mask::from_predicate(grid, [&](std::span<const double> x) { return contains(x, h); });
}

nlohmann::json EmptyComplement::to_json() const { return {{"type", "empty"}, {"n", n_}}; }

ConeComplement::ConeComplement(int n, double half_aperture) : n_(n), alpha_(half_aperture) {
  if (n < 2) throw InputError("cone: dimension must be >= 2");
  if (!(alpha_ > 0.0 && alpha_ < std::numbers::pi)) throw InputError("cone: half aperture must lie in (0, pi)");
}

bool ConeComplement::contains(std::span<const double> x, double) const {
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  return -x[static_cast<std::size_t>(n_ - 1)] >= std::sqrt(r2) * std::cos(alpha_) - 1e-12;
}

nlohmann::json ConeComplement::to_json() const { return {{"type", "cone"}, {"n", n_}, {"half_aperture", alpha_}}; }

bool RayComplement::contains(std::span<const double> x, double h) const {
  if (x[0] > 1e-12) return false;
  for (std::size_t i = 1; i < x.size(); ++i)
    if (std::abs(x[i]) >= 0.5 * h) return false;
  return true;
}

nlohmann::json RayComplement::to_json() const { return {{"type", "ray"}, {"n", n_}}; }

CuspComplement::CuspComplement(int n, CuspProfile f) : n_(n), f_(std::move(f)) {
  if (n < 2) throw InputError("cusp: dimension must be >= 2");
}

bool CuspComplement::contains(std::span<const double> x, double h) const {
  double r2 = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) r2 += x[i] * x[i];
  const double xn = x[static_cast<std::size_t>(n_ - 1)];
  if (r2 + xn * xn < 0.25 * h * h) return true;  // the vertex O
  if (!(xn > 0.0 && xn < 1.0)) return false;
  const double f = f_(xn);
  return f >= 0.5 * h && std::sqrt(r2) < f;
}

bool CuspComplement::resolvable(double rho, double h) const { return f_(std::min(rho, 1.0)) >= h; }

nlohmann::json CuspComplement::to_json() const { return {{"type", "cusp"}, {"n", n_}, {"profile", f_.to_json()}}; }

bool MaskComplement::contains(std::span<const double> x, double) const {
  const Grid& g = mask_.grid();
  std::vector<int> c(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) c[i] = static_cast<int>(std::lround(x[i] / g.spacing()));
  return g.contains(c) && mask_.test(g.index(c));
}

bool MaskComplement::resolvable(double rho, double h) const {
  return h >= mask_.grid().spacing() - 1e-15 && rho >= 2.0 * mask_.grid().spacing();
}

nlohmann::json MaskComplement::to_json() const {
  return {{"type", "mask"}, {"grid", mask_.grid().to_json()}, {"nodes", mask_.count()}};
}

std::unique_ptr<ComplementShape> shape_from_json(const nlohmann::json& j, int n) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "empty") return std::make_unique<EmptyComplement>(n);
  if (type == "cone") return std::make_unique<ConeComplement>(n, j.value("half_aperture", std::numbers::pi / 4));
  if (type == "ray") return std::make_unique<RayComplement>(n);
  if (type == "cusp") return std::make_unique<CuspComplement>(n, CuspProfile::from_json(j.at("profile")));
  throw InputError("unknown domain type '" + type + "' (expected cone, ray, empty or cusp)");
}

}  // namespace pplab
