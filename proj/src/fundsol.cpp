#include "pplab/fundsol.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>

#include <fftw3.h>

#include "pplab/directions.hpp"
#include "pplab/errors.hpp"
#include "pplab/quadrature.hpp"

namespace pplab {

namespace {

using cplx = std::complex<double>;

std::vector<long long> direction_key(std::span<const double> theta) {
  std::vector<long long> key(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) key[i] = std::llround(theta[i] * 1e9);
  return key;
}

std::vector<double> normalized(std::span<const double> x) {
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  if (!(r2 > 0.0)) throw InputError("fundsol: direction must be nonzero");
  const double inv = 1.0 / std::sqrt(r2);
  std::vector<double> out(x.begin(), x.end());
  for (auto& v : out) v *= inv;
  return out;
}

int default_sphere_nodes(int n) {
  if (n == 3) return 64;
  if (n == 4) return 768;
  return 1024;
}

int default_directions(int n) { return n <= 4 ? (1 << 10) : (1 << 12); }

void require_supported(const EllipticOperator& op) {
  if (op.dimension() <= 2 * op.half_order())
    throw UnsupportedRegime("fundsol: requires n > 2m (got n=" + std::to_string(op.dimension()) +
                            ", m=" + std::to_string(op.half_order()) + "); the logarithmic case is not handled");
}

void require_elliptic(const EllipticOperator& op) {
  const auto rep = check_ellipticity(op, 256);
  if (!rep.elliptic) throw InputError("fundsol: operator is not elliptic (min sampled symbol " +
                                      std::to_string(rep.min_value) + ")");
}

// Coefficients p_0..p_{2m} of t -> P(t theta + y).
class LinePolynomials {
 public:
  LinePolynomials(const EllipticOperator& op, std::span<const double> theta, int sphere_count) {
    const int n = op.dimension();
    deg_ = 2 * op.half_order();
    // Householder reflection mapping e_n to theta; its first n-1 columns span theta^perp.
    std::vector<double> v(theta.begin(), theta.end());
    v[static_cast<std::size_t>(n - 1)] -= 1.0;
    double vv = 0.0;
    for (double c : v) vv += c * c;
    auto column = [&](int j, std::vector<double>& col) {
      for (int i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = (i == j) ? 1.0 : 0.0;
      if (vv > 1e-24) {
        const double s = 2.0 * v[static_cast<std::size_t>(j)] / vv;
        for (int i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] -= s * v[static_cast<std::size_t>(i)];
      }
    };
    std::vector<std::vector<double>> basis(static_cast<std::size_t>(n - 1), std::vector<double>(n));
    for (int j = 0; j < n - 1; ++j) column(j, basis[static_cast<std::size_t>(j)]);

    const auto nodes = sphere_nodes(n - 1, sphere_count);
    weight_ = sphere_area(n - 1) / static_cast<double>(nodes.size());
    coeffs_.assign(nodes.size() * static_cast<std::size_t>(deg_ + 1), 0.0);
    std::vector<double> y(static_cast<std::size_t>(n));
    std::vector<double> poly(static_cast<std::size_t>(deg_ + 1));
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      std::fill(y.begin(), y.end(), 0.0);
      for (int j = 0; j < n - 1; ++j) {
        const double c = nodes[q][static_cast<std::size_t>(j)];
        for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] += c * basis[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
      }
      double* out = &coeffs_[q * static_cast<std::size_t>(deg_ + 1)];
      for (const auto& mono : op.monomials()) {
        std::fill(poly.begin(), poly.end(), 0.0);
        poly[0] = mono.coefficient;
        int d = 0;
        for (int i = 0; i < n; ++i) {
          const double a = y[static_cast<std::size_t>(i)];
          const double b = theta[static_cast<std::size_t>(i)];
          for (int e = 0; e < mono.exponent[static_cast<std::size_t>(i)]; ++e) {
            // poly *= (a + b t)
            for (int p = d + 1; p >= 1; --p) poly[static_cast<std::size_t>(p)] = a * poly[static_cast<std::size_t>(p)] + b * poly[static_cast<std::size_t>(p - 1)];
            poly[0] *= a;
            ++d;
          }
        }
        for (int p = 0; p <= deg_; ++p) out[p] += poly[static_cast<std::size_t>(p)];
      }
    }
    count_ = nodes.size();
  }

  // h(z) = int_{S^{n-2}} 1 / P(z theta + sqrt(1-z^2) eta) d eta
  template <class T>
  T h(T z, T c) const {
    std::vector<T> zp(static_cast<std::size_t>(deg_ + 1)), cp(static_cast<std::size_t>(deg_ + 1));
    zp[0] = cp[0] = T(1.0);
    for (int i = 1; i <= deg_; ++i) {
      zp[static_cast<std::size_t>(i)] = zp[static_cast<std::size_t>(i - 1)] * z;
      cp[static_cast<std::size_t>(i)] = cp[static_cast<std::size_t>(i - 1)] * c;
    }
    std::vector<T> basis(static_cast<std::size_t>(deg_ + 1));
    for (int i = 0; i <= deg_; ++i) basis[static_cast<std::size_t>(i)] = zp[static_cast<std::size_t>(i)] * cp[static_cast<std::size_t>(deg_ - i)];
    T sum = T(0.0);
    for (std::size_t q = 0; q < count_; ++q) {
      const double* p = &coeffs_[q * static_cast<std::size_t>(deg_ + 1)];
      T val = T(0.0);
      for (int i = 0; i <= deg_; ++i) val += p[i] * basis[static_cast<std::size_t>(i)];
      sum += T(1.0) / val;
    }
    return sum * weight_;
  }

 private:
  int deg_ = 0;
  double weight_ = 0.0;
  std::size_t count_ = 0;
  std::vector<double> coeffs_;
};

double factorial(int k) { return std::tgamma(k + 1.0); }

}  // namespace

SphereProfile::SphereProfile(std::string operator_id, int dimension, int half_order,
                             std::vector<std::vector<double>> directions, std::vector<double> values,
                             double error_estimate, bool isotropic)
    : operator_id_(std::move(operator_id)),
      n_(dimension),
      m_(half_order),
      directions_(std::move(directions)),
      values_(std::move(values)),
      error_estimate_(error_estimate),
      isotropic_(isotropic) {
  if (directions_.size() != values_.size()) throw InputError("SphereProfile: directions/values size mismatch");
  for (std::size_t i = 0; i < directions_.size(); ++i) {
    if (directions_[i].size() != static_cast<std::size_t>(n_))
      throw InputError("SphereProfile: direction has wrong dimension");
    index_.emplace(direction_key(directions_[i]), i);
  }
}

SphereProfile SphereProfile::isotropic(int m, int n) {
  if (n <= 2 * m) throw UnsupportedRegime("SphereProfile::isotropic: requires n > 2m");
  const double c = riesz_constant(m, n);
  auto dirs = unit_directions(n, 2 * n, true);
  std::vector<double> vals(dirs.size(), c);
  return SphereProfile(m == 1 ? "laplacian" : "polyharmonic", n, m, std::move(dirs), std::move(vals), 0.0, true);
}

double SphereProfile::direction_value(std::span<const double> theta) const {
  if (theta.size() != static_cast<std::size_t>(n_)) throw InputError("SphereProfile: dimension mismatch");
  if (isotropic_) return values_.front();
  const auto it = index_.find(direction_key(theta));
  if (it == index_.end()) throw InputError("SphereProfile: direction not in the stored set");
  return values_[it->second];
}

double SphereProfile::value_at(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(n_)) throw InputError("SphereProfile: dimension mismatch");
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  if (!(r2 > 0.0)) throw InputError("SphereProfile: F is singular at the origin");
  const double r = std::sqrt(r2);
  const auto theta = normalized(x);
  return direction_value(theta) * std::pow(r, homogeneity_degree());
}

SphereProfile SphereProfile::scaled(double factor) const {
  auto vals = values_;
  for (auto& v : vals) v *= factor;
  return SphereProfile(operator_id_, n_, m_, directions_, std::move(vals), std::abs(factor) * error_estimate_,
                       isotropic_);
}

double riesz_constant(int m, int n) {
  if (n <= 2 * m) throw UnsupportedRegime("riesz_constant: requires n > 2m");
  return std::tgamma(0.5 * n - m) / (std::pow(4.0, m) * std::pow(std::numbers::pi, 0.5 * n) * std::tgamma(m));
}

double fundamental_solution_value(const EllipticOperator& op, std::span<const double> theta_in,
                                  const ProfileOptions& opts) {
  require_supported(op);
  const int n = op.dimension();
  const int m = op.half_order();
  if (theta_in.size() != static_cast<std::size_t>(n)) throw InputError("fundsol: direction dimension mismatch");
  const auto theta = normalized(theta_in);
  const int k = n - 2 * m;
  const int sphere_count = opts.sphere_nodes > 0 ? opts.sphere_nodes : default_sphere_nodes(n);
  const int nc = std::max(opts.contour_nodes, 2 * k + 4);
  const double rc = opts.contour_radius;
  if (!(rc > 0.0 && rc < 1.0)) throw InputError("fundsol: contour radius must lie in (0, 1)");

  const LinePolynomials lines(op, theta, sphere_count);
  const double half_pow = 0.5 * (n - 3);

  // Taylor coefficients of g(z) = (1 - z^2)^{(n-3)/2} h(z) at 0 from the Cauchy contour.
  std::vector<cplx> gz(static_cast<std::size_t>(nc));
  for (int l = 0; l < nc; ++l) {
    const cplx z = std::polar(rc, 2.0 * std::numbers::pi * l / nc);
    const cplx c = std::sqrt(1.0 - z * z);
    gz[static_cast<std::size_t>(l)] = std::pow(1.0 - z * z, half_pow) * lines.h(z, c);
  }
  const int jmax = nc / 2;
  std::vector<double> a(static_cast<std::size_t>(jmax), 0.0);
  for (int j = 0; j < jmax; ++j) {
    cplx s = 0.0;
    for (int l = 0; l < nc; ++l) s += gz[static_cast<std::size_t>(l)] * std::polar(1.0, -2.0 * std::numbers::pi * j * l / nc);
    a[static_cast<std::size_t>(j)] = s.real() / (nc * std::pow(rc, j));
  }

  const double norm = std::pow(2.0 * std::numbers::pi, -n);
  if (k % 2 == 1) {
    const double sign = ((k - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
    return norm * std::numbers::pi * sign * factorial(k - 1) * a[static_cast<std::size_t>(k - 1)];
  }

  // Even k: Hadamard finite part of int_{-1}^{1} g(s) |s|^{-k} ds.
  const double delta = 0.5 * rc;
  double fp = 0.0;
  for (int i = 0; 2 * i < k; ++i) fp += a[static_cast<std::size_t>(2 * i)] / (2.0 * i - k + 1.0);
  for (int i = k / 2; 2 * i < jmax; ++i)
    fp += a[static_cast<std::size_t>(2 * i)] * std::pow(delta, 2 * i - k + 1) / (2.0 * i - k + 1.0);
  const auto rule = quad::gauss_legendre(std::max(opts.radial_nodes, 8));
  const double phi0 = std::asin(delta);
  const double phi1 = 0.5 * std::numbers::pi;
  double tail = 0.0;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double phi = 0.5 * (phi0 + phi1) + 0.5 * (phi1 - phi0) * rule.nodes[q];
    const double s = std::sin(phi);
    const double c = std::cos(phi);
    const double g = std::pow(c, n - 3) * lines.h(s, c);
    double taylor = 0.0;
    for (int i = 0; 2 * i < k; ++i) taylor += a[static_cast<std::size_t>(2 * i)] * std::pow(s, 2 * i);
    tail += rule.weights[q] * (g - taylor) * std::pow(s, -k) * c;
  }
  fp += 0.5 * (phi1 - phi0) * tail;
  const double sign = (k / 2) % 2 == 0 ? 1.0 : -1.0;
  return norm * factorial(k - 1) * sign * 2.0 * fp;
}

SphereProfile compute_profile(const EllipticOperator& op, const ProfileOptions& opts) {
  require_supported(op);
  const int count = opts.directions > 0 ? opts.directions : default_directions(op.dimension());
  return compute_profile(op, unit_directions(op.dimension(), count, true), opts);
}

SphereProfile compute_profile(const EllipticOperator& op, std::vector<std::vector<double>> directions,
                              const ProfileOptions& opts) {
  require_supported(op);
  require_elliptic(op);
  if (directions.empty()) throw InputError("compute_profile: empty direction set");
  for (auto& d : directions) {
    if (d.size() != static_cast<std::size_t>(op.dimension()))
      throw InputError("compute_profile: direction dimension mismatch");
    d = normalized(d);
  }
  const std::size_t nd = directions.size();
  std::vector<double> values(nd, 0.0);
  std::vector<double> coarse(nd, 0.0);
  ProfileOptions half = opts;
  const int sphere_count = opts.sphere_nodes > 0 ? opts.sphere_nodes : default_sphere_nodes(op.dimension());
  half.sphere_nodes = std::max(sphere_count / 2, 8);
  half.radial_nodes = std::max(opts.radial_nodes / 2, 8);

#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(nd); ++i) {
    const auto& d = directions[static_cast<std::size_t>(i)];
    values[static_cast<std::size_t>(i)] = fundamental_solution_value(op, d, opts);
    if (opts.estimate_error) coarse[static_cast<std::size_t>(i)] = fundamental_solution_value(op, d, half);
  }
  double err = 0.0;
  if (opts.estimate_error) {
    for (std::size_t i = 0; i < nd; ++i) err = std::max(err, std::abs(values[i] - coarse[i]));
  }
  return SphereProfile(op.id(), op.dimension(), op.half_order(), std::move(directions), std::move(values), err,
                       false);
}

double periodic_profile_value(const EllipticOperator& op, std::span<const int> dir, int resolution) {
  require_supported(op);
  const int n = op.dimension();
  const int M = resolution;
  if (dir.size() != static_cast<std::size_t>(n)) throw InputError("periodic_profile_value: direction dimension mismatch");
  if (M < 16 || M % 2) throw InputError("periodic_profile_value: resolution must be even and >= 16");
  const double total = std::pow(static_cast<double>(M), n);
  if (total > double(1 << 24)) throw InputError("periodic_profile_value: resolution^n exceeds 2^24 nodes");
  int dmax = 0;
  double dnorm2 = 0.0;
  for (int c : dir) {
    dmax = std::max(dmax, std::abs(c));
    dnorm2 += double(c) * c;
  }
  if (dmax == 0) throw InputError("periodic_profile_value: zero direction");
  int T = (M / 4) / dmax;
  T -= T % 4;
  if (T < 4) throw InputError("periodic_profile_value: resolution too small for this lattice direction");

  const std::size_t N = static_cast<std::size_t>(total);
  fftw_complex* buf = fftw_alloc_complex(N);
  std::vector<int> dims(static_cast<std::size_t>(n), M);
  fftw_plan plan = fftw_plan_dft(n, dims.data(), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);

  std::vector<double> xi(static_cast<std::size_t>(n));
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  for (std::size_t lin = 0; lin < N; ++lin) {
    std::size_t r = lin;
    for (int i = n - 1; i >= 0; --i) {
      idx[static_cast<std::size_t>(i)] = static_cast<int>(r % static_cast<std::size_t>(M));
      r /= static_cast<std::size_t>(M);
    }
    bool zero = true;
    for (int i = 0; i < n; ++i) {
      const double sigma = 2.0 * std::numbers::pi * idx[static_cast<std::size_t>(i)] / M;
      xi[static_cast<std::size_t>(i)] = 2.0 * std::sin(0.5 * sigma);
      zero = zero && idx[static_cast<std::size_t>(i)] == 0;
    }
    buf[lin][0] = zero ? 0.0 : 1.0 / op.symbol(xi);
    buf[lin][1] = 0.0;
  }
  fftw_execute(plan);

  auto sample = [&](int t) {
    std::size_t lin = 0;
    for (int i = 0; i < n; ++i) {
      const int c = ((dir[static_cast<std::size_t>(i)] * t) % M + M) % M;
      lin = lin * static_cast<std::size_t>(M) + static_cast<std::size_t>(c);
    }
    return buf[lin][0] / total;
  };
  const int k = n - 2 * op.half_order();
  const double dn = std::sqrt(dnorm2);
  // G(r) = A r^{-k} + C + B r^2 at r = T, T/2, T/4 (times |dir|).
  double mat[3][4];
  const int ts[3] = {T, T / 2, T / 4};
  for (int row = 0; row < 3; ++row) {
    const double r = ts[row] * dn;
    mat[row][0] = std::pow(r, -k);
    mat[row][1] = 1.0;
    mat[row][2] = r * r;
    mat[row][3] = sample(ts[row]);
  }
  fftw_destroy_plan(plan);
  fftw_free(buf);
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(mat[r][c]) > std::abs(mat[piv][c])) piv = r;
    std::swap(mat[c], mat[piv]);
    for (int r = 0; r < 3; ++r) {
      if (r == c) continue;
      const double f = mat[r][c] / mat[c][c];
      for (int q = c; q < 4; ++q) mat[r][q] -= f * mat[c][q];
    }
  }
  return mat[0][3] / mat[0][0];
}

SignSummary sign_summary(const SphereProfile& profile) {
  if (profile.size() == 0) throw InputError("sign_summary: empty profile");
  SignSummary s;
  s.min = std::numeric_limits<double>::infinity();
  s.max = -std::numeric_limits<double>::infinity();
  std::size_t neg = 0;
  for (double v : profile.values()) {
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
    if (v < 0.0) ++neg;
  }
  s.fraction_negative = static_cast<double>(neg) / static_cast<double>(profile.size());
  return s;
}

nlohmann::json profile_summary_json(const SphereProfile& profile) {
  const auto s = sign_summary(profile);
  double mean = 0.0;
  for (double v : profile.values()) mean += v;
  mean /= static_cast<double>(profile.size());
  return {{"operator", profile.operator_id()},
          {"n", profile.dimension()},
          {"m", profile.half_order()},
          {"homogeneity_degree", profile.homogeneity_degree()},
          {"directions", profile.size()},
          {"min", s.min},
          {"max", s.max},
          {"mean", mean},
          {"fraction_negative", s.fraction_negative},
          {"error_estimate", profile.error_estimate()},
          {"isotropic", profile.is_isotropic()}};
}

std::string profile_csv(const SphereProfile& profile) {
  std::ostringstream os;
  os.precision(17);
  for (int i = 0; i < profile.dimension(); ++i) os << "theta" << i << ',';
  os << "value\n";
  for (std::size_t q = 0; q < profile.size(); ++q) {
    for (double c : profile.directions()[q]) os << c << ',';
    os << profile.values()[q] << '\n';
  }
  return os.str();
}

}  // namespace pplab
