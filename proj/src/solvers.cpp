#include "pplab/solvers.hpp"

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "pplab/errors.hpp"
#include "pplab/kernels.hpp"

namespace pplab {

namespace {

void project(std::span<const std::uint8_t> free, std::span<double> v) {
  const auto n = static_cast<std::ptrdiff_t>(v.size());
#pragma omp parallel for simd schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    if (!free[static_cast<std::size_t>(i)]) v[static_cast<std::size_t>(i)] = 0.0;
}

}  // namespace

CGResult conjugate_gradient(const LinearMap& a, std::span<const std::uint8_t> free, std::span<const double> b,
                            std::span<double> x, const CGOptions& opts) {
  namespace k = kernels::omp;
  const std::size_t n = x.size();
  if (b.size() != n || free.size() != n) throw InputError("conjugate_gradient: size mismatch");
  CGResult res;
  std::vector<double> r(n, 0.0), p(n, 0.0), ap(n, 0.0);
  std::vector<double> pb(b.begin(), b.end());
  project(free, pb);
  const double ref = std::sqrt(k::dot(pb, pb));

  a(x.data(), ap.data());
  for (std::size_t i = 0; i < n; ++i) r[i] = free[i] ? b[i] - ap[i] : 0.0;
  double rr = k::dot(r, r);
  const double scale = ref > 0.0 ? ref : std::sqrt(rr);
  if (scale == 0.0) {
    res.converged = true;
    return res;
  }
  res.relative_residual = std::sqrt(rr) / scale;
  if (res.relative_residual <= opts.rel_tol) {
    res.converged = true;
    return res;
  }
  p = r;
  for (int it = 1; it <= opts.max_iter; ++it) {
    std::fill(ap.begin(), ap.end(), 0.0);
    a(p.data(), ap.data());
    project(free, ap);
    const double pap = k::dot(p, ap);
    if (!(pap > 0.0)) throw ConfigError("conjugate_gradient: operator is not positive definite on the free set");
    const double alpha = rr / pap;
    k::axpy(alpha, p, x);
    k::axpy(-alpha, ap, r);
    const double rr_new = k::dot(r, r);
    res.iterations = it;
    res.relative_residual = std::sqrt(rr_new) / scale;
    if (res.relative_residual <= opts.rel_tol) {
      res.converged = true;
      break;
    }
    k::xpby(r, rr_new / rr, p);
    rr = rr_new;
  }
  return res;
}

EigenResult lobpcg_smallest(const LinearMap& a, const LinearMap& b, const LinearMap& precond,
                            std::span<const std::uint8_t> free, std::size_t size, const EigenOptions& opts) {
  namespace k = kernels::omp;
  if (free.size() != size) throw InputError("lobpcg_smallest: size mismatch");
  std::vector<double> x(size, 0.0), ax(size, 0.0), bx(size, 0.0);
  std::vector<double> w(size, 0.0), aw(size, 0.0), bw(size, 0.0);
  std::vector<double> p(size, 0.0), ap(size, 0.0), bp(size, 0.0);
  std::vector<double> r(size, 0.0);

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  bool any = false;
  for (std::size_t i = 0; i < size; ++i) {
    const double v = dist(rng);
    if (free[i]) {
      x[i] = v;
      any = true;
    }
  }
  if (!any) throw InputError("lobpcg_smallest: empty free set");

  auto apply_ab = [&](std::vector<double>& v, std::vector<double>& av, std::vector<double>& bv) {
    std::fill(av.begin(), av.end(), 0.0);
    std::fill(bv.begin(), bv.end(), 0.0);
    a(v.data(), av.data());
    b(v.data(), bv.data());
    project(free, av);
    project(free, bv);
  };
  auto normalize = [&](std::vector<double>& v, std::vector<double>& av, std::vector<double>& bv) {
    const double nrm = std::sqrt(k::dot(v, bv));
    if (!(nrm > 0.0)) throw ConfigError("lobpcg_smallest: B is not positive definite on the free set");
    for (std::size_t i = 0; i < size; ++i) {
      v[i] /= nrm;
      av[i] /= nrm;
      bv[i] /= nrm;
    }
  };

  apply_ab(x, ax, bx);
  normalize(x, ax, bx);
  double lambda = k::dot(x, ax);
  bool have_p = false;
  EigenResult res;

  for (int it = 1; it <= opts.max_iter; ++it) {
    for (std::size_t i = 0; i < size; ++i) r[i] = ax[i] - lambda * bx[i];
    const double rn = std::sqrt(k::dot(r, r));
    const double denom = std::sqrt(k::dot(ax, ax)) + std::abs(lambda) * std::sqrt(k::dot(bx, bx));
    res.residual = denom > 0.0 ? rn / denom : rn;
    res.iterations = it - 1;
    if (res.residual <= opts.rel_tol) {
      res.converged = true;
      break;
    }
    if (precond) {
      std::fill(w.begin(), w.end(), 0.0);
      precond(r.data(), w.data());
      project(free, w);
    } else {
      w = r;
    }
    apply_ab(w, aw, bw);
    normalize(w, aw, bw);

    const int dim = have_p ? 3 : 2;
    const std::vector<double>* vs[3] = {&x, &w, &p};
    const std::vector<double>* avs[3] = {&ax, &aw, &ap};
    const std::vector<double>* bvs[3] = {&bx, &bw, &bp};
    Eigen::MatrixXd ga(dim, dim), gb(dim, dim);
    for (int i = 0; i < dim; ++i) {
      for (int j = i; j < dim; ++j) {
        ga(i, j) = ga(j, i) = k::dot(*vs[i], *avs[j]);
        gb(i, j) = gb(j, i) = k::dot(*vs[i], *bvs[j]);
      }
    }
    // Drop the search direction when the Gram matrix is numerically singular.
    int use = dim;
    for (; use >= 2; --use) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gs(gb.topLeftCorner(use, use));
      const auto ev = gs.eigenvalues();
      if (ev.minCoeff() > 1e-12 * ev.maxCoeff()) break;
    }
    if (use < 2) break;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(ga.topLeftCorner(use, use),
                                                                  gb.topLeftCorner(use, use));
    const Eigen::VectorXd c = ges.eigenvectors().col(0);
    lambda = ges.eigenvalues()(0);

    std::vector<double> np(size, 0.0), nap(size, 0.0), nbp(size, 0.0);
    for (int j = 1; j < use; ++j) {
      k::axpy(c(j), *vs[j], np);
      k::axpy(c(j), *avs[j], nap);
      k::axpy(c(j), *bvs[j], nbp);
    }
    for (std::size_t i = 0; i < size; ++i) {
      x[i] = c(0) * x[i] + np[i];
      ax[i] = c(0) * ax[i] + nap[i];
      bx[i] = c(0) * bx[i] + nbp[i];
    }
    p.swap(np);
    ap.swap(nap);
    bp.swap(nbp);
    have_p = true;
    normalize(x, ax, bx);
    lambda = k::dot(x, ax);
    res.iterations = it;
  }
  res.value = lambda;
  res.vector = std::move(x);
  return res;
}

}  // namespace pplab
