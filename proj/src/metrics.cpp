#include "polyfit/metrics.hpp"

#include <algorithm>

#include "polyfit/rng.hpp"

namespace polyfit {

DirectionalSample dir_errors(const Polytope& P, const Region& region,
                             const VectorXd& theta, const VectorXd& v,
                             const SolverConfig& cfg) {
  if (P.dim() != region.dim())
    throw UsageError("polytope and region dimensions differ");
  if (v.size() != P.dim()) throw UsageError("direction has wrong dimension");
  if (v.norm() <= kDirEps)
    throw UsageError("direction is numerically zero");

  DirectionalSample s;
  s.v = v;
  s.poly_support = support_pt(P, v, cfg);
  s.region_closest = region.project(theta, s.poly_support);
  s.feas_err = (s.region_closest - s.poly_support).squaredNorm();

  s.region_support = region.support(theta, v).point;
  s.poly_closest = project_pt(P, s.region_support, cfg);
  s.opt_err = (s.poly_closest - s.region_support).squaredNorm();
  return s;
}

ErrorEstimate estimate_errors(const Polytope& P, const Region& region,
                              const VectorXd& theta, int n_dirs,
                              std::uint64_t seed, const SolverConfig& cfg) {
  if (n_dirs < 1) throw UsageError("estimate_errors needs n_dirs >= 1");
  Rng rng(seed);
  ErrorEstimate est;
  est.n_dirs = n_dirs;
  est.seed = seed;
  for (int k = 0; k < n_dirs; ++k) {
    const VectorXd v = rng.direction(P.dim());
    const DirectionalSample s = dir_errors(P, region, theta, v, cfg);
    est.mean_feas += s.feas_err;
    est.mean_opt += s.opt_err;
    est.max_feas = std::max(est.max_feas, s.feas_err);
    est.max_opt = std::max(est.max_opt, s.opt_err);
  }
  est.mean_feas /= n_dirs;
  est.mean_opt /= n_dirs;
  return est;
}

}  // namespace polyfit
