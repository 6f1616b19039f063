#ifndef POLYFIT_METRICS_HPP
#define POLYFIT_METRICS_HPP

#include <cstdint>

#include "polyfit/polytope.hpp"
#include "polyfit/regions.hpp"

namespace polyfit {

/// One sampled direction with its four extremal/projection points and the
/// two directional errors.
struct DirectionalSample {
  VectorXd v;
  VectorXd poly_support;    // support point of P along v
  VectorXd region_closest;  // projection of poly_support onto the region
  VectorXd region_support;  // support point of the region along v
  VectorXd poly_closest;    // projection of region_support onto P
  double feas_err = 0.0;    // ||region_closest - poly_support||^2
  double opt_err = 0.0;     // ||poly_closest - region_support||^2
};

struct ErrorEstimate {
  double mean_feas = 0.0;
  double mean_opt = 0.0;
  double max_feas = 0.0;
  double max_opt = 0.0;
  int n_dirs = 0;
  std::uint64_t seed = 0;
};

inline double weighted_error(const ErrorEstimate& e, double lambda) {
  return lambda * e.mean_feas + (1.0 - lambda) * e.mean_opt;
}

/// Directional feasibility and optimality errors of P against the region
/// along one direction. P and the region must live in the same coordinates.
DirectionalSample dir_errors(const Polytope& P, const Region& region,
                             const VectorXd& theta, const VectorXd& v,
                             const SolverConfig& cfg = default_solver_config());

/// Monte-Carlo estimate over n_dirs i.i.d. standard-normal directions from
/// the seeded generator. Deterministic for a fixed seed; samples are
/// evaluated and reduced in draw order.
ErrorEstimate estimate_errors(const Polytope& P, const Region& region,
                              const VectorXd& theta, int n_dirs,
                              std::uint64_t seed,
                              const SolverConfig& cfg = default_solver_config());

}  // namespace polyfit

#endif  // POLYFIT_METRICS_HPP
