#ifndef POLYFIT_BENCHMARKS_HPP
#define POLYFIT_BENCHMARKS_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polyfit/io.hpp"
#include "polyfit/metrics.hpp"
#include "polyfit/trainer.hpp"

namespace polyfit {

struct BenchReport {
  std::string case_id;
  int n = 0;
  int facets = 0;
  double init_error = 0.0;
  double converged_error = 0.0;
  std::optional<double> ideal_error;
  double reduction = 0.0;  // (init - converged) / init
  int iterations = 0;
  int steps_to_converge = -1;
  double wall_time_s = 0.0;  // logged to stderr; kept out of the CSV so
                             // reports are byte-identical across runs
};

/// CSV over the deterministic columns, numbers at 17 significant digits.
std::string bench_csv(const std::vector<BenchReport>& reports);

/// Uniform samples from a polytope by hit-and-run from the Chebyshev
/// center with the given burn-in; seeded and deterministic.
MatrixXd hit_and_run(const Polytope& P, int count, int burn_in,
                     std::uint64_t seed);

/// Worst directional optimality error of P against the region: best of
/// n_dirs Monte-Carlo directions refined by projected ascent on the
/// region boundary. Returned in the (normalized) coordinates of P.
double worst_opt_error(const Polytope& P, const Region& region,
                       const VectorXd& theta, int n_dirs, std::uint64_t seed);

/// Worst directional feasibility error over sampled directions.
double worst_feas_error(const Polytope& P, const Region& region,
                        const VectorXd& theta, int n_dirs, std::uint64_t seed);

/// Global optimum of the worst-case total error for the unit hypersphere
/// fitted with 2n hyperplanes at balanced weighting.
double hypersphere_ideal_error(int n);

/// Seeded per-resource systems: box power limits plus cumulative energy
/// caps (one budget row per prefix length).
std::vector<LinearSystem> make_fleet(int resources, int horizon,
                                     std::uint64_t seed);

/// The benchmark geometries.
RegionPtr bench_octagon();
RegionPtr bench_ellipse();
RegionPtr bench_disk_difference();

/// Convex hull of the disk-difference benchmark: support value and a
/// deterministic boundary sample (kept rim arc plus the bridging chord).
double disk_diff_hull_support(const VectorXd& v);
MatrixXd disk_diff_hull_boundary(int count);

std::vector<BenchReport> run_hypercube_suite(const std::vector<int>& dims,
                                             const TrainConfig& base);
/// out_polytopes, when given, receives the converged polytope per dimension.
std::vector<BenchReport> run_hypersphere_suite(const std::vector<int>& dims,
                                               const TrainConfig& base,
                                               std::vector<Polytope>* out_polytopes = nullptr);

struct Shapes2dResult {
  std::vector<BenchReport> reports;
  // per case: snapshot CSV "iter,row,a1..an,b" at fixed checkpoints
  std::map<std::string, std::string> snapshots;
  double hull_cover_violation = 0.0;  // worst signed distance of hull
                                      // boundary samples outside P
  double hull_support_gap = 0.0;      // worst |h_P - h_hull| over directions
  Polytope hull_polytope;             // the converged hull-study polytope
};

Shapes2dResult run_2d_suite(const TrainConfig& base);

struct AggregationResult {
  BenchReport report;
  double max_feas = 0.0;  // over 500 directions, normalized coordinates
  double max_opt = 0.0;
  int feasible_samples = 0;
  int total_samples = 0;
  Polytope polytope;
  RegionPtr region;
};

AggregationResult run_aggregation_demo(int resources, int horizon,
                                       const TrainConfig& base);

}  // namespace polyfit

#endif  // POLYFIT_BENCHMARKS_HPP
