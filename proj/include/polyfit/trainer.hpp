#ifndef POLYFIT_TRAINER_HPP
#define POLYFIT_TRAINER_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "polyfit/metrics.hpp"
#include "polyfit/polytope.hpp"
#include "polyfit/regions.hpp"
#include "polyfit/rng.hpp"

namespace polyfit {

/// One segment of the lambda schedule. lr < 0 inherits the global rate.
struct Phase {
  double lambda = 0.5;
  int iters = 0;
  double lr = -1.0;
};

/// Default schedule: balancing, refining, converging.
std::vector<Phase> default_phases();

struct TrainConfig {
  int facets = 0;  // M; 0 derives 2n from the region
  std::vector<Phase> phases = default_phases();
  double lr = 1e-2;
  double lr_decay = 1.0;  // multiplicative, applied per iteration
  double lr_min = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch = 8;
  double act_tol = 1e-6;
  int hidden = 128;  // parameterized models only
  int eval_every = 50;
  int eval_dirs = 200;
  std::uint64_t seed = 1;
  double conv_tol = 1e-5;
  int patience = 3;
  bool normalize_inputs = true;
  int snapshot_every = 0;  // 0 disables (A, b) snapshots in the history
  // Facet recycling: a row inactive for this many iterations is reseeded
  // onto the worst sampled feasibility-error direction at its outer
  // support offset. 0 disables.
  int reseed_after = 500;
  // Optimizer warm restarts: moments are cleared every this many
  // iterations. Stale moments turn rarely-active rows into undamped
  // random walkers; a periodic reset lets them re-adapt. 0 disables.
  int adam_reset_every = 2000;

  void validate() const;
};

struct IterRecord {
  int iter = 0;
  double lambda = 0.0;
  double e_feas = 0.0;  // batch-mean sampled directional errors
  double e_opt = 0.0;
  double loss = 0.0;
  double grad_norm = 0.0;
};

struct EvalRecord {
  int iter = 0;
  double lambda = 0.0;
  ErrorEstimate est;
  double weighted = 0.0;
};

enum class TrainStatus { Converged, ScheduleComplete, Aborted };

struct Snapshot {
  int iter = 0;
  MatrixXd A;
  VectorXd b;
};

struct TrainHistory {
  std::vector<IterRecord> iters;
  std::vector<EvalRecord> evals;
  std::vector<Snapshot> snapshots;
  TrainStatus status = TrainStatus::ScheduleComplete;
  std::string message;
  int iterations_used = 0;
  int steps_to_converge = -1;  // first iter whose eval met conv_tol, -1 if never
};

/// Adam state over a flat parameter vector.
struct AdamState {
  VectorXd m;
  VectorXd v;
  long step = 0;
};

/// Standard Adam update with bias correction; deterministic.
void adam_step(VectorXd& params, const VectorXd& grads, AdamState& state,
               double lr, double beta1, double beta2, double eps);

/// Adam with a per-parameter learning-rate multiplier.
void adam_step_scaled(VectorXd& params, const VectorXd& grads, AdamState& state,
                      double lr, const VectorXd& lr_scale, double beta1,
                      double beta2, double eps);

/// Outer-approximation initialization: rows of A0 are normalized and each
/// offset is set to the region's support value along that row, so the
/// region is contained in the result. The region must already live in the
/// coordinates of `norm` (pass the identity for unnormalized use).
Polytope init_outer(const Region& region, const VectorXd& theta0,
                    const MatrixXd& A0, const Normalizer& norm);

struct LossGrads {
  double loss = 0.0;
  MatrixXd grad_A;
  VectorXd grad_b;
};

/// Active-set loss on fixed index sets and fixed projection/support points:
///   lambda ||A_J z_star - b_J||^2 + (1-lambda) ||A_K z_prime - b_K||^2
/// with its exact gradients in A and b. Rows in both sets accumulate both
/// contributions.
LossGrads loss_terms(const MatrixXd& A, const VectorXd& b,
                     const std::vector<int>& rows_feas, const VectorXd& z_star,
                     const std::vector<int>& rows_opt, const VectorXd& z_prime,
                     double lambda);

/// Loss and gradients for one directional sample; the feasibility set is
/// the rows active at the polytope support point, the optimality set the
/// rows active at the projection of the region support point.
LossGrads loss_and_grads(const Polytope& P, const DirectionalSample& sample,
                         double lambda, double act_tol);

struct FitResult {
  Polytope polytope;
  TrainHistory history;
};

/// Fixed-region training loop: sample directions, form the active-set
/// loss, Adam-update (A, b), renormalize rows, keep the polytope nonempty.
/// A0 overrides the initial directions (offsets still come from the outer
/// initialization); P0 bypasses the outer initialization entirely and
/// training continues from it, in the coordinates of P0's normalizer.
FitResult fit(const RegionPtr& region, const VectorXd& theta0,
              const TrainConfig& config,
              const std::optional<MatrixXd>& A0 = std::nullopt,
              const std::optional<Polytope>& P0 = std::nullopt);

/// Default initial directions: +-axes first, uniform random unit rows past 2n.
MatrixXd default_init_directions(int M, int n, Rng& rng);

/// Random antipodal pairs (positively spanning, so the outer init is
/// bounded); used by the multi-dimensional benchmark suites.
MatrixXd random_pair_directions(int M, int n, Rng& rng);

}  // namespace polyfit

#endif  // POLYFIT_TRAINER_HPP
