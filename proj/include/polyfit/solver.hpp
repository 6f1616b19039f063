#ifndef POLYFIT_SOLVER_HPP
#define POLYFIT_SOLVER_HPP

#include <optional>
#include <vector>

#include "polyfit/common.hpp"

namespace polyfit {

/// Inequality system G x <= h.
struct LinearSystem {
  MatrixXd G;
  VectorXd h;

  int rows() const { return static_cast<int>(G.rows()); }
  int cols() const { return static_cast<int>(G.cols()); }

  /// Throws UsageError on shape mismatch, non-finite entries or zero rows.
  void validate() const;
};

enum class LpStatus { Optimal, Unbounded, Infeasible };

struct LpOutcome {
  LpStatus status = LpStatus::Infeasible;
  std::optional<VectorXd> point;
  std::optional<double> value;
};

/// Shared numeric knobs. Values sit well below the error magnitudes the
/// fitted polytopes are expected to reach after coordinate normalization.
struct SolverConfig {
  double feas_tol = 1e-8;
  double value_tol = 1e-9;
  double qp_gap_tol = 1e-10;
  int qp_max_sweeps = 100000;
  int lp_max_pivots = 50000;
};

const SolverConfig& default_solver_config();

/// Maximizes objective . x over {x | G x <= h} with x free, by dense
/// revised two-phase simplex. Deterministic: Dantzig pricing with a Bland
/// fallback engaged on stalls, fixed tie-breaking everywhere.
LpOutcome solve_lp(const VectorXd& objective, const LinearSystem& sys,
                   const SolverConfig& cfg = default_solver_config());

/// Phase-1 feasibility probe: returns the minimal total constraint
/// violation over the system (0 when feasible).
double lp_infeasibility(const LinearSystem& sys,
                        const SolverConfig& cfg = default_solver_config());

/// Any feasible point of the system (phase-1 solution). Throws
/// InfeasibleError when none exists.
VectorXd feasible_point(const LinearSystem& sys,
                        const SolverConfig& cfg = default_solver_config());

/// Euclidean projection restricted to selected coordinates: minimizes
/// ||x_selector - target||^2 over {x | G x <= h} and returns the selected
/// sub-vector. Hildreth dual coordinate ascent; when the selector is a
/// proper subset, the unselected block is handled by an outer proximal
/// loop around the same ascent.
VectorXd project_qp(const VectorXd& target, const LinearSystem& sys,
                    const std::vector<int>& selector,
                    const SolverConfig& cfg = default_solver_config());

/// Full-coordinate projection.
VectorXd project_qp(const VectorXd& target, const LinearSystem& sys,
                    const SolverConfig& cfg = default_solver_config());

/// Selector projection reusing a caller-cached reference point for the
/// unselected block (skips the phase-1 probe; the caller vouches that the
/// system is feasible).
VectorXd project_qp_anchored(const VectorXd& target, const LinearSystem& sys,
                             const std::vector<int>& selector,
                             const VectorXd& anchor,
                             const SolverConfig& cfg = default_solver_config());

struct ChebyshevResult {
  VectorXd center;
  double radius = 0.0;
};

/// Largest inscribed ball of {x | G x <= h}; rows of G must be
/// unit-normalized. Throws EmptyPolytopeError when the system is empty.
ChebyshevResult chebyshev_center(const LinearSystem& sys,
                                 const SolverConfig& cfg = default_solver_config());

/// Signed feasibility margin: optimum of max r s.t. G x + r ||G_i|| <= h
/// with r free. Positive for full-dimensional systems, negative by the
/// minimal uniform inflation of h that would make the system feasible.
double feasibility_margin(const LinearSystem& sys,
                          const SolverConfig& cfg = default_solver_config());

}  // namespace polyfit

#endif  // POLYFIT_SOLVER_HPP
