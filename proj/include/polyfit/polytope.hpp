#ifndef POLYFIT_POLYTOPE_HPP
#define POLYFIT_POLYTOPE_HPP

#include <vector>

#include "polyfit/common.hpp"
#include "polyfit/solver.hpp"

namespace polyfit {

/// Affine map between raw coordinates and the normalized training space:
/// x_norm = (x_raw - offset) / scale, elementwise. Training uses a uniform
/// scale so that distances (and hence projections) transform exactly.
struct Normalizer {
  VectorXd scale;
  VectorXd offset;

  static Normalizer identity(int n) {
    return Normalizer{VectorXd::Ones(n), VectorXd::Zero(n)};
  }

  VectorXd to_norm(const VectorXd& raw) const {
    return (raw - offset).cwiseQuotient(scale);
  }
  VectorXd to_raw(const VectorXd& norm) const {
    return norm.cwiseProduct(scale) + offset;
  }
  bool is_uniform(double tol = 1e-12) const {
    return scale.size() == 0 ||
           (scale.array() - scale[0]).abs().maxCoeff() <= tol * std::abs(scale[0]);
  }
};

/// The learned polytope {x | A x <= b} in normalized coordinates, rows of
/// A unit-normalized, together with the input-space normalization.
struct Polytope {
  MatrixXd A;
  VectorXd b;
  Normalizer norm;

  int dim() const { return static_cast<int>(A.cols()); }
  int facets() const { return static_cast<int>(A.rows()); }

  LinearSystem system() const { return LinearSystem{A, b}; }

  /// Shape and row-norm invariants; M >= n+1 so a bounded nonempty
  /// polytope is representable.
  void validate() const;
};

Polytope make_polytope(MatrixXd A, VectorXd b, Normalizer norm);
Polytope make_polytope(MatrixXd A, VectorXd b);

/// Divides every row of A and the matching entry of b by the row norm.
/// The feasible set is unchanged. Throws on rows with norm < 1e-12.
void normalize_rows_in_place(MatrixXd& A, VectorXd& b);
Polytope normalize_rows(Polytope P);

/// argmax of v . x over the polytope. Throws UnboundedError when the
/// polytope is unbounded along v (a corrupted training state).
VectorXd support_pt(const Polytope& P, const VectorXd& v,
                    const SolverConfig& cfg = default_solver_config());

/// Euclidean projection of z onto the polytope.
VectorXd project_pt(const Polytope& P, const VectorXd& z,
                    const SolverConfig& cfg = default_solver_config());

struct ActiveSet {
  std::vector<int> indices;  // sorted rows with |A_j x - b_j| <= act_tol
  VectorXd point;
};

ActiveSet active_at(const Polytope& P, const VectorXd& x, double act_tol);

/// Largest violation of A x <= b at x; <= 0 means inside.
double membership_violation(const Polytope& P, const VectorXd& x);

ChebyshevResult chebyshev(const Polytope& P,
                          const SolverConfig& cfg = default_solver_config());

}  // namespace polyfit

#endif  // POLYFIT_POLYTOPE_HPP
