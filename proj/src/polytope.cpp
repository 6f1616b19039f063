#include "polyfit/polytope.hpp"

#include <string>
#include <utility>

namespace polyfit {

void Polytope::validate() const {
  if (A.rows() != b.size())
    throw UsageError("polytope has " + std::to_string(A.rows()) +
                     " rows but " + std::to_string(b.size()) + " offsets");
  if (A.rows() < A.cols() + 1)
    throw UsageError("polytope needs at least n+1 facets, got " +
                     std::to_string(A.rows()) + " for n=" +
                     std::to_string(A.cols()));
  if (!A.allFinite() || !b.allFinite())
    throw UsageError("polytope has non-finite entries");
  for (int i = 0; i < A.rows(); ++i) {
    const double nrm = A.row(i).norm();
    if (std::abs(nrm - 1.0) > 1e-12)
      throw UsageError("polytope row " + std::to_string(i) +
                       " is not unit-normalized (norm " + std::to_string(nrm) + ")");
  }
  if (norm.scale.size() != A.cols() || norm.offset.size() != A.cols())
    throw UsageError("polytope normalization map has wrong dimension");
  if ((norm.scale.array() <= 0.0).any())
    throw UsageError("polytope normalization scales must be positive");
}

Polytope make_polytope(MatrixXd A, VectorXd b, Normalizer norm) {
  Polytope P{std::move(A), std::move(b), std::move(norm)};
  P.validate();
  return P;
}

Polytope make_polytope(MatrixXd A, VectorXd b) {
  const int n = static_cast<int>(A.cols());
  return make_polytope(std::move(A), std::move(b), Normalizer::identity(n));
}

void normalize_rows_in_place(MatrixXd& A, VectorXd& b) {
  for (int i = 0; i < A.rows(); ++i) {
    const double nrm = A.row(i).norm();
    if (nrm < 1e-12)
      throw UsageError("cannot normalize zero row " + std::to_string(i));
    A.row(i) /= nrm;
    b[i] /= nrm;
  }
}

Polytope normalize_rows(Polytope P) {
  normalize_rows_in_place(P.A, P.b);
  return P;
}

VectorXd support_pt(const Polytope& P, const VectorXd& v, const SolverConfig& cfg) {
  if (v.size() != P.dim()) throw UsageError("support direction has wrong dimension");
  const LpOutcome out = solve_lp(v, P.system(), cfg);
  if (out.status == LpStatus::Unbounded)
    throw UnboundedError("polytope is unbounded along the query direction");
  if (out.status == LpStatus::Infeasible)
    throw EmptyPolytopeError("polytope is empty");
  return *out.point;
}

VectorXd project_pt(const Polytope& P, const VectorXd& z, const SolverConfig& cfg) {
  if (z.size() != P.dim()) throw UsageError("projection point has wrong dimension");
  return project_qp(z, P.system(), cfg);
}

ActiveSet active_at(const Polytope& P, const VectorXd& x, double act_tol) {
  ActiveSet s;
  s.point = x;
  const VectorXd r = P.A * x - P.b;
  for (int i = 0; i < r.size(); ++i)
    if (std::abs(r[i]) <= act_tol) s.indices.push_back(i);
  return s;
}

double membership_violation(const Polytope& P, const VectorXd& x) {
  return (P.A * x - P.b).maxCoeff();
}

ChebyshevResult chebyshev(const Polytope& P, const SolverConfig& cfg) {
  return chebyshev_center(P.system(), cfg);
}

}  // namespace polyfit
