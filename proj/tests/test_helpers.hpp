#ifndef POLYFIT_TEST_HELPERS_HPP
#define POLYFIT_TEST_HELPERS_HPP

#include <limits>
#include <optional>
#include <vector>

#include "polyfit/common.hpp"
#include "polyfit/rng.hpp"
#include "polyfit/solver.hpp"

namespace testutil {

using polyfit::LinearSystem;
using polyfit::MatrixXd;
using polyfit::VectorXd;

/// Axis-aligned box lo <= x_i <= hi as 2n rows.
inline LinearSystem box_system(int n, double lo, double hi) {
  LinearSystem sys;
  sys.G = MatrixXd::Zero(2 * n, n);
  sys.h = VectorXd::Zero(2 * n);
  for (int i = 0; i < n; ++i) {
    sys.G(2 * i, i) = 1.0;
    sys.h[2 * i] = hi;
    sys.G(2 * i + 1, i) = -1.0;
    sys.h[2 * i + 1] = -lo;
  }
  return sys;
}

inline LinearSystem stack(const LinearSystem& a, const LinearSystem& b) {
  LinearSystem sys;
  sys.G = MatrixXd::Zero(a.G.rows() + b.G.rows(), a.G.cols());
  sys.G << a.G, b.G;
  sys.h = VectorXd::Zero(a.h.size() + b.h.size());
  sys.h << a.h, b.h;
  return sys;
}

/// Brute-force LP oracle for 2D systems: enumerates all row-pair vertex
/// intersections, filters feasible ones, maximizes the objective there.
/// Returns nothing when no feasible vertex exists.
inline std::optional<double> vertex_enum_max(const VectorXd& c,
                                             const LinearSystem& sys,
                                             double feas_tol = 1e-9) {
  const int m = sys.rows();
  double best = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      Eigen::Matrix2d M;
      M << sys.G(i, 0), sys.G(i, 1), sys.G(j, 0), sys.G(j, 1);
      if (std::abs(M.determinant()) < 1e-10) continue;
      Eigen::Vector2d rhs(sys.h[i], sys.h[j]);
      Eigen::Vector2d x = M.inverse() * rhs;
      if (((sys.G * x - sys.h).array() <= feas_tol).all()) {
        found = true;
        best = std::max(best, c.dot(x));
      }
    }
  }
  if (!found) return std::nullopt;
  return best;
}

/// Random bounded feasible 2D system: a box plus extra halfspaces kept
/// feasible at an interior anchor point.
inline LinearSystem random_bounded_2d(polyfit::Rng& rng, int extra_rows) {
  LinearSystem sys = box_system(2, -1.0, 1.0);
  const VectorXd anchor = 0.4 * rng.normal_vec(2).cwiseMin(1.0).cwiseMax(-1.0);
  for (int k = 0; k < extra_rows; ++k) {
    VectorXd g = rng.unit_vec(2);
    const double slack = 0.1 + 0.9 * rng.uniform01();
    LinearSystem row;
    row.G = g.transpose();
    row.h = VectorXd::Constant(1, g.dot(anchor) + slack);
    sys = stack(sys, row);
  }
  return sys;
}

}  // namespace testutil

#endif
