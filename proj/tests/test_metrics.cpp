#include <doctest.h>

#include <cstring>

#include "polyfit/metrics.hpp"
#include "polyfit/rng.hpp"
#include "test_helpers.hpp"

using namespace polyfit;
using testutil::box_system;

namespace {

const VectorXd kNoTheta;

Polytope box_poly(double lo, double hi) {
  const auto sys = box_system(2, lo, hi);
  return make_polytope(sys.G, sys.h);
}

VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("nested boxes, corner direction") {
  const auto P = box_poly(0, 2);
  const auto region = make_hypercube(2, 0.0, 1.0);
  const auto s = dir_errors(P, *region, kNoTheta, vec2(1, 1));
  CHECK((s.poly_support - vec2(2, 2)).norm() < 1e-9);
  CHECK((s.region_closest - vec2(1, 1)).norm() < 1e-9);
  CHECK(s.feas_err == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(s.opt_err == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("nested boxes, roles swapped") {
  const auto P = box_poly(0, 1);
  const auto region = make_hypercube(2, 0.0, 2.0);
  const auto s = dir_errors(P, *region, kNoTheta, vec2(1, 1));
  CHECK(s.feas_err == doctest::Approx(0.0).epsilon(1e-10));
  CHECK((s.region_support - vec2(2, 2)).norm() < 1e-9);
  CHECK((s.poly_closest - vec2(1, 1)).norm() < 1e-8);
  CHECK(s.opt_err == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("identical sets have zero errors") {
  const auto P = box_poly(0, 1);
  const auto region = make_hypercube(2, 0.0, 1.0);
  Rng rng(3);
  for (int k = 0; k < 25; ++k) {
    const auto s = dir_errors(P, *region, kNoTheta, rng.direction(2));
    CHECK(s.feas_err < 1e-12);
    CHECK(s.opt_err < 1e-12);
  }
}

TEST_CASE("containment: inner polytope has zero feasibility error") {
  const auto P = box_poly(0.2, 0.8);
  const auto region = make_hypercube(2, 0.0, 1.0);
  const auto est = estimate_errors(P, *region, kNoTheta, 500, 99);
  CHECK(est.max_feas == doctest::Approx(0.0));
  CHECK(est.mean_feas == doctest::Approx(0.0));
}

TEST_CASE("containment: outer polytope has zero optimality error") {
  const auto P = box_poly(-0.5, 1.5);
  const auto region = make_hypercube(2, 0.0, 1.0);
  const auto est = estimate_errors(P, *region, kNoTheta, 500, 99);
  CHECK(est.max_opt < 1e-16);
}

TEST_CASE("monte-carlo mean matches angular quadrature on nested boxes") {
  const auto P = box_poly(0, 2);
  const auto region = make_hypercube(2, 0.0, 1.0);

  // independent oracle: dense quadrature over the angle; polytope support
  // by brute force over the four corners, projection by clamping
  const MatrixXd corners = (MatrixXd(4, 2) << 0, 0, 2, 0, 0, 2, 2, 2).finished();
  const int quad_n = 100000;
  double quad = 0.0;
  for (int k = 0; k < quad_n; ++k) {
    const double a = 2.0 * M_PI * (k + 0.5) / quad_n;
    const VectorXd v = vec2(std::cos(a), std::sin(a));
    int best = 0;
    for (int i = 1; i < 4; ++i)
      if (corners.row(i).dot(v) > corners.row(best).dot(v)) best = i;
    const VectorXd xp = corners.row(best);
    const VectorXd zs = xp.cwiseMax(0.0).cwiseMin(1.0);
    quad += (zs - xp).squaredNorm();
  }
  quad /= quad_n;
  CHECK(quad == doctest::Approx(1.0).epsilon(1e-6));  // exact value is 1

  const auto est = estimate_errors(P, *region, kNoTheta, 10000, 2024);
  CHECK(std::abs(est.mean_feas - quad) < 0.04);  // ~5 standard errors
}

TEST_CASE("scale consistency: errors scale with c^2") {
  const auto P1 = box_poly(0, 2);
  const auto R1 = make_hypercube(2, 0.0, 1.0);
  const auto P2 = box_poly(0, 4);
  const auto R2 = make_hypercube(2, 0.0, 2.0);
  const auto e1 = estimate_errors(P1, *R1, kNoTheta, 300, 5);
  const auto e2 = estimate_errors(P2, *R2, kNoTheta, 300, 5);
  CHECK(e2.mean_feas == doctest::Approx(4.0 * e1.mean_feas).epsilon(1e-6));
  CHECK(e2.max_feas == doctest::Approx(4.0 * e1.max_feas).epsilon(1e-6));
}

TEST_CASE("containment soundness: vertices inside a convex region") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto sys = testutil::random_bounded_2d(rng, 3);
    MatrixXd A = sys.G;
    VectorXd b = sys.h;
    normalize_rows_in_place(A, b);
    const auto P = make_polytope(A, b);
    const auto region = make_hypersphere(2, 4.0);  // every vertex is inside
    const auto est = estimate_errors(P, *region, kNoTheta, 100, trial);
    CHECK(est.max_feas < 1e-12);
  }
}

TEST_CASE("optimality error sees only the convex hull of the cut disk") {
  DiskDifferenceSpec spec;
  spec.center = {AffineScalar(0.0), AffineScalar(0.0)};
  spec.radius = AffineScalar(1.0);
  spec.cut_center = {AffineScalar(1.0), AffineScalar(0.0)};
  spec.cut_radius = AffineScalar(0.5);
  const auto region = make_disk_difference(spec);

  const auto P = box_poly(-0.6, 0.6);
  Rng rng(13);
  for (int k = 0; k < 100; ++k) {
    const VectorXd v = rng.direction(2);
    const auto s = dir_errors(P, *region, kNoTheta, v);

    // hull support: extreme points are the kept rim arc and the two
    // circle-intersection corners (the concave arc is not extremal)
    const Eigen::Vector2d vhat = v.head<2>() / v.norm();
    Eigen::Vector2d zh;
    const Eigen::Vector2d rim = vhat;
    if ((rim - Eigen::Vector2d(1, 0)).norm() >= 0.5) {
      zh = rim;
    } else {
      const Eigen::Vector2d qp(0.875, std::sqrt(1.0 - 0.875 * 0.875));
      const Eigen::Vector2d qm(0.875, -qp.y());
      zh = v.head<2>().dot(qp) >= v.head<2>().dot(qm) ? qp : qm;
    }
    const double e_opt_hull =
        (project_pt(P, zh) - VectorXd(zh)).squaredNorm();
    CHECK(std::abs(s.opt_err - e_opt_hull) < 1e-8);
  }
}

TEST_CASE("seeded estimates are bitwise reproducible") {
  const auto P = box_poly(0, 2);
  const auto region = make_hypersphere(2, 1.0);
  const auto a = estimate_errors(P, *region, kNoTheta, 200, 4242);
  const auto b = estimate_errors(P, *region, kNoTheta, 200, 4242);
  CHECK(std::memcmp(&a.mean_feas, &b.mean_feas, sizeof(double)) == 0);
  CHECK(std::memcmp(&a.mean_opt, &b.mean_opt, sizeof(double)) == 0);
  CHECK(std::memcmp(&a.max_feas, &b.max_feas, sizeof(double)) == 0);
  CHECK(std::memcmp(&a.max_opt, &b.max_opt, sizeof(double)) == 0);
}

TEST_CASE("zero direction is rejected") {
  const auto P = box_poly(0, 1);
  const auto region = make_hypercube(2, 0.0, 1.0);
  CHECK_THROWS_AS(dir_errors(P, *region, kNoTheta, vec2(0, 0)), UsageError);
}

TEST_SUITE_END();
