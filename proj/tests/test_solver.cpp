#include <doctest.h>

#include "polyfit/rng.hpp"
#include "polyfit/solver.hpp"
#include "test_helpers.hpp"

using namespace polyfit;
using testutil::box_system;
using testutil::random_bounded_2d;
using testutil::stack;
using testutil::vertex_enum_max;

namespace {

VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}

LinearSystem rows2(std::initializer_list<std::initializer_list<double>> g,
                   std::initializer_list<double> h) {
  LinearSystem sys;
  sys.G = MatrixXd(g.size(), g.begin()->size());
  int i = 0;
  for (const auto& row : g) {
    int j = 0;
    for (double x : row) sys.G(i, j++) = x;
    ++i;
  }
  sys.h = VectorXd(h.size());
  i = 0;
  for (double x : h) sys.h[i++] = x;
  return sys;
}

}  // namespace

TEST_SUITE_BEGIN("solver");

TEST_CASE("lp: box corner") {
  const auto out = solve_lp(vec2(1, 1), box_system(2, 0, 1));
  REQUIRE(out.status == LpStatus::Optimal);
  CHECK(*out.value == doctest::Approx(2.0).epsilon(1e-12));
  CHECK((*out.point - vec2(1, 1)).norm() < 1e-9);
}

TEST_CASE("lp: free coordinate is unbounded") {
  const auto sys = rows2({{1, 0}, {-1, 0}}, {0, 0});  // line x1 = 0
  const auto out = solve_lp(vec2(0, 1), sys);
  CHECK(out.status == LpStatus::Unbounded);
  CHECK(!out.point.has_value());
}

TEST_CASE("lp: contradictory bounds are infeasible") {
  const auto sys = rows2({{1, 0}, {-1, 0}}, {-1, 0});  // x1 <= -1, x1 >= 0
  const auto out = solve_lp(vec2(0, 1), sys);
  CHECK(out.status == LpStatus::Infeasible);
  CHECK(!out.point.has_value());
  CHECK(!out.value.has_value());
}

TEST_CASE("lp: dimension mismatch is a usage error") {
  VectorXd c(3);
  c << 1, 1, 1;
  CHECK_THROWS_AS(solve_lp(c, box_system(2, 0, 1)), UsageError);
}

TEST_CASE("lp: matches vertex enumeration on random 2d systems") {
  Rng rng(20240811);
  for (int trial = 0; trial < 100; ++trial) {
    const auto sys = random_bounded_2d(rng, 4);  // 8 rows total
    const VectorXd c = rng.unit_vec(2);
    const auto out = solve_lp(c, sys);
    REQUIRE(out.status == LpStatus::Optimal);
    const auto oracle = vertex_enum_max(c, sys);
    REQUIRE(oracle.has_value());
    CHECK(std::abs(*out.value - *oracle) < 1e-8);
  }
}

TEST_CASE("lp: deterministic, bitwise") {
  Rng rng(7);
  const auto sys = random_bounded_2d(rng, 3);
  const VectorXd c = rng.unit_vec(2);
  const auto a = solve_lp(c, sys);
  const auto b = solve_lp(c, sys);
  REQUIRE(a.status == b.status);
  CHECK(*a.value == *b.value);                          // bitwise
  CHECK(((*a.point).array() == (*b.point).array()).all());
}

TEST_CASE("lp feasibility probe") {
  CHECK(lp_infeasibility(box_system(2, 0, 1)) == doctest::Approx(0.0));
  const auto bad = rows2({{1, 0}, {-1, 0}}, {-1, 0});
  CHECK(lp_infeasibility(bad) > 0.5);
}

TEST_CASE("qp: symmetric halfspace") {
  const auto sys = rows2({{1, 1}}, {2});
  const VectorXd p = project_qp(vec2(2, 2), sys);
  CHECK((p - vec2(1, 1)).norm() < 1e-8);
}

TEST_CASE("qp: box clamp and interior fixed point") {
  const auto box = box_system(2, 0, 1);
  CHECK((project_qp(vec2(2, 2), box) - vec2(1, 1)).norm() < 1e-8);
  CHECK((project_qp(vec2(0.3, 0.7), box) - vec2(0.3, 0.7)).norm() < 1e-10);
}

TEST_CASE("qp: idempotent and feasible") {
  Rng rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    const auto sys = random_bounded_2d(rng, 3);
    const VectorXd z0 = 3.0 * rng.normal_vec(2);
    const VectorXd p1 = project_qp(z0, sys);
    CHECK(((sys.G * p1 - sys.h).array() <= 1e-8).all());
    const VectorXd p2 = project_qp(p1, sys);
    CHECK((p2 - p1).norm() < 1e-9);
  }
}

TEST_CASE("qp: selector over a lifted system") {
  // x = y1 + y2, y_i in [0,1]: projected interval for x is [0,2]
  LinearSystem sys = rows2({{1, -1, -1}, {-1, 1, 1}}, {0, 0});
  LinearSystem ybox;
  ybox.G = MatrixXd::Zero(4, 3);
  ybox.h = VectorXd::Zero(4);
  ybox.G(0, 1) = 1;  ybox.h[0] = 1;
  ybox.G(1, 1) = -1; ybox.h[1] = 0;
  ybox.G(2, 2) = 1;  ybox.h[2] = 1;
  ybox.G(3, 2) = -1; ybox.h[3] = 0;
  sys = stack(sys, ybox);

  VectorXd t(1);
  t << 3.0;
  VectorXd p = project_qp(t, sys, std::vector<int>{0});
  CHECK(p.size() == 1);
  CHECK(p[0] == doctest::Approx(2.0).epsilon(1e-7));

  t << 0.7;
  p = project_qp(t, sys, std::vector<int>{0});
  CHECK(p[0] == doctest::Approx(0.7).epsilon(1e-7));
}

TEST_CASE("qp: infeasible region raises") {
  const auto bad = rows2({{1, 0}, {-1, 0}}, {-1, 0});
  CHECK_THROWS_AS(project_qp(vec2(0, 0), bad), InfeasibleError);
}

TEST_CASE("chebyshev: unit box") {
  const auto res = chebyshev_center(box_system(2, 0, 1));
  CHECK(res.radius == doctest::Approx(0.5).epsilon(1e-9));
  CHECK((res.center - vec2(0.5, 0.5)).norm() < 1e-8);
}

TEST_CASE("chebyshev: degenerate slab has radius zero") {
  const auto sys = rows2({{1, 0}, {-1, 0}, {0, 1}, {0, -1}}, {0, 0, 1, 0});
  const auto res = chebyshev_center(sys);
  CHECK(res.radius == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(std::abs(res.center[0]) < 1e-8);
}

TEST_CASE("chebyshev: empty polytope raises") {
  const auto bad = rows2({{1, 0}, {-1, 0}}, {-1, 0});
  CHECK_THROWS_AS(chebyshev_center(bad), EmptyPolytopeError);
}

TEST_CASE("feasibility margin is signed") {
  CHECK(feasibility_margin(box_system(2, 0, 1)) == doctest::Approx(0.5));
  const auto bad = rows2({{1, 0}, {-1, 0}, {0, 1}, {0, -1}}, {-1, 0, 1, 0});
  CHECK(feasibility_margin(bad) == doctest::Approx(-0.5));
}

TEST_SUITE_END();
