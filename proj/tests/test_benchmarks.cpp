#include <doctest.h>

#include "polyfit/benchmarks.hpp"
#include "test_helpers.hpp"

using namespace polyfit;

namespace {
const VectorXd kNoTheta;
}

TEST_SUITE_BEGIN("benchmarks");

TEST_CASE("hypersphere ideal error formula") {
  CHECK(hypersphere_ideal_error(4) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(hypersphere_ideal_error(1) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("fleet resources are nonempty and share the horizon") {
  const auto fleet = make_fleet(6, 4, 99);
  REQUIRE(fleet.size() == 6);
  for (const auto& r : fleet) {
    CHECK(r.cols() == 4);
    CHECK_NOTHROW(feasible_point(r));
  }
}

TEST_CASE("hit-and-run samples stay inside and reproduce bitwise") {
  const auto sys = testutil::random_bounded_2d(*[] {
    static Rng rng(8);
    return &rng;
  }(), 3);
  MatrixXd A = sys.G;
  VectorXd b = sys.h;
  normalize_rows_in_place(A, b);
  const auto P = make_polytope(A, b);
  const MatrixXd s1 = hit_and_run(P, 200, 1000, 42);
  const MatrixXd s2 = hit_and_run(P, 200, 1000, 42);
  CHECK((s1.array() == s2.array()).all());
  for (int k = 0; k < s1.rows(); ++k)
    CHECK(membership_violation(P, s1.row(k).transpose()) <= 1e-9);
  // a different seed explores different points
  const MatrixXd s3 = hit_and_run(P, 200, 1000, 43);
  CHECK((s1 - s3).cwiseAbs().maxCoeff() > 1e-6);
}

TEST_CASE("hull boundary samples support-match the hull") {
  const MatrixXd pts = disk_diff_hull_boundary(4000);
  Rng rng(15);
  for (int k = 0; k < 50; ++k) {
    const VectorXd v = rng.unit_vec(2);
    double best = -1e9;
    for (int i = 0; i < pts.rows(); ++i)
      best = std::max(best, v.dot(pts.row(i).transpose()));
    CHECK(best <= disk_diff_hull_support(v) + 1e-9);
    // sampling is first-order accurate near the two hull corners
    CHECK(best >= disk_diff_hull_support(v) - 1e-3);
  }
}

TEST_CASE("one-dimensional hypercube is recovered exactly") {
  TrainConfig base;
  base.seed = 1;
  const auto reports = run_hypercube_suite({1}, base);
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].converged_error <= 1e-12);
}

TEST_CASE("single-resource aggregation matches fitting the resource directly") {
  const auto fleet = make_fleet(1, 2, 7);
  const auto as_sum = make_minkowski(fleet);
  AffineVector h;
  for (int i = 0; i < fleet[0].h.size(); ++i) h.push_back(AffineScalar(fleet[0].h[i]));
  const auto direct = make_lifted(fleet[0].G, h, {0, 1});

  TrainConfig cfg;
  cfg.facets = 8;
  cfg.seed = 3;
  cfg.phases = {{0.5, 800, 1e-2}, {0.5, 400, 1e-3}};
  cfg.conv_tol = 0.0;
  cfg.eval_every = 400;
  cfg.eval_dirs = 300;

  const auto fit_sum = fit(as_sum, kNoTheta, cfg);
  const auto fit_direct = fit(direct, kNoTheta, cfg);
  REQUIRE(fit_sum.history.status != TrainStatus::Aborted);
  REQUIRE(fit_direct.history.status != TrainStatus::Aborted);
  const double ws = fit_sum.history.evals.back().weighted;
  const double wd = fit_direct.history.evals.back().weighted;
  CHECK(ws < 2e-3);
  CHECK(wd < 2e-3);
  CHECK(std::abs(ws - wd) < 1e-3);
}

TEST_CASE("bench reports serialize deterministically") {
  BenchReport r;
  r.case_id = "demo";
  r.n = 2;
  r.facets = 4;
  r.init_error = 0.5;
  r.converged_error = 1.0 / 3.0;
  r.reduction = 1.0 / 3.0;
  r.iterations = 10;
  r.steps_to_converge = 5;
  r.wall_time_s = 123.456;  // must not appear in the CSV
  const std::string csv = bench_csv({r});
  CHECK(csv.find("123.45") == std::string::npos);
  CHECK(csv.find("demo,2,4,0.5,0.33333333333333331,,0.33333333333333331,10,5") !=
        std::string::npos);

  TrainConfig base;
  base.seed = 1;
  const auto a = run_hypercube_suite({2}, base);
  const auto b = run_hypercube_suite({2}, base);
  CHECK(bench_csv(a) == bench_csv(b));
}

TEST_SUITE_END();
