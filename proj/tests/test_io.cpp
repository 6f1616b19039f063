#include <doctest.h>

#include <cstring>
#include <filesystem>

#include "polyfit/io.hpp"
#include "test_helpers.hpp"

using namespace polyfit;

namespace {

Polytope sample_polytope() {
  const auto sys = testutil::box_system(2, 0, 1);
  Normalizer norm;
  norm.scale = VectorXd::Constant(2, 2.5);
  norm.offset = (VectorXd(2) << -1.0, 0.25).finished();
  return make_polytope(sys.G, sys.h, norm);
}

}  // namespace

TEST_SUITE_BEGIN("io");

TEST_CASE("g17 formatting round-trips doubles exactly") {
  Rng rng(12);
  for (int k = 0; k < 2000; ++k) {
    const double x = rng.normal() * std::pow(10.0, rng.uniform(-12, 12));
    const double back = std::strtod(format_g17(x).c_str(), nullptr);
    CHECK(std::memcmp(&x, &back, sizeof(double)) == 0);
  }
}

TEST_CASE("model documents round-trip byte-identically") {
  ModelDocument model{sample_polytope(), std::nullopt};
  model.polytope.b[1] = 1.0 / 3.0;
  const std::string once = write_model_doc(model);
  const ModelDocument parsed = parse_model_doc(once);
  const std::string twice = write_model_doc(parsed);
  CHECK(once == twice);
  CHECK((parsed.polytope.A - model.polytope.A).cwiseAbs().maxCoeff() == 0.0);
  CHECK((parsed.polytope.norm.offset - model.polytope.norm.offset)
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("model documents carry the network block") {
  Rng rng(3);
  ModelDocument model{sample_polytope(), std::nullopt};
  MlpParams net;
  net.theta_dim = 2;
  net.hidden = 3;
  net.facets = model.polytope.facets();
  net.dim = model.polytope.dim();
  net.box.lower = VectorXd::Zero(2);
  net.box.upper = VectorXd::Ones(2);
  net.norm = model.polytope.norm;
  auto rand_net = [&](int out) {
    Mlp m;
    m.w1 = MatrixXd::NullaryExpr(3, 2, [&]() { return rng.normal(); });
    m.b1 = VectorXd::NullaryExpr(3, [&]() { return rng.normal(); });
    m.w2 = MatrixXd::NullaryExpr(out, 3, [&]() { return rng.normal(); });
    m.b2 = VectorXd::NullaryExpr(out, [&]() { return rng.normal(); });
    return m;
  };
  net.a_net = rand_net(net.facets * net.dim);
  net.b_net = rand_net(net.facets);
  model.mlp = net;

  const std::string once = write_model_doc(model);
  const ModelDocument parsed = parse_model_doc(once);
  REQUIRE(parsed.mlp.has_value());
  CHECK(write_model_doc(parsed) == once);
  CHECK((parsed.mlp->a_net.w1 - net.a_net.w1).cwiseAbs().maxCoeff() == 0.0);
  CHECK((parsed.mlp->b_net.b2 - net.b_net.b2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("model parsing rejects malformed documents") {
  CHECK_THROWS_AS(parse_model_doc("not json"), UsageError);
  CHECK_THROWS_AS(parse_model_doc("{\"schema\":2}"), UsageError);
  CHECK_THROWS_AS(
      parse_model_doc(
          R"({"schema":1,"n":2,"M":3,"A":[1,0,0,1,0,0],"b":[1,1],
              "norm":{"scale":[1,1],"offset":[0,0]}})"),
      UsageError);  // b has the wrong length
}

TEST_CASE("history and eval CSVs carry the pinned columns") {
  TrainHistory h;
  h.iters.push_back({1, 0.5, 0.25, 0.125, 0.3, 1.5});
  h.evals.push_back({1, 0.5, ErrorEstimate{0.1, 0.2, 0.3, 0.4, 100, 7}, 0.15});
  const std::string hist = history_csv(h);
  CHECK(hist.rfind("iter,lambda,e_feas,e_opt,loss,grad_norm\n", 0) == 0);
  CHECK(hist.find("1,0.5,0.25,0.125,0.29999999999999999,1.5") != std::string::npos);
  const std::string ev = eval_csv(h);
  CHECK(ev.rfind("iter,mean_feas,mean_opt,max_feas,max_opt\n", 0) == 0);
  CHECK(ev.find("0.40000000000000002") != std::string::npos);
}

TEST_CASE("atomic writes land complete files") {
  namespace fs = std::filesystem;
  const auto path = (fs::temp_directory_path() / "polyfit_io_test.txt").string();
  atomic_write_file(path, "hello\n");
  CHECK(read_file(path) == "hello\n");
  atomic_write_file(path, "replaced\n");
  CHECK(read_file(path) == "replaced\n");
  fs::remove(path);
  CHECK_THROWS_AS(read_file(path), UsageError);
}

TEST_SUITE_END();
