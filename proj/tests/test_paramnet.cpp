#include <doctest.h>

#include "polyfit/paramnet.hpp"
#include "test_helpers.hpp"

using namespace polyfit;

namespace {

const VectorXd kNoTheta;

ThetaBox unit_box(int p) {
  ThetaBox box;
  box.lower = VectorXd::Zero(p);
  box.upper = VectorXd::Ones(p);
  return box;
}

MlpParams tiny_net(Rng& rng, int M = 4, int n = 2, int H = 3, int p = 2) {
  MlpParams net;
  net.theta_dim = p;
  net.hidden = H;
  net.facets = M;
  net.dim = n;
  net.box = unit_box(p);
  net.norm = Normalizer::identity(n);
  auto rand_net = [&](int out) {
    Mlp m;
    m.w1 = MatrixXd::NullaryExpr(H, p, [&]() { return 0.4 * rng.normal(); });
    m.b1 = VectorXd::NullaryExpr(H, [&]() { return rng.uniform(0.1, 0.9); });
    m.w2 = MatrixXd::NullaryExpr(out, H, [&]() { return 0.3 * rng.normal(); });
    m.b2 = VectorXd::NullaryExpr(out, [&]() { return rng.normal(); });
    return m;
  };
  net.a_net = rand_net(M * n);
  net.b_net = rand_net(M);
  for (int j = 0; j < M; ++j) net.a_net.b2[j * n] += 3.0;  // nonzero rows
  net.validate();
  return net;
}

}  // namespace

TEST_SUITE_BEGIN("paramnet");

TEST_CASE("zero-weight init is exactly constant in theta") {
  const auto region = make_hypercube(2, 0.0, 1.0);
  ThetaBox box = unit_box(2);
  Rng rng(4);
  const Polytope P0 = init_outer(*region, kNoTheta,
                                 default_init_directions(6, 2, rng),
                                 Normalizer::identity(2));
  const MlpParams net = init_param_net(2, 16, P0, box, rng);
  const auto a = forward(net, box.lower);
  const auto b = forward(net, box.upper);
  CHECK((a.A_raw.array() == b.A_raw.array()).all());
  CHECK((a.b_raw.array() == b.b_raw.array()).all());
  const Polytope Pa = emit(net, a);
  CHECK((Pa.A - P0.A).cwiseAbs().maxCoeff() == 0.0);
  CHECK((Pa.b - P0.b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single hidden unit forward matches the hand computation") {
  MlpParams net;
  net.theta_dim = 1;
  net.hidden = 1;
  net.facets = 3;
  net.dim = 1;
  net.box = unit_box(1);
  net.norm = Normalizer::identity(1);
  // A-net: w1=2, b1=0.1, w2 per row, b2 per row
  net.a_net.w1 = MatrixXd::Constant(1, 1, 2.0);
  net.a_net.b1 = VectorXd::Constant(1, 0.1);
  net.a_net.w2 = (MatrixXd(3, 1) << 0.5, -1.0, 2.0).finished();
  net.a_net.b2 = (VectorXd(3) << 1.0, -2.0, 0.5).finished();
  net.b_net.w1 = MatrixXd::Constant(1, 1, -3.0);
  net.b_net.b1 = VectorXd::Constant(1, 0.4);
  net.b_net.w2 = (MatrixXd(3, 1) << 1.0, 1.0, -1.0).finished();
  net.b_net.b2 = (VectorXd(3) << 0.2, 0.0, 1.0).finished();

  VectorXd theta(1);
  theta << 0.3;  // theta_norm = 0.3 on the unit box
  const auto c = forward(net, theta);
  // hand: hidA = relu(2*0.3+0.1) = 0.7 ; out = w2*0.7 + b2
  CHECK(c.A_raw(0, 0) == doctest::Approx(0.5 * 0.7 + 1.0).epsilon(1e-15));
  CHECK(c.A_raw(1, 0) == doctest::Approx(-1.0 * 0.7 - 2.0).epsilon(1e-15));
  CHECK(c.A_raw(2, 0) == doctest::Approx(2.0 * 0.7 + 0.5).epsilon(1e-15));
  // hidB = relu(-3*0.3+0.4) = relu(-0.5) = 0 ; out = b2
  CHECK(c.b_raw[0] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(c.b_raw[1] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(c.b_raw[2] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("dead rectifier units pass no gradient") {
  Rng rng(17);
  MlpParams net = tiny_net(rng);
  // drive one hidden unit of the b-net into the dead zone
  net.b_net.b1[1] = -5.0;
  VectorXd theta(2);
  theta << 0.5, 0.5;
  const auto cache = forward(net, theta);
  REQUIRE(cache.pre_b[1] < 0.0);
  const MatrixXd gA = MatrixXd::Ones(net.facets, net.dim);
  const VectorXd gb = VectorXd::Ones(net.facets);
  const auto wg = backward(net, cache, gA, gb);
  CHECK(wg.b_net.w1.row(1).norm() == 0.0);
  CHECK(wg.b_net.b1[1] == 0.0);
}

TEST_CASE("backward matches finite differences through the normalization") {
  Rng rng(31);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    MlpParams net = tiny_net(rng);
    VectorXd theta(2);
    theta << rng.uniform01(), rng.uniform01();
    const VectorXd z_star = rng.normal_vec(2);
    const VectorXd z_prime = rng.normal_vec(2);
    const std::vector<int> J = {0, 3};
    const std::vector<int> K = {1, 2};
    const double lambda = 0.35;

    auto loss_of = [&](const MlpParams& w) {
      const auto c = forward(w, theta);
      const auto P = emit(w, c);
      return loss_terms(P.A, P.b, J, z_star, K, z_prime, lambda).loss;
    };
    const auto cache = forward(net, theta);
    const auto P = emit(net, cache);
    const auto lg = loss_terms(P.A, P.b, J, z_star, K, z_prime, lambda);
    const auto wg = backward(net, cache, lg.grad_A, lg.grad_b);

    const double h = 1e-6;
    auto fd_check = [&](double* w, double analytic) {
      const double saved = *w;
      *w = saved + h;
      const double fp = loss_of(net);
      *w = saved - h;
      const double fm = loss_of(net);
      *w = saved;
      const double fd = (fp - fm) / (2 * h);
      worst = std::max(worst, std::abs(analytic - fd) / std::max(1.0, std::abs(fd)));
    };
    for (int i = 0; i < 3; ++i) {
      fd_check(&net.a_net.w1(i, 0), wg.a_net.w1(i, 0));
      fd_check(&net.a_net.w2(2 * i, i), wg.a_net.w2(2 * i, i));
      fd_check(&net.a_net.b2(2 * i), wg.a_net.b2(2 * i));
      fd_check(&net.b_net.w2(i, i), wg.b_net.w2(i, i));
      fd_check(&net.b_net.b2(i), wg.b_net.b2(i));
      fd_check(&net.b_net.b1(i), wg.b_net.b1(i));
    }
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("collapsed theta box reduces to fixed-region training") {
  // degenerate family: the theta coefficients are zero, so every theta
  // emits the same region; the parameterized fit should land where the
  // fixed fit lands
  ThetaBox box;
  box.lower = VectorXd::Constant(1, 0.0);
  box.upper = VectorXd::Constant(1, 1e-9);
  const auto family = make_ellipse(AffineScalar(1.0, VectorXd::Zero(1)),
                                   AffineScalar(0.5, VectorXd::Zero(1)), {}, box);
  const auto fixed_region = make_ellipse(1.0, 0.5);

  TrainConfig cfg;
  cfg.facets = 6;
  cfg.seed = 5;
  cfg.phases = {{0.5, 2500, 1e-2}, {0.5, 1500, 1e-3}, {0.5, 1000, 2e-4}};
  cfg.conv_tol = 0.0;
  cfg.eval_every = 500;
  cfg.eval_dirs = 400;

  const auto param = fit_parameterized(family, box, cfg);
  REQUIRE(param.history.status != TrainStatus::Aborted);
  const auto fixed = fit(fixed_region, kNoTheta, cfg);
  REQUIRE(fixed.history.status != TrainStatus::Aborted);

  const double we_param = param.history.evals.back().weighted;
  const double we_fixed = fixed.history.evals.back().weighted;
  // same converged regime within Monte-Carlo and optimizer noise
  CHECK(we_param < 1e-2);
  CHECK(we_fixed < 1e-2);
  CHECK(std::abs(we_param - we_fixed) < 5e-3);
}

TEST_CASE("parameterized init is an outer approximation at the box center") {
  ThetaBox box;
  box.lower = VectorXd::Constant(1, -0.2);
  box.upper = VectorXd::Constant(1, 0.2);
  VectorXd ca(1);
  ca << 0.5;
  const auto family = make_ellipse(AffineScalar(1.0, ca), 0.5, {}, box);
  TrainConfig cfg;
  cfg.facets = 6;
  cfg.seed = 9;
  cfg.phases = {{0.5, 10, -1.0}};
  cfg.eval_every = 1000;  // only the init and final evals
  cfg.conv_tol = 0.0;
  const auto res = fit_parameterized(family, box, cfg);
  REQUIRE(!res.history.evals.empty());
  CHECK(res.history.evals.front().iter == 0);
  CHECK(res.history.evals.front().est.mean_opt <= 1e-12);
}

TEST_SUITE_END();
