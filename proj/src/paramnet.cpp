#include "polyfit/paramnet.hpp"

#include <cmath>
#include <utility>

namespace polyfit {

namespace {

void check_net(const Mlp& net, int in, int hidden, int out, const std::string& name) {
  if (net.w1.rows() != hidden || net.w1.cols() != in || net.b1.size() != hidden ||
      net.w2.rows() != out || net.w2.cols() != hidden || net.b2.size() != out)
    throw UsageError(name + " has inconsistent shapes");
  if (!net.w1.allFinite() || !net.b1.allFinite() || !net.w2.allFinite() ||
      !net.b2.allFinite())
    throw UsageError(name + " has non-finite weights");
}

VectorXd relu(const VectorXd& x) { return x.cwiseMax(0.0); }

}  // namespace

void MlpParams::validate() const {
  if (theta_dim < 1) throw UsageError("parameterized model needs theta_dim >= 1");
  if (hidden < 1) throw UsageError("hidden width must be >= 1");
  if (facets < dim + 1) throw UsageError("parameterized model needs M >= n+1");
  box.validate();
  if (box.dim() != theta_dim) throw UsageError("theta box dimension mismatch");
  check_net(a_net, theta_dim, hidden, facets * dim, "A-net");
  check_net(b_net, theta_dim, hidden, facets, "b-net");
  if (norm.scale.size() != dim || norm.offset.size() != dim)
    throw UsageError("parameterized model normalizer has wrong dimension");
}

ForwardCache forward(const MlpParams& net, const VectorXd& theta) {
  if (theta.size() != net.theta_dim)
    throw UsageError("theta has wrong dimension for the parameterized model");
  ForwardCache c;
  c.theta_norm =
      (theta - net.box.lower).cwiseQuotient(net.box.upper - net.box.lower);

  c.pre_a = net.a_net.w1 * c.theta_norm + net.a_net.b1;
  c.hid_a = relu(c.pre_a);
  const VectorXd out_a = net.a_net.w2 * c.hid_a + net.a_net.b2;

  c.pre_b = net.b_net.w1 * c.theta_norm + net.b_net.b1;
  c.hid_b = relu(c.pre_b);
  c.b_raw = net.b_net.w2 * c.hid_b + net.b_net.b2;

  c.A_raw.resize(net.facets, net.dim);
  for (int j = 0; j < net.facets; ++j)
    for (int k = 0; k < net.dim; ++k) c.A_raw(j, k) = out_a[j * net.dim + k];

  c.row_norms.resize(net.facets);
  for (int j = 0; j < net.facets; ++j) c.row_norms[j] = c.A_raw.row(j).norm();
  return c;
}

Polytope emit(const MlpParams& net, const ForwardCache& cache) {
  MatrixXd A = cache.A_raw;
  VectorXd b = cache.b_raw;
  normalize_rows_in_place(A, b);
  return make_polytope(std::move(A), std::move(b), net.norm);
}

MlpGrads backward(const MlpParams& net, const ForwardCache& cache,
                  const MatrixXd& grad_A, const VectorXd& grad_b) {
  if (grad_A.rows() != net.facets || grad_A.cols() != net.dim ||
      grad_b.size() != net.facets)
    throw UsageError("backward: gradient shapes do not match the model");

  // through the row normalization u = r/|r|, beta = b_raw/|r|
  VectorXd gout_a(net.facets * net.dim);
  VectorXd gout_b(net.facets);
  for (int j = 0; j < net.facets; ++j) {
    const double n = cache.row_norms[j];
    if (n < 1e-12) throw InternalError("backward through a vanishing row norm");
    const VectorXd u = cache.A_raw.row(j).transpose() / n;
    const double beta = cache.b_raw[j] / n;
    const VectorXd ga = grad_A.row(j).transpose();
    const VectorXd graw = (ga - ga.dot(u) * u) / n - (grad_b[j] * beta / n) * u;
    for (int k = 0; k < net.dim; ++k) gout_a[j * net.dim + k] = graw[k];
    gout_b[j] = grad_b[j] / n;
  }

  auto net_backward = [&](const Mlp& m, const VectorXd& pre, const VectorXd& hid,
                          const VectorXd& gout) {
    Mlp g;
    g.w2 = gout * hid.transpose();
    g.b2 = gout;
    VectorXd delta = m.w2.transpose() * gout;
    for (int i = 0; i < delta.size(); ++i)
      if (pre[i] <= 0.0) delta[i] = 0.0;
    g.w1 = delta * cache.theta_norm.transpose();
    g.b1 = delta;
    return g;
  };

  MlpGrads out;
  out.a_net = net_backward(net.a_net, cache.pre_a, cache.hid_a, gout_a);
  out.b_net = net_backward(net.b_net, cache.pre_b, cache.hid_b, gout_b);
  return out;
}

MlpParams init_param_net(int theta_dim, int hidden, const Polytope& P0,
                         const ThetaBox& box, Rng& rng) {
  MlpParams net;
  net.theta_dim = theta_dim;
  net.hidden = hidden;
  net.facets = P0.facets();
  net.dim = P0.dim();
  net.box = box;
  net.norm = P0.norm;

  auto zero_net = [&](int out) {
    Mlp m;
    m.w1 = MatrixXd::Zero(hidden, theta_dim);
    m.b1 = VectorXd::Zero(hidden);
    for (int i = 0; i < hidden; ++i) m.b1[i] = rng.uniform(0.25, 0.75);
    m.w2 = MatrixXd::Zero(out, hidden);
    m.b2 = VectorXd::Zero(out);
    return m;
  };
  net.a_net = zero_net(net.facets * net.dim);
  net.b_net = zero_net(net.facets);
  for (int j = 0; j < net.facets; ++j)
    for (int k = 0; k < net.dim; ++k)
      net.a_net.b2[j * net.dim + k] = P0.A(j, k);
  net.b_net.b2 = P0.b;
  net.validate();
  return net;
}

namespace {

struct WeightPack {
  static int size(const MlpParams& n) {
    auto one = [](const Mlp& m) {
      return m.w1.size() + m.b1.size() + m.w2.size() + m.b2.size();
    };
    return static_cast<int>(one(n.a_net) + one(n.b_net));
  }
  static void pack_net(const Mlp& m, VectorXd& p, int& k) {
    for (int i = 0; i < m.w1.rows(); ++i)
      for (int j = 0; j < m.w1.cols(); ++j) p[k++] = m.w1(i, j);
    for (int i = 0; i < m.b1.size(); ++i) p[k++] = m.b1[i];
    for (int i = 0; i < m.w2.rows(); ++i)
      for (int j = 0; j < m.w2.cols(); ++j) p[k++] = m.w2(i, j);
    for (int i = 0; i < m.b2.size(); ++i) p[k++] = m.b2[i];
  }
  static void unpack_net(Mlp& m, const VectorXd& p, int& k) {
    for (int i = 0; i < m.w1.rows(); ++i)
      for (int j = 0; j < m.w1.cols(); ++j) m.w1(i, j) = p[k++];
    for (int i = 0; i < m.b1.size(); ++i) m.b1[i] = p[k++];
    for (int i = 0; i < m.w2.rows(); ++i)
      for (int j = 0; j < m.w2.cols(); ++j) m.w2(i, j) = p[k++];
    for (int i = 0; i < m.b2.size(); ++i) m.b2[i] = p[k++];
  }
  static VectorXd pack(const MlpParams& n) {
    VectorXd p(size(n));
    int k = 0;
    pack_net(n.a_net, p, k);
    pack_net(n.b_net, p, k);
    return p;
  }
  static VectorXd pack(const MlpGrads& g, const MlpParams& shape) {
    VectorXd p(size(shape));
    int k = 0;
    pack_net(g.a_net, p, k);
    pack_net(g.b_net, p, k);
    return p;
  }
  static void unpack(MlpParams& n, const VectorXd& p) {
    int k = 0;
    unpack_net(n.a_net, p, k);
    unpack_net(n.b_net, p, k);
  }
};

}  // namespace

ParamFitResult fit_parameterized(const RegionPtr& region, const ThetaBox& box,
                                 const TrainConfig& config) {
  config.validate();
  box.validate();
  if (region->theta_dim() != box.dim())
    throw UsageError("theta box dimension does not match the region family");
  const int n = region->dim();
  const int M = config.facets > 0 ? config.facets : 2 * n;
  const VectorXd theta_c = box.center();

  const Normalizer norm = config.normalize_inputs
                              ? fit_normalizer(*region, theta_c)
                              : Normalizer::identity(n);
  const RegionPtr target =
      config.normalize_inputs ? normalized_region(region, norm) : region;

  Rng init_rng(mix_seed(config.seed, 17));
  const Polytope P0 = init_outer(
      *target, theta_c, default_init_directions(M, n, init_rng), norm);
  MlpParams net = init_param_net(box.dim(), config.hidden, P0, box, init_rng);

  TrainHistory hist;
  Rng dir_rng(mix_seed(config.seed, 23));
  Rng theta_rng(mix_seed(config.seed, 29));
  // Output weights fan in `hidden` active units, so a per-weight step of
  // lr moves the emitted rows ~hidden times faster than the bias path;
  // scaling their rate by 1/hidden keeps the output dynamics at the same
  // scale as direct (A, b) training.
  AdamState adam;
  VectorXd lr_scale;

  // training sandbox, as in the fixed-region loop
  MatrixXd sandbox_A(2 * n, n);
  VectorXd sandbox_b(2 * n);
  {
    VectorXd lo, hi;
    bounding_box(*target, theta_c, lo, hi);
    const double pad = (hi - lo).maxCoeff();
    for (int i = 0; i < n; ++i) {
      sandbox_A.row(2 * i) = VectorXd::Unit(n, i).transpose();
      sandbox_b[2 * i] = hi[i] + pad;
      sandbox_A.row(2 * i + 1) = -VectorXd::Unit(n, i).transpose();
      sandbox_b[2 * i + 1] = -(lo[i] - pad);
    }
  }
  auto with_sandbox = [&](const Polytope& Q) {
    MatrixXd A(M + 2 * n, n);
    A << Q.A, sandbox_A;
    VectorXd b(M + 2 * n);
    b << Q.b, sandbox_b;
    return make_polytope(std::move(A), std::move(b), Q.norm);
  };
  VectorXd anchor;
  {
    VectorXd lo, hi;
    bounding_box(*target, theta_c, lo, hi);
    anchor = target->project(theta_c, 0.5 * (lo + hi));
  }

  int global_iter = 0;
  int eval_idx = 0;
  int streak = 0;
  bool stop = false;

  auto run_eval = [&](double lambda, bool sandboxed) {
    EvalRecord rec;
    rec.iter = global_iter;
    rec.lambda = lambda;
    const Polytope Pc = emit(net, forward(net, theta_c));
    rec.est = estimate_errors(sandboxed ? with_sandbox(Pc) : Pc, *target,
                              theta_c, config.eval_dirs,
                              mix_seed(config.seed, 1000 + eval_idx));
    ++eval_idx;
    rec.weighted = weighted_error(rec.est, lambda);
    hist.evals.push_back(rec);
    return rec.weighted;
  };

  run_eval(config.phases.front().lambda, true);

  for (const auto& phase : config.phases) {
    if (stop) break;
    const double base_lr = phase.lr > 0.0 ? phase.lr : config.lr;
    for (int it = 0; it < phase.iters && !stop; ++it) {
      ++global_iter;
      const double lr = std::max(
          config.lr_min,
          base_lr * std::pow(config.lr_decay, static_cast<double>(global_iter - 1)));
      if (config.adam_reset_every > 0 &&
          global_iter % config.adam_reset_every == 0)
        adam = AdamState{};

      const MlpParams snapshot = net;
      try {
        VectorXd theta(box.dim());
        for (int i = 0; i < box.dim(); ++i)
          theta[i] = theta_rng.uniform(box.lower[i], box.upper[i]);

        ForwardCache cache = forward(net, theta);
        Polytope P = emit(net, cache);
        // keep the emitted polytope nonempty: every facet must keep the
        // anchor point inside, repaired through the b-net output bias
        {
          const VectorXd floor = P.A * anchor;
          bool shifted = false;
          for (int j = 0; j < net.facets; ++j) {
            if (P.b[j] < floor[j] + 1e-9) {
              net.b_net.b2[j] += (floor[j] + 1e-9 - P.b[j]) * cache.row_norms[j];
              shifted = true;
            }
          }
          if (shifted) {
            cache = forward(net, theta);
            P = emit(net, cache);
          }
        }
        const Polytope Pt = with_sandbox(P);

        double loss = 0.0, ef = 0.0, eo = 0.0;
        MatrixXd gA = MatrixXd::Zero(M, n);
        VectorXd gb = VectorXd::Zero(M);
        for (int k = 0; k < config.batch; ++k) {
          const VectorXd v = dir_rng.direction(n);
          const DirectionalSample s = dir_errors(Pt, *target, theta, v);
          ActiveSet J = active_at(Pt, s.poly_support, config.act_tol);
          if (J.indices.empty() && s.feas_err > 1e-12) {
            J = active_at(Pt, s.poly_support, 1e3 * config.act_tol);
            if (J.indices.empty())
              throw InternalError(
                  "support point carries feasibility error but activates no "
                  "facet; emitted polytope state is inconsistent");
          }
          const ActiveSet K = active_at(Pt, s.poly_closest, config.act_tol);
          std::vector<int> Jm, Km;
          for (int j : J.indices)
            if (j < M) Jm.push_back(j);
          for (int k2 : K.indices)
            if (k2 < M) Km.push_back(k2);
          const LossGrads lg = loss_terms(P.A, P.b, Jm, s.region_closest, Km,
                                          s.region_support, phase.lambda);
          loss += lg.loss;
          ef += s.feas_err;
          eo += s.opt_err;
          gA += lg.grad_A;
          gb += lg.grad_b;
        }
        const double inv = 1.0 / config.batch;
        loss *= inv;
        ef *= inv;
        eo *= inv;
        gA *= inv;
        gb *= inv;
        if (!std::isfinite(loss)) throw InternalError("non-finite training loss");

        const MlpGrads wg = backward(net, cache, gA, gb);
        VectorXd params = WeightPack::pack(net);
        const VectorXd grads = WeightPack::pack(wg, net);
        if (lr_scale.size() != params.size()) {
          MlpGrads ones;
          auto fill = [&](const Mlp& shape) {
            Mlp m;
            m.w1 = MatrixXd::Ones(shape.w1.rows(), shape.w1.cols());
            m.b1 = VectorXd::Ones(shape.b1.size());
            m.w2 = MatrixXd::Constant(shape.w2.rows(), shape.w2.cols(),
                                      1.0 / config.hidden);
            m.b2 = VectorXd::Ones(shape.b2.size());
            return m;
          };
          ones.a_net = fill(net.a_net);
          ones.b_net = fill(net.b_net);
          lr_scale = WeightPack::pack(ones, net);
        }
        adam_step_scaled(params, grads, adam, lr, lr_scale, config.beta1,
                         config.beta2, config.adam_eps);
        WeightPack::unpack(net, params);

        IterRecord rec;
        rec.iter = global_iter;
        rec.lambda = phase.lambda;
        rec.e_feas = ef;
        rec.e_opt = eo;
        rec.loss = loss;
        rec.grad_norm = grads.norm();
        hist.iters.push_back(rec);
      } catch (const RuntimeError& e) {
        hist.status = TrainStatus::Aborted;
        hist.message = e.what();
        hist.iterations_used = global_iter;
        return ParamFitResult{snapshot, std::move(hist)};
      }

      if (global_iter % config.eval_every == 0) {
        const double weighted = run_eval(phase.lambda, true);
        if (weighted < config.conv_tol) {
          if (streak == 0 && hist.steps_to_converge < 0)
            hist.steps_to_converge = global_iter;
          if (++streak >= config.patience) {
            hist.status = TrainStatus::Converged;
            stop = true;
          }
        } else {
          streak = 0;
          hist.steps_to_converge = -1;
        }
      }
    }
  }

  hist.iterations_used = global_iter;
  if (hist.status != TrainStatus::Converged)
    hist.status = TrainStatus::ScheduleComplete;
  try {
    run_eval(config.phases.back().lambda, false);
  } catch (const UnboundedError&) {
    hist.status = TrainStatus::Aborted;
    hist.message = "emitted polytope is unbounded at the end of the schedule";
  }
  return ParamFitResult{std::move(net), std::move(hist)};
}

}  // namespace polyfit
