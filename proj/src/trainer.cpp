#include "polyfit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace polyfit {

std::vector<Phase> default_phases() {
  return {{0.5, 500, -1.0}, {0.9, 200, -1.0}, {0.9999, 100, -1.0}};
}

void TrainConfig::validate() const {
  if (phases.empty()) throw UsageError("training schedule has no phases");
  long total = 0;
  for (const auto& p : phases) {
    if (p.lambda < 0.0 || p.lambda > 1.0)
      throw UsageError("phase lambda must lie in [0,1]");
    if (p.iters < 0) throw UsageError("phase iteration count must be >= 0");
    total += p.iters;
  }
  if (total < 1) throw UsageError("schedule must cover at least one iteration");
  if (lr <= 0.0) throw UsageError("learning rate must be positive");
  if (lr_decay <= 0.0 || lr_decay > 1.0)
    throw UsageError("lr decay must lie in (0,1]");
  if (batch < 1) throw UsageError("batch size must be >= 1");
  if (eval_every < 1) throw UsageError("eval cadence must be >= 1");
  if (eval_dirs < 1) throw UsageError("eval direction count must be >= 1");
  if (patience < 1) throw UsageError("patience must be >= 1");
  if (act_tol <= 0.0) throw UsageError("active tolerance must be positive");
  if (reseed_after < 0) throw UsageError("reseed_after must be >= 0");
  if (adam_reset_every < 0) throw UsageError("adam_reset_every must be >= 0");
}

void adam_step(VectorXd& params, const VectorXd& grads, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
  if (params.size() != grads.size())
    throw UsageError("adam: parameter/gradient shapes differ");
  if (!grads.allFinite()) throw InternalError("adam: non-finite gradient");
  if (state.m.size() != params.size()) {
    state.m = VectorXd::Zero(params.size());
    state.v = VectorXd::Zero(params.size());
    state.step = 0;
  }
  ++state.step;
  state.m = beta1 * state.m + (1.0 - beta1) * grads;
  state.v = beta2 * state.v + (1.0 - beta2) * grads.cwiseProduct(grads);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  const VectorXd mhat = state.m / c1;
  const VectorXd vhat = state.v / c2;
  params -= lr * (mhat.array() / (vhat.array().sqrt() + eps)).matrix();
}

void adam_step_scaled(VectorXd& params, const VectorXd& grads, AdamState& state,
                      double lr, const VectorXd& lr_scale, double beta1,
                      double beta2, double eps) {
  if (lr_scale.size() != params.size())
    throw UsageError("adam: learning-rate scale has wrong shape");
  if (params.size() != grads.size())
    throw UsageError("adam: parameter/gradient shapes differ");
  if (!grads.allFinite()) throw InternalError("adam: non-finite gradient");
  if (state.m.size() != params.size()) {
    state.m = VectorXd::Zero(params.size());
    state.v = VectorXd::Zero(params.size());
    state.step = 0;
  }
  ++state.step;
  state.m = beta1 * state.m + (1.0 - beta1) * grads;
  state.v = beta2 * state.v + (1.0 - beta2) * grads.cwiseProduct(grads);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  const VectorXd mhat = state.m / c1;
  const VectorXd vhat = state.v / c2;
  params -= lr * (lr_scale.array() * mhat.array() /
                  (vhat.array().sqrt() + eps))
                     .matrix();
}

Polytope init_outer(const Region& region, const VectorXd& theta0,
                    const MatrixXd& A0, const Normalizer& norm) {
  if (A0.cols() != region.dim())
    throw UsageError("initial directions have wrong dimension");
  MatrixXd A = A0;
  VectorXd b = VectorXd::Zero(A.rows());
  normalize_rows_in_place(A, b);
  for (int j = 0; j < A.rows(); ++j)
    b[j] = region.support(theta0, A.row(j).transpose()).value;
  return make_polytope(std::move(A), std::move(b), norm);
}

LossGrads loss_terms(const MatrixXd& A, const VectorXd& b,
                     const std::vector<int>& rows_feas, const VectorXd& z_star,
                     const std::vector<int>& rows_opt, const VectorXd& z_prime,
                     double lambda) {
  LossGrads out;
  out.grad_A = MatrixXd::Zero(A.rows(), A.cols());
  out.grad_b = VectorXd::Zero(b.size());
  for (int j : rows_feas) {
    const double r = A.row(j).dot(z_star) - b[j];
    out.loss += lambda * r * r;
    out.grad_A.row(j) += lambda * 2.0 * r * z_star.transpose();
    out.grad_b[j] += -lambda * 2.0 * r;
  }
  for (int k : rows_opt) {
    const double r = A.row(k).dot(z_prime) - b[k];
    out.loss += (1.0 - lambda) * r * r;
    out.grad_A.row(k) += (1.0 - lambda) * 2.0 * r * z_prime.transpose();
    out.grad_b[k] += -(1.0 - lambda) * 2.0 * r;
  }
  return out;
}

LossGrads loss_and_grads(const Polytope& P, const DirectionalSample& sample,
                         double lambda, double act_tol) {
  const ActiveSet J = active_at(P, sample.poly_support, act_tol);
  if (J.indices.empty() && sample.feas_err > 1e-12)
    throw InternalError("support point carries feasibility error but activates "
                        "no facet; polytope state is inconsistent");
  const ActiveSet K = active_at(P, sample.poly_closest, act_tol);
  return loss_terms(P.A, P.b, J.indices, sample.region_closest, K.indices,
                    sample.region_support, lambda);
}

MatrixXd default_init_directions(int M, int n, Rng& rng) {
  MatrixXd A = MatrixXd::Zero(M, n);
  for (int j = 0; j < M; ++j) {
    if (j < 2 * n) {
      A(j, j / 2) = (j % 2 == 0) ? 1.0 : -1.0;
    } else {
      A.row(j) = rng.unit_vec(n).transpose();
    }
  }
  return A;
}

MatrixXd random_pair_directions(int M, int n, Rng& rng) {
  MatrixXd A = MatrixXd::Zero(M, n);
  for (int j = 0; j + 1 < M; j += 2) {
    const VectorXd u = rng.unit_vec(n);
    A.row(j) = u.transpose();
    A.row(j + 1) = -u.transpose();
  }
  if (M % 2 == 1) A.row(M - 1) = rng.unit_vec(n).transpose();
  return A;
}

namespace {

struct FlatParams {
  static VectorXd pack(const MatrixXd& A, const VectorXd& b) {
    VectorXd p(A.size() + b.size());
    int k = 0;
    for (int i = 0; i < A.rows(); ++i)
      for (int j = 0; j < A.cols(); ++j) p[k++] = A(i, j);
    p.tail(b.size()) = b;
    return p;
  }
  static void unpack(const VectorXd& p, MatrixXd& A, VectorXd& b) {
    int k = 0;
    for (int i = 0; i < A.rows(); ++i)
      for (int j = 0; j < A.cols(); ++j) A(i, j) = p[k++];
    b = p.tail(b.size());
  }
};

}  // namespace

FitResult fit(const RegionPtr& region, const VectorXd& theta0,
              const TrainConfig& config, const std::optional<MatrixXd>& A0,
              const std::optional<Polytope>& P0) {
  config.validate();
  const int n = region->dim();
  const int M = P0 ? P0->facets() : (config.facets > 0 ? config.facets : 2 * n);

  Normalizer norm;
  if (P0)
    norm = P0->norm;
  else if (config.normalize_inputs)
    norm = fit_normalizer(*region, theta0);
  else
    norm = Normalizer::identity(n);
  const bool identity_norm =
      (norm.scale.array() == 1.0).all() && (norm.offset.array() == 0.0).all();
  const RegionPtr target =
      identity_norm ? region : normalized_region(region, norm);

  Polytope P;
  if (P0) {
    P = *P0;
    P.validate();
  } else {
    Rng init_rng(mix_seed(config.seed, 17));
    const MatrixXd dirs = A0.value_or(default_init_directions(M, n, init_rng));
    if (dirs.rows() != M)
      throw UsageError("initial direction count does not match facet count");
    P = init_outer(*target, theta0, dirs, norm);
  }

  TrainHistory hist;
  Rng dir_rng(mix_seed(config.seed, 23));
  AdamState adam;

  // Training sandbox: the region's bounding box inflated by half its width
  // on each side. Support queries during training run on P intersected
  // with this box, so a polytope that transiently loses boundedness while
  // rows rotate keeps producing finite support points; the sandbox rows
  // are frozen and receive no gradient. A converged polytope hugs the
  // region and leaves the sandbox inactive.
  MatrixXd sandbox_A(2 * n, n);
  VectorXd sandbox_b(2 * n);
  {
    VectorXd lo, hi;
    bounding_box(*target, theta0, lo, hi);
    const double pad = 0.5 * (hi - lo).maxCoeff();
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

  // Anchor: a point of the region every trained facet must keep inside P.
  // Clamping b to it blocks the failure mode where a facet wanders across
  // the whole region and leaves a degenerate sliver that the uniform
  // inflation rule cannot untangle.
  VectorXd anchor;
  {
    VectorXd lo, hi;
    bounding_box(*target, theta0, lo, hi);
    anchor = target->project(theta0, 0.5 * (lo + hi));
  }

  VectorXd interior;  // certified interior-or-feasible point for cheap checks
  {
    const auto cheb = chebyshev(with_sandbox(P));
    interior = cheb.center;
  }

  int global_iter = 0;
  int eval_idx = 0;
  int streak = 0;
  bool stop = false;
  std::vector<int> last_active(M, 0);

  // Cadence evaluations run against the sandboxed polytope (stable while
  // rows are still moving); the final evaluation after the loop runs on
  // the pure polytope, which a converged run leaves bounded.
  auto run_eval = [&](double lambda, bool sandboxed) {
    EvalRecord rec;
    rec.iter = global_iter;
    rec.lambda = lambda;
    rec.est = estimate_errors(sandboxed ? with_sandbox(P) : P, *target, theta0,
                              config.eval_dirs,
                              mix_seed(config.seed, 1000 + eval_idx));
    ++eval_idx;
    rec.weighted = weighted_error(rec.est, lambda);
    hist.evals.push_back(rec);
    return rec.weighted;
  };

  auto take_snapshot = [&]() {
    if (config.snapshot_every <= 0) return;
    if (!hist.snapshots.empty() && hist.snapshots.back().iter == global_iter)
      return;
    hist.snapshots.push_back(Snapshot{global_iter, P.A, P.b});
  };

  run_eval(config.phases.front().lambda, true);  // init error, iter 0
  take_snapshot();

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

      const Polytope snapshot = P;
      try {
        const Polytope Pt = with_sandbox(P);
        double loss = 0.0, ef = 0.0, eo = 0.0;
        double worst_feas = 0.0;
        VectorXd worst_dir;
        MatrixXd gA = MatrixXd::Zero(M, n);
        VectorXd gb = VectorXd::Zero(M);
        for (int k = 0; k < config.batch; ++k) {
          const VectorXd v = dir_rng.direction(n);
          const DirectionalSample s = dir_errors(Pt, *target, theta0, v);
          ActiveSet J = active_at(Pt, s.poly_support, config.act_tol);
          if (J.indices.empty() && s.feas_err > 1e-12) {
            // degenerate vertices can leave the LP point short of act_tol;
            // widen before declaring the state inconsistent
            J = active_at(Pt, s.poly_support, 1e3 * config.act_tol);
            if (J.indices.empty())
              throw InternalError(
                  "support point carries feasibility error but activates no "
                  "facet; polytope state is inconsistent");
          }
          const ActiveSet K = active_at(Pt, s.poly_closest, config.act_tol);
          // sandbox rows are frozen: only model rows enter the loss
          std::vector<int> Jm, Km;
          for (int j : J.indices)
            if (j < M) Jm.push_back(j);
          for (int k2 : K.indices)
            if (k2 < M) Km.push_back(k2);
          for (int j : Jm) last_active[j] = global_iter;
          for (int k2 : Km) last_active[k2] = global_iter;
          if (s.feas_err > worst_feas) {
            worst_feas = s.feas_err;
            worst_dir = v / v.norm();
          }
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

        VectorXd params = FlatParams::pack(P.A, P.b);
        VectorXd grads = FlatParams::pack(gA, gb);
        adam_step(params, grads, adam, lr, config.beta1, config.beta2,
                  config.adam_eps);
        FlatParams::unpack(params, P.A, P.b);
        normalize_rows_in_place(P.A, P.b);  // moments kept unscaled

        // nonemptiness: keep the anchor inside P, then the uniform
        // inflation rule as a backstop for anything that slips through
        P.b = P.b.cwiseMax(P.A * anchor + VectorXd::Constant(M, 1e-9));
        if (((P.A * interior - P.b).array() > 0.0).any() ||
            ((sandbox_A * interior - sandbox_b).array() > 0.0).any()) {
          const Polytope Ps = with_sandbox(P);
          const double margin = feasibility_margin(Ps.system());
          if (margin < 0.0) P.b.array() += -margin + 1e-9;
          interior = chebyshev(with_sandbox(P)).center;
        }

        // facet recycling: move the stalest long-dead row onto the worst
        // uncovered direction, at its outer support offset
        if (config.reseed_after > 0 && worst_feas > 1e-10 &&
            worst_dir.size() == n) {
          int stalest = -1;
          for (int j = 0; j < M; ++j) {
            if (global_iter - last_active[j] <= config.reseed_after) continue;
            if (stalest < 0 || last_active[j] < last_active[stalest])
              stalest = j;
          }
          if (stalest >= 0) {
            P.A.row(stalest) = worst_dir.transpose();
            P.b[stalest] = target->support(theta0, worst_dir).value;
            last_active[stalest] = global_iter;
            for (int c = 0; c < n; ++c) {
              adam.m[stalest * n + c] = 0.0;
              adam.v[stalest * n + c] = 0.0;
            }
            adam.m[M * n + stalest] = 0.0;
            adam.v[M * n + stalest] = 0.0;
          }
        }

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
        return FitResult{snapshot, std::move(hist)};
      }

      if (config.snapshot_every > 0 && global_iter % config.snapshot_every == 0)
        take_snapshot();

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
  // authoritative final evaluation on the pure polytope
  try {
    run_eval(config.phases.back().lambda, false);
  } catch (const UnboundedError&) {
    hist.status = TrainStatus::Aborted;
    hist.message = "polytope is unbounded at the end of the schedule";
    EvalRecord rec;
    rec.iter = global_iter;
    rec.lambda = config.phases.back().lambda;
    rec.est.mean_feas = rec.est.max_feas =
        std::numeric_limits<double>::infinity();
    rec.weighted = std::numeric_limits<double>::infinity();
    hist.evals.push_back(rec);
  }
  take_snapshot();
  return FitResult{std::move(P), std::move(hist)};
}

}  // namespace polyfit
