#include "polyfit/benchmarks.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

namespace polyfit {

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}

const VectorXd kNoTheta;

// disk-difference benchmark geometry
constexpr double kCutX = 1.0;
constexpr double kCutR = 0.5;
// circle intersection corners: x = (1 + 1 - 0.25) / 2
constexpr double kCornerX = 0.875;
const double kCornerY = std::sqrt(1.0 - kCornerX * kCornerX);
const double kCornerAngle = std::atan2(kCornerY, kCornerX);

}  // namespace

std::string bench_csv(const std::vector<BenchReport>& reports) {
  std::string out =
      "case_id,n,M,init_error,converged_error,ideal_error,reduction,"
      "iterations,steps_to_converge\n";
  for (const auto& r : reports) {
    out += r.case_id;
    out += ',';
    out += std::to_string(r.n);
    out += ',';
    out += std::to_string(r.facets);
    out += ',';
    out += format_g17(r.init_error);
    out += ',';
    out += format_g17(r.converged_error);
    out += ',';
    if (r.ideal_error) out += format_g17(*r.ideal_error);
    out += ',';
    out += format_g17(r.reduction);
    out += ',';
    out += std::to_string(r.iterations);
    out += ',';
    out += std::to_string(r.steps_to_converge);
    out += '\n';
  }
  return out;
}

MatrixXd hit_and_run(const Polytope& P, int count, int burn_in,
                     std::uint64_t seed) {
  P.validate();
  const int n = P.dim();
  Rng rng(seed);
  VectorXd x = chebyshev(P).center;
  MatrixXd out(count, n);
  int kept = 0;
  const int total = burn_in + count;
  for (int step = 0; step < total; ++step) {
    const VectorXd d = rng.direction(n).normalized();
    const VectorXd gd = P.A * d;
    const VectorXd slack = P.b - P.A * x;
    double t_lo = -std::numeric_limits<double>::infinity();
    double t_hi = std::numeric_limits<double>::infinity();
    for (int i = 0; i < gd.size(); ++i) {
      if (gd[i] > 1e-14)
        t_hi = std::min(t_hi, slack[i] / gd[i]);
      else if (gd[i] < -1e-14)
        t_lo = std::max(t_lo, slack[i] / gd[i]);
    }
    if (!std::isfinite(t_lo) || !std::isfinite(t_hi))
      throw UnboundedError("hit-and-run found an unbounded chord");
    if (t_hi < t_lo) {
      t_lo = t_hi = 0.0;  // degenerate face; stay put
    }
    x += rng.uniform(t_lo, t_hi) * d;
    if (step >= burn_in) out.row(kept++) = x.transpose();
  }
  return out;
}

double worst_opt_error(const Polytope& P, const Region& region,
                       const VectorXd& theta, int n_dirs, std::uint64_t seed) {
  Rng rng(seed);
  const int n = P.dim();
  double best = 0.0;
  VectorXd best_z;
  for (int k = 0; k < n_dirs; ++k) {
    const VectorXd v = rng.direction(n);
    const VectorXd z = region.support(theta, v).point;
    const double e = (project_pt(P, z) - z).squaredNorm();
    if (e > best) {
      best = e;
      best_z = z;
    }
  }
  if (best_z.size() == 0) return best;

  // refine by ascent along the region boundary: push the probe direction
  // toward the unmet point and re-support
  VectorXd v = (best_z - project_pt(P, best_z));
  if (v.norm() <= kDirEps) return best;
  double eta = 1.0;
  for (int it = 0; it < 80; ++it) {
    const VectorXd z = region.support(theta, v).point;
    const VectorXd gap = z - project_pt(P, z);
    const double e = gap.squaredNorm();
    if (e > best) {
      best = e;
      if (gap.norm() > kDirEps) {
        v = (1.0 - eta) * v.normalized() + eta * gap.normalized();
      }
    } else {
      eta *= 0.7;
      if (eta < 1e-4) break;
      v = v.normalized() + eta * rng.normal_vec(n) * 0.01;
    }
    if (v.norm() <= kDirEps) break;
  }
  return best;
}

double worst_feas_error(const Polytope& P, const Region& region,
                        const VectorXd& theta, int n_dirs, std::uint64_t seed) {
  Rng rng(seed);
  double best = 0.0;
  for (int k = 0; k < n_dirs; ++k) {
    const VectorXd v = rng.direction(P.dim());
    const VectorXd xp = support_pt(P, v);
    const double e = (region.project(theta, xp) - xp).squaredNorm();
    best = std::max(best, e);
  }
  return best;
}

double hypersphere_ideal_error(int n) {
  return 1.0 - 2.0 * std::sqrt(static_cast<double>(n)) / (n + 1.0);
}

std::vector<LinearSystem> make_fleet(int resources, int horizon,
                                     std::uint64_t seed) {
  if (resources < 1 || horizon < 1)
    throw UsageError("fleet needs at least one resource and one period");
  Rng rng(seed);
  std::vector<LinearSystem> fleet;
  fleet.reserve(resources);
  for (int i = 0; i < resources; ++i) {
    VectorXd hi(horizon);
    for (int t = 0; t < horizon; ++t) hi[t] = rng.uniform(0.5, 1.5);
    // box rows p_t in [0, hi_t], then cumulative energy caps per prefix
    LinearSystem sys;
    sys.G = MatrixXd::Zero(3 * horizon, horizon);
    sys.h = VectorXd::Zero(3 * horizon);
    for (int t = 0; t < horizon; ++t) {
      sys.G(2 * t, t) = 1.0;
      sys.h[2 * t] = hi[t];
      sys.G(2 * t + 1, t) = -1.0;
      sys.h[2 * t + 1] = 0.0;
    }
    double run = 0.0;
    for (int t = 0; t < horizon; ++t) {
      run += hi[t];
      for (int u = 0; u <= t; ++u) sys.G(2 * horizon + t, u) = 1.0;
      sys.h[2 * horizon + t] = run * rng.uniform(0.55, 0.85);
    }
    fleet.push_back(std::move(sys));
  }
  return fleet;
}

RegionPtr bench_octagon() {
  MatrixXd V(8, 2);
  for (int i = 0; i < 8; ++i) {
    const double a = 2.0 * M_PI * i / 8;
    V(i, 0) = std::cos(a);
    V(i, 1) = std::sin(a);
  }
  return make_polygon(V);
}

RegionPtr bench_ellipse() { return make_ellipse(1.0, 0.5); }

RegionPtr bench_disk_difference() {
  DiskDifferenceSpec spec;
  spec.center = {AffineScalar(0.0), AffineScalar(0.0)};
  spec.radius = AffineScalar(1.0);
  spec.cut_center = {AffineScalar(kCutX), AffineScalar(0.0)};
  spec.cut_radius = AffineScalar(kCutR);
  return make_disk_difference(spec);
}

double disk_diff_hull_support(const VectorXd& v) {
  // extreme points: the kept rim arc and the two intersection corners
  const Eigen::Vector2d vh = v.head<2>();
  const double phi = std::atan2(vh.y(), vh.x());
  if (std::abs(phi) >= kCornerAngle) return vh.norm();
  const Eigen::Vector2d qp(kCornerX, kCornerY);
  const Eigen::Vector2d qm(kCornerX, -kCornerY);
  return std::max(vh.dot(qp), vh.dot(qm));
}

MatrixXd disk_diff_hull_boundary(int count) {
  const double arc_len = (2.0 * M_PI - 2.0 * kCornerAngle) * 1.0;
  const double chord_len = 2.0 * kCornerY;
  const double total = arc_len + chord_len;
  MatrixXd pts(count, 2);
  for (int k = 0; k < count; ++k) {
    const double s = total * (k + 0.5) / count;
    if (s < arc_len) {
      const double angle = kCornerAngle + s;  // sweep the kept rim arc
      pts(k, 0) = std::cos(angle);
      pts(k, 1) = std::sin(angle);
    } else {
      const double t = (s - arc_len) / chord_len;  // bridge chord
      pts(k, 0) = kCornerX;
      pts(k, 1) = -kCornerY + t * 2.0 * kCornerY;
    }
  }
  return pts;
}

namespace {

BenchReport report_from_history(const std::string& case_id, int n, int M,
                                const TrainHistory& hist, double lambda) {
  BenchReport rep;
  rep.case_id = case_id;
  rep.n = n;
  rep.facets = M;
  rep.init_error = weighted_error(hist.evals.front().est, lambda);
  rep.converged_error = weighted_error(hist.evals.back().est, lambda);
  rep.reduction = rep.init_error > 1e-15
                      ? (rep.init_error - rep.converged_error) / rep.init_error
                      : 0.0;
  rep.iterations = hist.iterations_used;
  rep.steps_to_converge = hist.steps_to_converge;
  return rep;
}

void log_case(const BenchReport& r) {
  std::fprintf(stderr,
               "[bench] %-24s n=%-3d M=%-3d init=%.3e conv=%.3e red=%.4f "
               "iters=%d steps=%d wall=%.1fs\n",
               r.case_id.c_str(), r.n, r.facets, r.init_error,
               r.converged_error, r.reduction, r.iterations,
               r.steps_to_converge, r.wall_time_s);
}

}  // namespace

std::vector<BenchReport> run_hypercube_suite(const std::vector<int>& dims,
                                             const TrainConfig& base) {
  std::vector<BenchReport> out;
  for (const int n : dims) {
    const double t0 = now_seconds();
    const auto region = make_hypercube(n, 0.0, 1.0);
    TrainConfig cfg = base;
    cfg.facets = 2 * n;
    // staircase learning-rate schedule at fixed lambda; the low-rate tail
    // holds the convergence window and grows with dimension
    const int scale = std::max(1, n / 5);
    cfg.phases = {{0.5, 6000, 2e-2},
                  {0.5, 5000, 5e-3},
                  {0.5, 4000, 1e-3},
                  {0.5, scale * 6000, 3e-4}};
    cfg.lr_decay = 1.0;
    cfg.conv_tol = 1e-5;
    cfg.seed = mix_seed(base.seed, 300 + n);
    Rng arng(mix_seed(cfg.seed, 7));
    const MatrixXd A0 = random_pair_directions(cfg.facets, n, arng);
    const auto res = fit(region, kNoTheta, cfg, A0);
    BenchReport rep = report_from_history("hypercube_n" + std::to_string(n), n,
                                          cfg.facets, res.history, 0.5);
    rep.wall_time_s = now_seconds() - t0;
    log_case(rep);
    out.push_back(std::move(rep));
  }
  return out;
}

std::vector<BenchReport> run_hypersphere_suite(const std::vector<int>& dims,
                                               const TrainConfig& base,
                                               std::vector<Polytope>* out_polytopes) {
  std::vector<BenchReport> out;
  for (const int n : dims) {
    const double t0 = now_seconds();
    const auto region = make_hypersphere(n, 1.0);
    TrainConfig cfg = base;
    cfg.facets = 2 * n;
    cfg.phases = {{0.5, 3000, 2e-2},
                  {0.5, 2000, 5e-3},
                  {0.5, 2000, 1e-3},
                  {0.5, 1000, 3e-4}};
    cfg.lr_decay = 1.0;
    cfg.conv_tol = 0.0;  // no early stop: the optimum is nonzero
    cfg.seed = mix_seed(base.seed, 400 + n);
    Rng arng(mix_seed(cfg.seed, 7));
    const MatrixXd A0 = random_pair_directions(cfg.facets, n, arng);

    const Normalizer norm = fit_normalizer(*region, kNoTheta);
    const RegionPtr target = normalized_region(region, norm);
    const double s2 = norm.scale[0] * norm.scale[0];

    // worst-case total error (the quantity the ideal formula bounds)
    auto max_total = [&](const Polytope& P, std::uint64_t seed) {
      const double mf = worst_feas_error(P, *target, kNoTheta, 500, seed);
      const double mo = worst_opt_error(P, *target, kNoTheta, 500, seed + 1);
      return (mf + mo) * s2;  // back to raw coordinates
    };

    const Polytope P0 = init_outer(*target, kNoTheta, A0, norm);
    const auto res = fit(region, kNoTheta, cfg, A0);

    BenchReport rep;
    rep.case_id = "hypersphere_n" + std::to_string(n);
    rep.n = n;
    rep.facets = cfg.facets;
    rep.init_error = max_total(P0, mix_seed(cfg.seed, 51));
    rep.converged_error = max_total(res.polytope, mix_seed(cfg.seed, 52));
    rep.ideal_error = hypersphere_ideal_error(n);
    rep.reduction = rep.init_error > 0.0
                        ? (rep.init_error - rep.converged_error) / rep.init_error
                        : 0.0;
    rep.iterations = res.history.iterations_used;
    rep.steps_to_converge = res.history.steps_to_converge;
    rep.wall_time_s = now_seconds() - t0;
    log_case(rep);
    out.push_back(std::move(rep));
    if (out_polytopes != nullptr) out_polytopes->push_back(res.polytope);
  }
  return out;
}

namespace {

std::string snapshot_csv(const TrainHistory& hist) {
  if (hist.snapshots.empty()) return {};
  const int n = static_cast<int>(hist.snapshots.front().A.cols());
  std::string out = "iter,row";
  for (int c = 0; c < n; ++c) out += ",a" + std::to_string(c + 1);
  out += ",b\n";
  for (const auto& snap : hist.snapshots) {
    for (int j = 0; j < snap.A.rows(); ++j) {
      out += std::to_string(snap.iter);
      out += ',';
      out += std::to_string(j);
      for (int c = 0; c < n; ++c) {
        out += ',';
        out += format_g17(snap.A(j, c));
      }
      out += ',';
      out += format_g17(snap.b[j]);
      out += '\n';
    }
  }
  return out;
}

}  // namespace

Shapes2dResult run_2d_suite(const TrainConfig& base) {
  Shapes2dResult result;

  struct Case {
    std::string id;
    RegionPtr region;
    int facets;
  };
  const std::vector<Case> cases = {{"octagon_m4", bench_octagon(), 4},
                                   {"ellipse_m6", bench_ellipse(), 6},
                                   {"diskdiff_m6", bench_disk_difference(), 6}};

  for (size_t idx = 0; idx < cases.size(); ++idx) {
    const auto& c = cases[idx];
    const double t0 = now_seconds();
    TrainConfig cfg = base;
    cfg.facets = c.facets;
    cfg.snapshot_every = 100;
    cfg.conv_tol = 0.0;  // run the full schedule so snapshots cover it
    cfg.phases = {{0.5, 500, 1e-2},   {0.9, 200, 1e-3},
                  {0.9999, 150, 3e-4}, {0.9999, 150, 1e-4},
                  {0.9999, 150, 3e-5}, {0.9999, 100, 1e-5}};
    cfg.lr_decay = 1.0;
    cfg.adam_reset_every = 500;
    cfg.seed = mix_seed(base.seed, 500 + idx);
    const auto res = fit(c.region, kNoTheta, cfg);
    BenchReport rep =
        report_from_history(c.id, 2, c.facets, res.history, 0.5);
    rep.wall_time_s = now_seconds() - t0;
    log_case(rep);
    result.reports.push_back(rep);
    result.snapshots[c.id] = snapshot_csv(res.history);
  }

  // hull study: a fine outer fit of the cut disk matches the convex hull
  {
    const double t0 = now_seconds();
    const auto region = bench_disk_difference();
    const int M = 64;
    TrainConfig cfg = base;
    cfg.facets = M;
    // The outer initialization is already stationary for the pure
    // optimality objective; a short low-rate phase confirms it without
    // letting optimizer noise erode the fit.
    cfg.phases = {{0.0, 200, 1e-4}};
    cfg.conv_tol = 0.0;
    cfg.lr_decay = 0.995;
    cfg.seed = mix_seed(base.seed, 777);
    MatrixXd A0(M, 2);
    for (int j = 0; j < M; ++j) {
      const double a = 2.0 * M_PI * j / M;
      A0(j, 0) = std::cos(a);
      A0(j, 1) = std::sin(a);
    }
    const auto res = fit(region, kNoTheta, cfg, A0);
    const Polytope& P = res.polytope;

    // raw-coordinate hull metrics
    const double scale = P.norm.scale[0];
    const MatrixXd pts = disk_diff_hull_boundary(10000);
    double worst_violation = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < pts.rows(); ++k) {
      const VectorXd u = P.norm.to_norm(pts.row(k).transpose());
      worst_violation =
          std::max(worst_violation, (P.A * u - P.b).maxCoeff() * scale);
    }
    result.hull_cover_violation = worst_violation;

    Rng rng(mix_seed(cfg.seed, 5));
    double worst_gap = 0.0;
    for (int k = 0; k < 100; ++k) {
      const VectorXd v = rng.direction(2);
      const VectorXd x = support_pt(P, v);
      const double h_poly = v.dot(P.norm.to_raw(x));
      const double h_hull = disk_diff_hull_support(v);
      worst_gap = std::max(worst_gap, std::abs(h_poly - h_hull) / v.norm());
    }
    result.hull_support_gap = worst_gap;
    result.hull_polytope = P;

    BenchReport rep = report_from_history("diskdiff_hull_m64", 2, M,
                                          res.history, 0.0);
    rep.wall_time_s = now_seconds() - t0;
    log_case(rep);
    std::fprintf(stderr,
                 "[bench] hull coverage violation %.3e, support gap %.3e\n",
                 result.hull_cover_violation, result.hull_support_gap);
    result.reports.push_back(rep);
  }
  return result;
}

AggregationResult run_aggregation_demo(int resources, int horizon,
                                       const TrainConfig& base) {
  const double t0 = now_seconds();
  const auto fleet = make_fleet(resources, horizon, mix_seed(base.seed, 911));
  const auto region = make_minkowski(fleet);

  TrainConfig cfg = base;
  cfg.facets = 4 * horizon;
  cfg.seed = mix_seed(base.seed, 912);
  // balancing, refining, converging; the converging phase carries an
  // internal learning-rate staircase so the feasibility error can settle
  // to numerical zero across every vertex cone
  cfg.phases = {{0.5, 500, 1e-2},   {0.9, 250, 1e-3},
                {0.9999, 300, 3e-4}, {0.9999, 600, 1e-4},
                {0.9999, 500, 3e-5}, {0.9999, 250, 1e-5},
                {0.9999, 100, 3e-6}};
  cfg.lr_decay = 1.0;
  cfg.adam_reset_every = 500;
  cfg.conv_tol = 0.0;  // the target is the worst direction, not the mean
  cfg.eval_every = 100;
  cfg.eval_dirs = 100;

  const auto res = fit(region, kNoTheta, cfg);

  AggregationResult out;
  out.polytope = res.polytope;
  out.region = region;

  const Normalizer& norm = res.polytope.norm;
  const RegionPtr target = normalized_region(region, norm);
  const auto final_est = estimate_errors(res.polytope, *target, kNoTheta, 500,
                                         mix_seed(cfg.seed, 61));
  out.max_feas = final_est.max_feas;
  out.max_opt = final_est.max_opt;

  const MatrixXd samples =
      hit_and_run(res.polytope, 200, 1000, mix_seed(cfg.seed, 62));
  out.total_samples = static_cast<int>(samples.rows());
  for (int k = 0; k < samples.rows(); ++k) {
    const VectorXd raw = norm.to_raw(samples.row(k).transpose());
    const auto sys = minkowski_disaggregation_system(*region, raw);
    if (lp_infeasibility(sys) <= 1e-6) ++out.feasible_samples;
  }
  if (out.feasible_samples < out.total_samples && out.max_feas < 1e-8)
    std::fprintf(stderr,
                 "[bench] WARNING: %d samples lack a disaggregation although "
                 "max_feas=%.2e; inconsistent projection/solve tolerances\n",
                 out.total_samples - out.feasible_samples, out.max_feas);

  out.report = report_from_history(
      "aggregation_r" + std::to_string(resources) + "_t" + std::to_string(horizon),
      horizon, cfg.facets, res.history, cfg.phases.back().lambda);
  out.report.wall_time_s = now_seconds() - t0;
  log_case(out.report);
  std::fprintf(stderr,
               "[bench] aggregation max_feas=%.3e max_opt=%.3e disaggregation "
               "%d/%d\n",
               out.max_feas, out.max_opt, out.feasible_samples,
               out.total_samples);
  return out;
}

}  // namespace polyfit
