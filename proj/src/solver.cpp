#include "polyfit/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace polyfit {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr int kStallLimit = 64;     // pivots without progress before Bland kicks in
constexpr int kRefactorEvery = 32;

/// Dense revised simplex over the standard form
///   max c.z  s.t.  A z = b, z >= 0
/// built from G x <= h with free x split as x = u - w. Rows with negative
/// right-hand side are negated and receive a phase-1 artificial.
class RevisedSimplex {
 public:
  RevisedSimplex(const VectorXd& objective, const LinearSystem& sys,
                 const SolverConfig& cfg, double pivot_tol = kPivotTol,
                 bool bland_always = false)
      : cfg_(cfg), pivot_tol_(pivot_tol), bland_always_(bland_always),
        n_(sys.cols()), m_(sys.rows()) {
    const int n_struct = 2 * n_ + m_;
    art_col_.assign(m_, -1);
    int n_art = 0;
    for (int i = 0; i < m_; ++i)
      if (sys.h[i] < 0.0) art_col_[i] = n_struct + n_art++;
    N_ = n_struct + n_art;

    A_ = MatrixXd::Zero(m_, N_);
    b_ = VectorXd::Zero(m_);
    for (int i = 0; i < m_; ++i) {
      const double sign = sys.h[i] < 0.0 ? -1.0 : 1.0;
      A_.row(i).head(n_) = sign * sys.G.row(i);
      A_.row(i).segment(n_, n_) = -sign * sys.G.row(i);
      A_(i, 2 * n_ + i) = sign;  // slack
      b_[i] = sign * sys.h[i];
      if (art_col_[i] >= 0) A_(i, art_col_[i]) = 1.0;
    }

    basis_.resize(m_);
    in_basis_.assign(N_, 0);
    for (int i = 0; i < m_; ++i) {
      basis_[i] = art_col_[i] >= 0 ? art_col_[i] : 2 * n_ + i;
      in_basis_[basis_[i]] = 1;
    }
    Binv_ = MatrixXd::Identity(m_, m_);
    is_artificial_.assign(N_, 0);
    for (int i = 0; i < m_; ++i)
      if (art_col_[i] >= 0) is_artificial_[art_col_[i]] = 1;

    cost_phase2_ = VectorXd::Zero(N_);
    cost_phase2_.head(n_) = objective;
    cost_phase2_.segment(n_, n_) = -objective;
  }

  /// Runs phase 1; returns the residual infeasibility (0 when feasible).
  double phase1() {
    bool any_art = false;
    for (int i = 0; i < m_; ++i) any_art |= art_col_[i] >= 0;
    if (!any_art) return 0.0;
    VectorXd cost = VectorXd::Zero(N_);
    for (int j = 0; j < N_; ++j)
      if (is_artificial_[j]) cost[j] = -1.0;
    iterate(cost);
    const VectorXd xb = Binv_ * b_;
    double infeas = 0.0;
    for (int i = 0; i < m_; ++i)
      if (is_artificial_[basis_[i]]) infeas += std::max(0.0, xb[i]);
    return infeas;
  }

  LpStatus phase2() { return iterate(cost_phase2_); }

  VectorXd extract_point() {
    refactorize();  // fresh inverse: the point must be accurate, not fast
    const VectorXd xb = Binv_ * b_;
    VectorXd x = VectorXd::Zero(n_);
    for (int i = 0; i < m_; ++i) {
      const int j = basis_[i];
      if (j < n_)
        x[j] += xb[i];
      else if (j < 2 * n_)
        x[j - n_] -= xb[i];
    }
    return x;
  }

 private:
  LpStatus iterate(const VectorXd& cost) {
    int stall = 0;
    bool bland = bland_always_;
    bool retried = false;
    double z_prev = -std::numeric_limits<double>::infinity();
    for (int pivots = 0; pivots < cfg_.lp_max_pivots; ++pivots) {
      if (pivots > 0 && pivots % kRefactorEvery == 0) refactorize();

      VectorXd cb(m_);
      for (int i = 0; i < m_; ++i) cb[i] = cost[basis_[i]];
      const VectorXd y = Binv_.transpose() * cb;
      const VectorXd xb = Binv_ * b_;

      const double z = cb.dot(xb);
      if (z > z_prev + kCostTol * (1.0 + std::abs(z))) {
        stall = 0;
        bland = bland_always_;
      } else if (++stall >= kStallLimit) {
        bland = true;
      }
      z_prev = std::max(z_prev, z);

      // Entering column. A free variable is split as x = u - w; while one
      // half is basic the other has reduced cost exactly zero, and letting
      // numerical residue pull it in would make the basis singular, so the
      // partner of a basic half never enters.
      int enter = -1;
      double best = kCostTol;
      for (int j = 0; j < N_; ++j) {
        if (in_basis_[j] || is_artificial_[j]) continue;
        if (j < 2 * n_) {
          const int partner = j < n_ ? j + n_ : j - n_;
          if (in_basis_[partner]) continue;
        }
        const double d = cost[j] - y.dot(A_.col(j));
        if (d > best) {
          best = d;
          enter = j;
          if (bland) break;  // Bland: first improving index
        }
      }
      if (enter < 0) return LpStatus::Optimal;

      const VectorXd t = Binv_ * A_.col(enter);

      // Ratio test. A basic artificial already at zero must not grow, so
      // any nonzero pivot on its row blocks at step zero and retires it;
      // artificials still holding value behave like ordinary variables.
      auto drained_art = [&](int i) {
        return is_artificial_[basis_[i]] && xb[i] <= pivot_tol_;
      };
      double theta = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m_; ++i) {
        if (drained_art(i)) {
          if (std::abs(t[i]) > pivot_tol_) theta = 0.0;
        } else if (t[i] > pivot_tol_) {
          theta = std::min(theta, std::max(xb[i], 0.0) / t[i]);
        }
      }
      if (!std::isfinite(theta)) {
        // rule out basis-inverse drift before declaring an unbounded ray
        if (!retried) {
          refactorize();
          retried = true;
          continue;
        }
        return LpStatus::Unbounded;
      }
      retried = false;

      // Among blocking rows: in Bland mode the smallest basic index
      // (anti-cycling); otherwise the largest pivot magnitude, which keeps
      // the basis well conditioned under near-parallel rows.
      int leave = -1;
      bool leave_art = false;
      for (int i = 0; i < m_; ++i) {
        const bool art_row = drained_art(i);
        bool candidate;
        if (art_row)
          candidate = std::abs(t[i]) > pivot_tol_ && theta <= pivot_tol_;
        else
          candidate = t[i] > pivot_tol_ &&
                      std::max(xb[i], 0.0) / t[i] <= theta + pivot_tol_;
        if (!candidate) continue;
        if (leave < 0 || (art_row && !leave_art)) {
          leave = i;
          leave_art = art_row;
          continue;
        }
        if (art_row != leave_art) continue;
        const bool better = bland ? basis_[i] < basis_[leave]
                                  : std::abs(t[i]) > std::abs(t[leave]);
        if (better) leave = i;
      }

      pivot(leave, enter, t);
    }
    throw InternalError("simplex cycling guard exceeded after " +
                        std::to_string(cfg_.lp_max_pivots) + " pivots");
  }

  void pivot(int r, int enter, const VectorXd& t) {
    in_basis_[basis_[r]] = 0;
    basis_[r] = enter;
    in_basis_[enter] = 1;
    const double piv = t[r];
    Binv_.row(r) /= piv;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      if (t[i] != 0.0) Binv_.row(i) -= t[i] * Binv_.row(r);
    }
  }

  void refactorize() {
    MatrixXd B(m_, m_);
    for (int i = 0; i < m_; ++i) B.col(i) = A_.col(basis_[i]);
    Eigen::FullPivLU<MatrixXd> lu(B);
    if (!lu.isInvertible())
      throw InternalError("simplex basis matrix became singular");
    Binv_ = lu.inverse();
  }

  const SolverConfig& cfg_;
  double pivot_tol_;
  bool bland_always_;
  int n_, m_, N_;
  MatrixXd A_;
  VectorXd b_;
  VectorXd cost_phase2_;
  std::vector<int> basis_;
  std::vector<char> in_basis_;
  std::vector<char> is_artificial_;
  std::vector<int> art_col_;
  MatrixXd Binv_;
};

struct SparseRow {
  std::vector<int> idx;
  std::vector<double> val;
};

std::vector<SparseRow> sparsify(const MatrixXd& G) {
  std::vector<SparseRow> rows(G.rows());
  for (int i = 0; i < G.rows(); ++i) {
    for (int j = 0; j < G.cols(); ++j) {
      if (G(i, j) != 0.0) {
        rows[i].idx.push_back(j);
        rows[i].val.push_back(G(i, j));
      }
    }
  }
  return rows;
}

struct HildrethResult {
  VectorXd x;
  VectorXd lambda;
  double gap = 0.0;
  double maxviol = 0.0;
  bool converged = false;
  bool stalled = false;  // feasible but the gap stopped improving
};

/// Dual coordinate ascent for min 1/2 (x-x0)' D (x-x0) s.t. G x <= h,
/// with D diagonal positive (dinv = elementwise inverse of its diagonal).
/// `budget` caps the sweeps and is decremented by the amount consumed.
HildrethResult hildreth(const VectorXd& x0, const VectorXd& dinv,
                        const LinearSystem& sys, VectorXd lambda,
                        const SolverConfig& cfg, int& budget) {
  const int m = sys.rows();
  const auto rows = sparsify(sys.G);

  VectorXd d(m);
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (size_t k = 0; k < rows[i].idx.size(); ++k)
      s += rows[i].val[k] * rows[i].val[k] * dinv[rows[i].idx[k]];
    if (s <= 0.0)
      throw UsageError("projection system has a zero row at index " +
                       std::to_string(i));
    d[i] = s;
  }

  if (lambda.size() != m) lambda = VectorXd::Zero(m);
  VectorXd x = x0;
  for (int i = 0; i < m; ++i) {
    if (lambda[i] == 0.0) continue;
    for (size_t k = 0; k < rows[i].idx.size(); ++k)
      x[rows[i].idx[k]] -= lambda[i] * rows[i].val[k] * dinv[rows[i].idx[k]];
  }

  const double obj_scale = 1.0 + 0.5 * (x0.array().square() * dinv.array().inverse()).sum();
  double win_viol = std::numeric_limits<double>::infinity();
  double win_lnorm = 0.0;
  double win_gap = std::numeric_limits<double>::infinity();
  int stagnant_windows = 0;
  int flat_gap_windows = 0;

  HildrethResult res;
  int sweep = 0;
  for (; sweep < budget; ++sweep) {
    double viol = 0.0;
    double gap = 0.0;
    for (int i = 0; i < m; ++i) {
      double r = -sys.h[i];
      for (size_t k = 0; k < rows[i].idx.size(); ++k)
        r += rows[i].val[k] * x[rows[i].idx[k]];
      const double next = std::max(0.0, lambda[i] + r / d[i]);
      const double delta = next - lambda[i];
      if (delta != 0.0) {
        lambda[i] = next;
        for (size_t k = 0; k < rows[i].idx.size(); ++k)
          x[rows[i].idx[k]] -= delta * rows[i].val[k] * dinv[rows[i].idx[k]];
      }
      viol = std::max(viol, r);
      gap += lambda[i] * std::abs(r);
    }

    if (viol <= cfg.feas_tol && gap <= cfg.qp_gap_tol * obj_scale) {
      // verification pass on exactly reconstructed x
      x = x0;
      for (int i = 0; i < m; ++i) {
        if (lambda[i] == 0.0) continue;
        for (size_t k = 0; k < rows[i].idx.size(); ++k)
          x[rows[i].idx[k]] -= lambda[i] * rows[i].val[k] * dinv[rows[i].idx[k]];
      }
      double v2 = 0.0, g2 = 0.0;
      for (int i = 0; i < m; ++i) {
        double r = -sys.h[i];
        for (size_t k = 0; k < rows[i].idx.size(); ++k)
          r += rows[i].val[k] * x[rows[i].idx[k]];
        v2 = std::max(v2, r);
        g2 += lambda[i] * std::abs(r);
      }
      if (v2 <= cfg.feas_tol && g2 <= cfg.qp_gap_tol * obj_scale) {
        res.converged = true;
        res.gap = g2;
        res.maxviol = v2;
        break;
      }
    }

    if ((sweep + 1) % 500 == 0) {
      const double lnorm = lambda.lpNorm<1>();
      if (viol > 100.0 * cfg.feas_tol && viol > 0.999 * win_viol &&
          lnorm > 1.01 * win_lnorm + 1e-12) {
        if (++stagnant_windows >= 2)
          throw InfeasibleError(
              "projection target region appears infeasible: violation " +
              std::to_string(viol) + " stagnant while duals diverge");
      } else {
        stagnant_windows = 0;
      }
      // Degenerate active rows can let the duals oscillate and pin the
      // gap above the strict tolerance while the point itself has long
      // stopped moving; report the stall and let the caller polish or
      // reject rather than spinning out the budget.
      if (viol <= cfg.feas_tol && gap >= 0.99 * win_gap) {
        if (++flat_gap_windows >= 2) {
          res.stalled = true;
          res.gap = gap;
          res.maxviol = viol;
          break;
        }
      } else {
        flat_gap_windows = 0;
      }
      win_viol = viol;
      win_lnorm = lnorm;
      win_gap = gap;
    }
  }
  budget -= sweep + 1;
  if (!res.converged && !res.stalled && budget <= 0) {
    double viol = 0.0, gap = 0.0;
    for (int i = 0; i < m; ++i) {
      double r = -sys.h[i];
      for (size_t k = 0; k < rows[i].idx.size(); ++k)
        r += rows[i].val[k] * x[rows[i].idx[k]];
      viol = std::max(viol, r);
      gap += lambda[i] * std::abs(r);
    }
    throw ConvergenceError(
        "projection did not close its duality gap within the sweep cap (" +
        std::to_string(m) + " rows, " + std::to_string(sys.cols()) +
        " cols, gap " + std::to_string(gap) + ", violation " +
        std::to_string(viol) + ")");
  }
  res.x = std::move(x);
  res.lambda = std::move(lambda);
  return res;
}

LpOutcome solve_attempt(const VectorXd& objective, const LinearSystem& sys,
                        const SolverConfig& cfg, double pivot_tol, bool bland) {
  LpOutcome out;
  RevisedSimplex s(objective, sys, cfg, pivot_tol, bland);
  if (s.phase1() > cfg.feas_tol) {
    out.status = LpStatus::Infeasible;
    return out;
  }
  out.status = s.phase2();
  if (out.status == LpStatus::Optimal) {
    VectorXd x = s.extract_point();
    out.value = objective.dot(x);
    out.point = std::move(x);
  }
  return out;
}

/// Degenerate instances can defeat the fast pivot rule numerically; the
/// fallbacks re-solve with coarser pivot tolerances, the last one under
/// Bland's rule throughout.
LpOutcome solve_with_fallback(const VectorXd& objective, const LinearSystem& sys,
                              const SolverConfig& cfg) {
  try {
    return solve_attempt(objective, sys, cfg, kPivotTol, false);
  } catch (const InternalError&) {
  }
  try {
    return solve_attempt(objective, sys, cfg, 1e-7, false);
  } catch (const InternalError&) {
  }
  return solve_attempt(objective, sys, cfg, 1e-7, true);
}

double phase1_attempt(const LinearSystem& sys, const SolverConfig& cfg,
                      VectorXd* point) {
  auto run = [&](double ptol, bool bland) {
    RevisedSimplex s(VectorXd::Zero(sys.cols()), sys, cfg, ptol, bland);
    const double infeas = s.phase1();
    if (point != nullptr && infeas <= cfg.feas_tol) *point = s.extract_point();
    return infeas;
  };
  try {
    return run(kPivotTol, false);
  } catch (const InternalError&) {
  }
  try {
    return run(1e-7, false);
  } catch (const InternalError&) {
  }
  return run(1e-7, true);
}

VectorXd phase1_point(const LinearSystem& sys, const SolverConfig& cfg) {
  VectorXd point;
  const double infeas = phase1_attempt(sys, cfg, &point);
  if (infeas > cfg.feas_tol)
    throw InfeasibleError("system infeasible by " + std::to_string(infeas));
  return point;
}

}  // namespace

void LinearSystem::validate() const {
  if (G.rows() != h.size())
    throw UsageError("constraint matrix has " + std::to_string(G.rows()) +
                     " rows but right-hand side has " + std::to_string(h.size()));
  if (!G.allFinite() || !h.allFinite())
    throw UsageError("constraint system contains non-finite entries");
  for (int i = 0; i < G.rows(); ++i)
    if (G.row(i).norm() < 1e-12)
      throw UsageError("constraint row " + std::to_string(i) + " is zero");
}

const SolverConfig& default_solver_config() {
  static const SolverConfig cfg{};
  return cfg;
}

LpOutcome solve_lp(const VectorXd& objective, const LinearSystem& sys,
                   const SolverConfig& cfg) {
  sys.validate();
  if (objective.size() != sys.cols())
    throw UsageError("objective has " + std::to_string(objective.size()) +
                     " entries for a system over " + std::to_string(sys.cols()) +
                     " variables");
  return solve_with_fallback(objective, sys, cfg);
}

double lp_infeasibility(const LinearSystem& sys, const SolverConfig& cfg) {
  sys.validate();
  return phase1_attempt(sys, cfg, nullptr);
}

VectorXd feasible_point(const LinearSystem& sys, const SolverConfig& cfg) {
  sys.validate();
  return phase1_point(sys, cfg);
}

namespace {

/// Exact finisher for the selector projection: with a guessed active set,
/// the projection restricted to those equalities is a least-squares
/// problem over their null space. Candidate active sets are read off the
/// duals and residuals at several identification tolerances, and the best
/// verified candidate wins; a wrong guess is simply discarded.
bool polish_selector(const VectorXd& target, const LinearSystem& sys,
                     const std::vector<int>& selector,
                     const std::vector<char>& selected, const VectorXd& x_ppa,
                     const VectorXd& lambda, const SolverConfig& cfg,
                     VectorXd& out) {
  const int n = sys.cols();
  const double scale = 1.0 + target.cwiseAbs().maxCoeff();
  const VectorXd resid = sys.G * x_ppa - sys.h;
  (void)selected;

  double ppa_obj = 0.0;
  for (size_t k = 0; k < selector.size(); ++k) {
    const double dp = x_ppa[selector[k]] - target[k];
    ppa_obj += dp * dp;
  }

  double best_obj = std::numeric_limits<double>::infinity();
  VectorXd best;

  auto try_active = [&](const std::vector<int>& active) {
    VectorXd x_star;
    if (active.empty()) {
      x_star = x_ppa;
      for (size_t k = 0; k < selector.size(); ++k)
        x_star[selector[k]] = target[k];
    } else {
      if (static_cast<int>(active.size()) > n + 8) return;
      MatrixXd Ga(active.size(), n);
      VectorXd ha(active.size());
      for (size_t i = 0; i < active.size(); ++i) {
        Ga.row(i) = sys.G.row(active[i]);
        ha[i] = sys.h[active[i]];
      }
      Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(Ga);
      const VectorXd xp = cod.solve(ha);
      if ((Ga * xp - ha).cwiseAbs().maxCoeff() > 1e-9 * scale) return;

      Eigen::FullPivLU<MatrixXd> lu(Ga);
      const MatrixXd kernel = lu.kernel();
      x_star = xp;
      if (kernel.cols() > 0 && kernel.norm() > 0.0) {
        MatrixXd Ks(selector.size(), kernel.cols());
        VectorXd rhs(selector.size());
        for (size_t k = 0; k < selector.size(); ++k) {
          Ks.row(k) = kernel.row(selector[k]);
          rhs[k] = target[k] - xp[selector[k]];
        }
        const VectorXd y = Ks.completeOrthogonalDecomposition().solve(rhs);
        x_star = xp + kernel * y;
      }
    }
    if (((sys.G * x_star - sys.h).array() > cfg.feas_tol * scale).any()) return;
    double obj = 0.0;
    for (size_t k = 0; k < selector.size(); ++k) {
      const double d = x_star[selector[k]] - target[k];
      obj += d * d;
    }
    if (obj < best_obj) {
      best_obj = obj;
      best = x_star;
    }
  };

  std::vector<int> active;
  for (const double tol : {1e-8, 1e-6, 1e-4, 1e-2}) {
    active.clear();
    for (int i = 0; i < sys.rows(); ++i)
      if (resid[i] > -tol * scale) active.push_back(i);
    try_active(active);
  }
  active.clear();
  for (int i = 0; i < sys.rows(); ++i)
    if (lambda[i] > 1e-12) active.push_back(i);
  try_active(active);

  if (!best.allFinite() || best.size() == 0) return false;
  if (best_obj > ppa_obj + 1e-9 * scale * scale) return false;
  out.resize(selector.size());
  for (size_t k = 0; k < selector.size(); ++k) out[k] = best[selector[k]];
  return true;
}

VectorXd project_selector_impl(const VectorXd& target, const LinearSystem& sys,
                               const std::vector<int>& selector,
                               const VectorXd& anchor, const SolverConfig& cfg) {
  const int n = sys.cols();
  int budget = cfg.qp_max_sweeps;

  // Selected coordinates carry the distance; the rest enter only through
  // the constraints, so the quadratic is singular there. An outer proximal
  // loop pins the free block to its previous value and re-solves; the
  // proximal weight keeps the inner ascent well conditioned.
  const double mu = 0.1;
  std::vector<char> selected(n, 0);
  for (int j : selector) selected[j] = 1;
  VectorXd dinv(n);
  for (int j = 0; j < n; ++j) dinv[j] = selected[j] ? 1.0 : 1.0 / mu;

  VectorXd x0(n);
  for (int j = 0; j < n; ++j) x0[j] = anchor[j];
  for (size_t k = 0; k < selector.size(); ++k) x0[selector[k]] = target[k];

  const double scale = 1.0 + target.cwiseAbs().maxCoeff();
  const double sel_tol = 1e-9 * scale;
  const double remain_tol = 3e-10 * scale;  // geometric-tail remainder bound
  const double floor_tol = 1e-8 * scale;    // inner-gap-limited accuracy
  const double accept_tol = 1e-6 * scale;   // worst acceptable on give-up

  VectorXd lambda;
  // the active-set polish turns a good iterate into an exact projection
  auto finish = [&](const VectorXd& sel, const VectorXd& x_full) {
    VectorXd polished;
    if (polish_selector(target, sys, selector, selected, x_full, lambda, cfg,
                        polished))
      return polished;
    return sel;
  };
  VectorXd prev_sel = VectorXd::Constant(target.size(),
                                         std::numeric_limits<double>::quiet_NaN());
  VectorXd prev_shift;
  double last_shift = std::numeric_limits<double>::infinity();
  int at_floor = 0;
  constexpr int kOuterCap = 2000;
  for (int outer = 0; outer < kOuterCap; ++outer) {
    const HildrethResult res = hildreth(x0, dinv, sys, lambda, cfg, budget);
    lambda = res.lambda;

    VectorXd sel(target.size());
    for (size_t k = 0; k < selector.size(); ++k) sel[k] = res.x[selector[k]];

    const double sel_shift = prev_sel.allFinite()
                                 ? (sel - prev_sel).cwiseAbs().maxCoeff()
                                 : std::numeric_limits<double>::infinity();
#ifdef POLYFIT_PPA_TRACE
    std::fprintf(stderr, "ppa outer=%d shift=%.3e budget=%d\n", outer,
                 sel_shift, budget);
#endif
    if (sel_shift <= sel_tol) return finish(sel, res.x);
    if (std::isfinite(last_shift) && sel_shift < last_shift) {
      // remaining distance under a geometric-tail model
      const double r = std::min(sel_shift / last_shift, 0.9999);
      if (sel_shift * r / (1.0 - r) <= remain_tol) return finish(sel, res.x);
    }
    if (sel_shift <= floor_tol && sel_shift > 0.95 * last_shift) {
      if (++at_floor >= 5) return finish(sel, res.x);  // accuracy floor
    } else {
      at_floor = 0;
    }
    last_shift = sel_shift;
    prev_sel = sel;

    VectorXd shift(n - static_cast<int>(selector.size()));
    int k2 = 0;
    for (int j = 0; j < n; ++j)
      if (!selected[j]) shift[k2++] = res.x[j] - x0[j];

    // Aitken extrapolation: a geometric tail (aligned shifts with a stable
    // ratio) is collapsed by jumping the whole remaining sum. A bad jump
    // only perturbs the proximal reference, which the next round repairs.
    bool extrapolated = false;
    if (prev_shift.size() == shift.size()) {
      const double np = prev_shift.norm();
      const double nc = shift.norm();
      if (np > 0.0 && nc > 100.0 * sel_tol) {
        const double ratio = nc / np;
        const double align = shift.dot(prev_shift) / (np * nc);
        if (align > 0.995 && ratio > 0.3 && ratio < 0.9999) {
          const double boost = ratio / (1.0 - ratio);
          k2 = 0;
          for (int j = 0; j < n; ++j)
            if (!selected[j]) x0[j] = res.x[j] + boost * shift[k2++];
          extrapolated = true;
        }
      }
    }
    if (!extrapolated) {
      for (int j = 0; j < n; ++j)
        if (!selected[j]) x0[j] = res.x[j];
    }
    prev_shift = extrapolated ? VectorXd() : shift;

    if (budget <= 0) {
      if (sel_shift <= accept_tol) return finish(sel, res.x);
      throw ConvergenceError(
          "selector projection exhausted its sweep budget before the free "
          "block settled (last shift " + std::to_string(sel_shift) + ")");
    }
  }
  if (last_shift <= accept_tol && prev_sel.allFinite()) return prev_sel;
  throw ConvergenceError("selector projection outer loop hit its cap (shift " +
                         std::to_string(last_shift) + ")");
}

void check_selector(const VectorXd& target, const LinearSystem& sys,
                    const std::vector<int>& selector) {
  const int n = sys.cols();
  if (selector.empty()) throw UsageError("projection selector is empty");
  for (size_t k = 0; k < selector.size(); ++k) {
    if (selector[k] < 0 || selector[k] >= n)
      throw UsageError("projection selector index out of range");
    if (k > 0 && selector[k] <= selector[k - 1])
      throw UsageError("projection selector must be strictly increasing");
  }
  if (static_cast<int>(selector.size()) != target.size())
    throw UsageError("projection target size does not match selector size");
}

}  // namespace

namespace {

VectorXd project_full_impl(const VectorXd& target, const LinearSystem& sys,
                           const std::vector<int>& selector,
                           const SolverConfig& cfg) {
  const int n = sys.cols();
  int budget = cfg.qp_max_sweeps;
  const HildrethResult res =
      hildreth(target, VectorXd::Ones(n), sys, VectorXd(), cfg, budget);
  VectorXd polished;
  const std::vector<char> selected(n, 1);
  if (polish_selector(target, sys, selector, selected, res.x, res.lambda, cfg,
                      polished))
    return polished;
  if (res.stalled)
    throw ConvergenceError(
        "projection stalled at duality gap " + std::to_string(res.gap) +
        " and the active-set polish could not certify the point");
  return res.x;
}

}  // namespace

VectorXd project_qp(const VectorXd& target, const LinearSystem& sys,
                    const std::vector<int>& selector, const SolverConfig& cfg) {
  sys.validate();
  check_selector(target, sys, selector);
  const int n = sys.cols();

  if (static_cast<int>(selector.size()) == n)
    return project_full_impl(target, sys, selector, cfg);

  // anchor doubles as the infeasibility check for this path
  const VectorXd anchor = phase1_point(sys, cfg);
  return project_selector_impl(target, sys, selector, anchor, cfg);
}

VectorXd project_qp_anchored(const VectorXd& target, const LinearSystem& sys,
                             const std::vector<int>& selector,
                             const VectorXd& anchor, const SolverConfig& cfg) {
  sys.validate();
  check_selector(target, sys, selector);
  if (anchor.size() != sys.cols())
    throw UsageError("projection anchor has wrong dimension");
  if (static_cast<int>(selector.size()) == sys.cols())
    return project_full_impl(target, sys, selector, cfg);
  return project_selector_impl(target, sys, selector, anchor, cfg);
}

VectorXd project_qp(const VectorXd& target, const LinearSystem& sys,
                    const SolverConfig& cfg) {
  std::vector<int> all(sys.cols());
  for (int j = 0; j < sys.cols(); ++j) all[j] = j;
  return project_qp(target, sys, all, cfg);
}

namespace {

LinearSystem ball_system(const LinearSystem& sys, bool nonneg_radius) {
  const int n = sys.cols();
  const int m = sys.rows();
  LinearSystem ext;
  ext.G = MatrixXd::Zero(m + (nonneg_radius ? 1 : 0), n + 1);
  ext.h = VectorXd::Zero(m + (nonneg_radius ? 1 : 0));
  ext.G.topLeftCorner(m, n) = sys.G;
  for (int i = 0; i < m; ++i) ext.G(i, n) = sys.G.row(i).norm();
  ext.h.head(m) = sys.h;
  if (nonneg_radius) ext.G(m, n) = -1.0;  // r >= 0
  return ext;
}

}  // namespace

ChebyshevResult chebyshev_center(const LinearSystem& sys, const SolverConfig& cfg) {
  sys.validate();
  const int n = sys.cols();
  VectorXd obj = VectorXd::Zero(n + 1);
  obj[n] = 1.0;
  const LpOutcome out = solve_lp(obj, ball_system(sys, true), cfg);
  if (out.status == LpStatus::Infeasible)
    throw EmptyPolytopeError("polytope is empty: no inscribed ball of radius >= 0");
  if (out.status == LpStatus::Unbounded)
    throw UnboundedError("polytope admits arbitrarily large inscribed balls");
  ChebyshevResult res;
  res.center = out.point->head(n);
  res.radius = (*out.point)[n];
  return res;
}

double feasibility_margin(const LinearSystem& sys, const SolverConfig& cfg) {
  sys.validate();
  const int n = sys.cols();
  VectorXd obj = VectorXd::Zero(n + 1);
  obj[n] = 1.0;
  const LpOutcome out = solve_lp(obj, ball_system(sys, false), cfg);
  if (out.status == LpStatus::Unbounded)
    return std::numeric_limits<double>::infinity();
  if (out.status == LpStatus::Infeasible)
    throw InternalError("free-radius margin program cannot be infeasible");
  return *out.value;
}

}  // namespace polyfit
