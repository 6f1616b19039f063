#include "polyfit/regions.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <json.hpp>

namespace polyfit {

using nlohmann::json;

void ThetaBox::validate() const {
  if (lower.size() != upper.size())
    throw UsageError("theta box lower/upper dimensions differ");
  if (((upper - lower).array() <= 0.0).any())
    throw UsageError("theta box must satisfy lower < upper elementwise");
}

bool ThetaBox::contains(const VectorXd& theta, double tol) const {
  if (theta.size() != dim()) return false;
  return ((theta - lower).array() >= -tol).all() &&
         ((upper - theta).array() >= -tol).all();
}

VectorXd eval_affine(const AffineVector& v, const VectorXd& theta) {
  VectorXd out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = v[i].value(theta);
  return out;
}

void Region::check_query(const VectorXd& theta, const VectorXd& x) const {
  if (x.size() != dim_)
    throw UsageError("query point has dimension " + std::to_string(x.size()) +
                     ", region has " + std::to_string(dim_));
  if (theta_dim() == 0) {
    if (theta.size() != 0)
      throw UsageError("region takes no parameter but theta was supplied");
    return;
  }
  if (theta.size() != theta_dim())
    throw UsageError("theta has dimension " + std::to_string(theta.size()) +
                     ", region expects " + std::to_string(theta_dim()));
  if (!box_.contains(theta))
    throw UsageError("theta lies outside the declared parameter box");
}

SupportResult Region::support(const VectorXd& theta, const VectorXd& v) const {
  check_query(theta, v);
  if (v.norm() <= kDirEps)
    throw UsageError("support direction is numerically zero");
  return do_support(theta, v);
}

VectorXd Region::project(const VectorXd& theta, const VectorXd& z0) const {
  check_query(theta, z0);
  return do_project(theta, z0);
}

namespace {

// ---------------------------------------------------------------------------
// shared geometry helpers

/// Projection onto the filled axis-aligned ellipsoid sum((x_i-c_i)/a_i)^2<=1.
VectorXd project_ellipsoid(const VectorXd& semi, const VectorXd& center,
                           const VectorXd& z0) {
  const VectorXd y = z0 - center;
  double inside = 0.0;
  for (int i = 0; i < y.size(); ++i) {
    const double q = y[i] / semi[i];
    inside += q * q;
  }
  if (inside <= 1.0) return z0;

  // f(t) = sum (a_i y_i / (a_i^2 + t))^2 - 1 is strictly decreasing on
  // t >= 0 with f(0) > 0 here and f(||a.*y||) <= 0
  auto f = [&](double t) {
    double s = 0.0;
    for (int i = 0; i < y.size(); ++i) {
      const double q = semi[i] * y[i] / (semi[i] * semi[i] + t);
      s += q * q;
    }
    return s - 1.0;
  };
  double lo = 0.0;
  double hi = semi.cwiseProduct(y).norm();
  for (int it = 0; it < 200 && (hi - lo) > 1e-17 * (1.0 + hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  const double t = 0.5 * (lo + hi);
  VectorXd x(y.size());
  double on = 0.0;
  for (int i = 0; i < y.size(); ++i) {
    x[i] = semi[i] * semi[i] * y[i] / (semi[i] * semi[i] + t);
    const double q = x[i] / semi[i];
    on += q * q;
  }
  x /= std::sqrt(on);  // land exactly on the boundary
  return center + x;
}

struct CirclePair {
  bool intersect = false;
  Eigen::Vector2d q_plus;
  Eigen::Vector2d q_minus;
};

CirclePair circle_intersections(const Eigen::Vector2d& c0, double r0,
                                const Eigen::Vector2d& c1, double r1) {
  CirclePair out;
  const double d = (c1 - c0).norm();
  if (d < 1e-14 || d > r0 + r1 - 1e-14 || d < std::abs(r0 - r1) + 1e-14)
    return out;
  const double a = (d * d + r0 * r0 - r1 * r1) / (2.0 * d);
  const double h2 = r0 * r0 - a * a;
  if (h2 <= 0.0) return out;
  const double h = std::sqrt(h2);
  const Eigen::Vector2d u = (c1 - c0) / d;
  const Eigen::Vector2d perp(-u.y(), u.x());
  out.intersect = true;
  out.q_plus = c0 + a * u + h * perp;
  out.q_minus = c0 + a * u - h * perp;
  return out;
}

// ---------------------------------------------------------------------------
// concrete kinds

class Hypercube final : public Region {
 public:
  Hypercube(int n, AffineScalar lo, AffineScalar hi, ThetaBox box)
      : Region(n, std::move(box)), lo_(std::move(lo)), hi_(std::move(hi)) {}
  std::string kind() const override { return "hypercube"; }

 protected:
  SupportResult do_support(const VectorXd& theta, const VectorXd& v) const override {
    const double lo = lo_.value(theta), hi = hi_.value(theta);
    SupportResult r;
    r.point.resize(dim());
    for (int i = 0; i < dim(); ++i) r.point[i] = v[i] >= 0.0 ? hi : lo;
    r.value = v.dot(r.point);
    return r;
  }
  VectorXd do_project(const VectorXd& theta, const VectorXd& z0) const override {
    const double lo = lo_.value(theta), hi = hi_.value(theta);
    return z0.cwiseMax(lo).cwiseMin(hi);
  }

 private:
  AffineScalar lo_, hi_;
};

class Hypersphere final : public Region {
 public:
  Hypersphere(int n, AffineScalar radius, AffineVector center, ThetaBox box)
      : Region(n, std::move(box)), radius_(std::move(radius)),
        center_(std::move(center)) {}
  std::string kind() const override { return "hypersphere"; }

 protected:
  SupportResult do_support(const VectorXd& theta, const VectorXd& v) const override {
    const VectorXd c = eval_affine(center_, theta);
    const double r = radius_.value(theta);
    SupportResult out;
    out.point = c + r * v / v.norm();
    out.value = v.dot(out.point);
    return out;
  }
  VectorXd do_project(const VectorXd& theta, const VectorXd& z0) const override {
    const VectorXd c = eval_affine(center_, theta);
    const double r = radius_.value(theta);
    const double d = (z0 - c).norm();
    if (d <= r) return z0;
    return c + (r / d) * (z0 - c);
  }

 private:
  AffineScalar radius_;
  AffineVector center_;
};

class Ellipse final : public Region {
 public:
  Ellipse(AffineScalar a, AffineScalar b, AffineVector center, ThetaBox box)
      : Region(2, std::move(box)), a_(std::move(a)), b_(std::move(b)),
        center_(std::move(center)) {}
  std::string kind() const override { return "ellipse2d"; }

 protected:
  SupportResult do_support(const VectorXd& theta, const VectorXd& v) const override {
    const VectorXd c = eval_affine(center_, theta);
    VectorXd semi(2);
    semi << a_.value(theta), b_.value(theta);
    const VectorXd dv = semi.cwiseProduct(v);
    SupportResult out;
    out.point = c + semi.cwiseProduct(dv) / dv.norm();
    out.value = v.dot(out.point);
    return out;
  }
  VectorXd do_project(const VectorXd& theta, const VectorXd& z0) const override {
    const VectorXd c = eval_affine(center_, theta);
    VectorXd semi(2);
    semi << a_.value(theta), b_.value(theta);
    return project_ellipsoid(semi, c, z0);
  }

 private:
  AffineScalar a_, b_;
  AffineVector center_;
};

class Polygon final : public Region {
 public:
  Polygon(MatrixXd vertices, AffineScalar scale, AffineVector shift, ThetaBox box)
      : Region(2, std::move(box)), verts_(std::move(vertices)),
        scale_(std::move(scale)), shift_(std::move(shift)) {
    if (verts_.rows() < 3 || verts_.cols() != 2)
      throw UsageError("polygon needs at least 3 vertices in the plane");
    double area2 = 0.0;
    for (int i = 0; i < verts_.rows(); ++i) {
      const int j = (i + 1) % verts_.rows();
      const int k = (i + 2) % verts_.rows();
      const double cross =
          (verts_(j, 0) - verts_(i, 0)) * (verts_(k, 1) - verts_(j, 1)) -
          (verts_(j, 1) - verts_(i, 1)) * (verts_(k, 0) - verts_(j, 0));
      if (cross < -1e-12)
        throw UsageError("polygon vertices must be convex and counter-clockwise");
      area2 += verts_(i, 0) * verts_(j, 1) - verts_(j, 0) * verts_(i, 1);
    }
    if (area2 <= 1e-12) throw UsageError("polygon is degenerate");
  }
  std::string kind() const override { return "polygon2d"; }

 protected:
  MatrixXd placed(const VectorXd& theta) const {
    const double s = scale_.value(theta);
    MatrixXd out = s * verts_;
    if (!shift_.empty()) {
      const VectorXd t = eval_affine(shift_, theta);
      out.col(0).array() += t[0];
      out.col(1).array() += t[1];
    }
    return out;
  }

  SupportResult do_support(const VectorXd& theta, const VectorXd& v) const override {
    const MatrixXd pts = placed(theta);
    int best = 0;
    double best_val = pts.row(0).dot(v);
    for (int i = 1; i < pts.rows(); ++i) {
      const double val = pts.row(i).dot(v);
      if (val > best_val) {
        best_val = val;
        best = i;
      }
    }
    return SupportResult{pts.row(best).transpose(), best_val};
  }

  VectorXd do_project(const VectorXd& theta, const VectorXd& z0) const override {
    const MatrixXd pts = placed(theta);
    const int m = static_cast<int>(pts.rows());
    bool inside = true;
    for (int i = 0; i < m && inside; ++i) {
      const int j = (i + 1) % m;
      const double cross = (pts(j, 0) - pts(i, 0)) * (z0[1] - pts(i, 1)) -
                           (pts(j, 1) - pts(i, 1)) * (z0[0] - pts(i, 0));
      inside = cross >= -1e-12;
    }
    if (inside) return z0;
    VectorXd best;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      const int j = (i + 1) % m;
      const Eigen::Vector2d a = pts.row(i), b = pts.row(j);
      const Eigen::Vector2d ab = b - a;
      double t = ab.squaredNorm() > 0.0
                     ? (z0.head<2>() - a).dot(ab) / ab.squaredNorm()
                     : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const Eigen::Vector2d p = a + t * ab;
      const double d = (z0.head<2>() - p).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = p;
      }
    }
    return best;
  }

 private:
  MatrixXd verts_;
  AffineScalar scale_;
  AffineVector shift_;
};

class DiskDifference final : public Region {
 public:
  DiskDifference(DiskDifferenceSpec spec, ThetaBox box)
      : Region(2, std::move(box)), spec_(std::move(spec)) {}
  std::string kind() const override { return "disk_difference"; }

  struct Placed {
    Eigen::Vector2d c0, c1;
    double r0, r1;
  };
  Placed place(const VectorXd& theta) const {
    Placed p;
    p.c0 = eval_affine(spec_.center, theta);
    p.c1 = eval_affine(spec_.cut_center, theta);
    p.r0 = spec_.radius.value(theta);
    p.r1 = spec_.cut_radius.value(theta);
    return p;
  }

 protected:
  static bool feasible(const Placed& g, const Eigen::Vector2d& z) {
    return (z - g.c0).norm() <= g.r0 + 1e-12 && (z - g.c1).norm() >= g.r1 - 1e-12;
  }

  SupportResult do_support(const VectorXd& theta, const VectorXd& v) const override {
    const Placed g = place(theta);
    const Eigen::Vector2d vhat = v.head<2>() / v.norm();
    SupportResult out;
    bool have = false;
    auto consider = [&](const Eigen::Vector2d& cand) {
      const double val = v.head<2>().dot(cand);
      if (!have || val > out.value) {
        have = true;
        out.point = cand;
        out.value = val;
      }
    };
    const Eigen::Vector2d rim = g.c0 + g.r0 * vhat;
    if ((rim - g.c1).norm() >= g.r1 - 1e-12) consider(rim);
    const CirclePair cp = circle_intersections(g.c0, g.r0, g.c1, g.r1);
    if (cp.intersect) {
      consider(cp.q_plus);
      consider(cp.q_minus);
    }
    if (!have)
      throw InternalError("disk-difference support found no boundary candidate; "
                          "region invariant violated");
    return out;
  }

  VectorXd do_project(const VectorXd& theta, const VectorXd& z0v) const override {
    const Placed g = place(theta);
    const Eigen::Vector2d z0 = z0v.head<2>();
    if (feasible(g, z0)) return z0;

    Eigen::Vector2d best;
    double best_d = std::numeric_limits<double>::infinity();
    auto consider = [&](const Eigen::Vector2d& cand) {
      if (!feasible(g, cand)) return;
      const double d = (cand - z0).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = cand;
      }
    };
    const Eigen::Vector2d d0 = z0 - g.c0;
    consider(g.c0 +
             g.r0 * (d0.norm() > 1e-14 ? d0.normalized() : Eigen::Vector2d(1, 0)));
    const Eigen::Vector2d d1 = z0 - g.c1;
    consider(g.c1 +
             g.r1 * (d1.norm() > 1e-14 ? d1.normalized() : Eigen::Vector2d(1, 0)));
    const CirclePair cp = circle_intersections(g.c0, g.r0, g.c1, g.r1);
    if (cp.intersect) {
      consider(cp.q_plus);
      consider(cp.q_minus);
    }
    if (!std::isfinite(best_d))
      throw InternalError("disk-difference projection found no feasible candidate");
    return best;
  }

 private:
  DiskDifferenceSpec spec_;
};

class Lifted final : public Region {
 public:
  Lifted(MatrixXd G, AffineVector h, std::vector<int> x_dims, ThetaBox box)
      : Region(static_cast<int>(x_dims.size()), std::move(box)), G_(std::move(G)),
        h_(std::move(h)), x_dims_(std::move(x_dims)) {
    if (x_dims_.empty()) throw UsageError("linear_lifted needs nonempty x_dims");
    for (size_t k = 0; k < x_dims_.size(); ++k) {
      if (x_dims_[k] < 0 || x_dims_[k] >= G_.cols())
        throw UsageError("x_dims index out of range");
      if (k > 0 && x_dims_[k] <= x_dims_[k - 1])
        throw UsageError("x_dims must be strictly increasing");
    }
    if (static_cast<int>(h_.size()) != G_.rows())
      throw UsageError("linear_lifted h length does not match G rows");
    // nonemptiness check and projection anchor, at the box center
    anchor_ = feasible_point(system(theta_box().center()));
  }
  std::string kind() const override { return "linear_lifted"; }

  LinearSystem system(const VectorXd& theta) const {
    return LinearSystem{G_, eval_affine(h_, theta)};
  }

 protected:
  SupportResult do_support(const VectorXd& theta, const VectorXd& v) const override {
    VectorXd obj = VectorXd::Zero(G_.cols());
    for (size_t k = 0; k < x_dims_.size(); ++k) obj[x_dims_[k]] = v[k];
    const LpOutcome out = solve_lp(obj, system(theta));
    if (out.status == LpStatus::Infeasible)
      throw InfeasibleError("lifted region is empty at this theta");
    if (out.status == LpStatus::Unbounded)
      throw UnboundedError("lifted region is unbounded along the query direction");
    SupportResult res;
    res.point.resize(dim());
    for (size_t k = 0; k < x_dims_.size(); ++k)
      res.point[k] = (*out.point)[x_dims_[k]];
    res.value = v.dot(res.point);
    return res;
  }

  VectorXd do_project(const VectorXd& theta, const VectorXd& z0) const override {
    return project_qp_anchored(z0, system(theta), x_dims_, anchor_);
  }

 private:
  MatrixXd G_;
  AffineVector h_;
  std::vector<int> x_dims_;
  VectorXd anchor_;
};

class MinkowskiSum final : public Region {
 public:
  explicit MinkowskiSum(std::vector<LinearSystem> resources)
      : Region(resources.empty() ? 0 : resources.front().cols(), ThetaBox{}),
        resources_(std::move(resources)) {
    if (resources_.empty())
      throw UsageError("minkowski_linear needs at least one resource");
    const int T = resources_.front().cols();
    for (const auto& r : resources_) {
      r.validate();
      if (r.cols() != T)
        throw UsageError("all minkowski resources must share the horizon");
    }
    build_lifted();
  }
  std::string kind() const override { return "minkowski_linear"; }

  const LinearSystem& lifted() const { return lifted_; }
  const std::vector<LinearSystem>& resources() const { return resources_; }

  /// Lifted system with the aggregate pinned: used for disaggregation
  /// feasibility checks.
  LinearSystem disaggregation_system(const VectorXd& agg) const;

 protected:
  SupportResult do_support(const VectorXd&, const VectorXd& v) const override {
    // support of a Minkowski sum = sum of per-resource supports
    SupportResult out;
    out.point = VectorXd::Zero(dim());
    for (size_t i = 0; i < resources_.size(); ++i) {
      const LpOutcome r = solve_lp(v, resources_[i]);
      if (r.status == LpStatus::Infeasible)
        throw InfeasibleError("minkowski resource " + std::to_string(i) +
                              " has an empty feasible set");
      if (r.status == LpStatus::Unbounded)
        throw UnboundedError("minkowski resource " + std::to_string(i) +
                             " is unbounded along the query direction");
      out.point += *r.point;
    }
    out.value = v.dot(out.point);
    return out;
  }

  VectorXd do_project(const VectorXd&, const VectorXd& z0) const override {
    return project_qp_anchored(z0, lifted_, selector_, anchor_);
  }

 private:
  void build_lifted();

  std::vector<LinearSystem> resources_;
  LinearSystem lifted_;
  std::vector<int> selector_;
  VectorXd anchor_;
};

void MinkowskiSum::build_lifted() {
  const int T = dim();
  const int I = static_cast<int>(resources_.size());
  int rows = 2 * T;
  for (const auto& r : resources_) rows += r.rows();
  const int cols = T + I * T;

  lifted_.G = MatrixXd::Zero(rows, cols);
  lifted_.h = VectorXd::Zero(rows);
  int row = 0;
  for (int i = 0; i < I; ++i) {
    const auto& r = resources_[i];
    lifted_.G.block(row, T + i * T, r.rows(), T) = r.G;
    lifted_.h.segment(row, r.rows()) = r.h;
    row += r.rows();
  }
  // coupling P_t = sum_i p_{i,t} as paired inequalities
  for (int t = 0; t < T; ++t) {
    lifted_.G(row, t) = 1.0;
    for (int i = 0; i < I; ++i) lifted_.G(row, T + i * T + t) = -1.0;
    lifted_.G.row(row + 1) = -lifted_.G.row(row);
    row += 2;
  }

  selector_.resize(T);
  for (int t = 0; t < T; ++t) selector_[t] = t;

  anchor_ = VectorXd::Zero(cols);
  for (int i = 0; i < I; ++i) {
    const VectorXd p = feasible_point(resources_[i]);
    anchor_.segment(T + i * T, T) = p;
    anchor_.head(T) += p;
  }
}

LinearSystem MinkowskiSum::disaggregation_system(const VectorXd& agg) const {
  if (agg.size() != dim())
    throw UsageError("aggregate point has wrong dimension");
  const int T = dim();
  const int I = static_cast<int>(resources_.size());
  int rows = 2 * T;
  for (const auto& r : resources_) rows += r.rows();
  LinearSystem sys;
  sys.G = MatrixXd::Zero(rows, I * T);
  sys.h = VectorXd::Zero(rows);
  int row = 0;
  for (int i = 0; i < I; ++i) {
    const auto& r = resources_[i];
    sys.G.block(row, i * T, r.rows(), T) = r.G;
    sys.h.segment(row, r.rows()) = r.h;
    row += r.rows();
  }
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < I; ++i) sys.G(row, i * T + t) = 1.0;
    sys.h[row] = agg[t];
    sys.G.row(row + 1) = -sys.G.row(row);
    sys.h[row + 1] = -agg[t];
    row += 2;
  }
  return sys;
}

class NormalizedRegion final : public Region {
 public:
  NormalizedRegion(RegionPtr base, Normalizer norm)
      : Region(base->dim(), base->theta_box()), base_(std::move(base)),
        norm_(std::move(norm)) {
    if (!norm_.is_uniform())
      throw UsageError("normalized region requires a uniform scale so that "
                       "projections commute with the map");
    if (norm_.scale.size() != dim())
      throw UsageError("normalizer dimension mismatch");
  }
  std::string kind() const override { return base_->kind(); }

 protected:
  SupportResult do_support(const VectorXd& theta, const VectorXd& v) const override {
    const SupportResult raw = base_->support(theta, v);
    SupportResult out;
    out.point = norm_.to_norm(raw.point);
    out.value = v.dot(out.point);
    return out;
  }
  VectorXd do_project(const VectorXd& theta, const VectorXd& z0) const override {
    return norm_.to_norm(base_->project(theta, norm_.to_raw(z0)));
  }

 private:
  RegionPtr base_;
  Normalizer norm_;
};

// ---------------------------------------------------------------------------
// construction-time validation shared by the factory functions

void enumerate_corners(const ThetaBox& box, std::vector<VectorXd>& out) {
  const int p = box.dim();
  if (p == 0) {
    out.emplace_back();
    return;
  }
  if (p > 12) {  // fall back to center plus per-axis extremes
    out.push_back(box.center());
    for (int i = 0; i < p; ++i) {
      VectorXd lo = box.center(), hi = box.center();
      lo[i] = box.lower[i];
      hi[i] = box.upper[i];
      out.push_back(lo);
      out.push_back(hi);
    }
    return;
  }
  for (int mask = 0; mask < (1 << p); ++mask) {
    VectorXd c(p);
    for (int i = 0; i < p; ++i)
      c[i] = (mask >> i) & 1 ? box.upper[i] : box.lower[i];
    out.push_back(c);
  }
}

void check_positive_over_box(const AffineScalar& s, const ThetaBox& box,
                             const std::string& name) {
  std::vector<VectorXd> corners;
  enumerate_corners(box, corners);
  for (const auto& c : corners)
    if (s.value(c) <= 1e-12)
      throw UsageError(name + " must stay positive over the theta box");
}

void check_theta_shape(const AffineScalar& s, int theta_dim, const std::string& name) {
  if (s.coeff.size() != 0 && s.coeff.size() != theta_dim)
    throw UsageError(name + " has a theta coefficient of wrong dimension");
}

void check_theta_shape(const AffineVector& v, int theta_dim, const std::string& name) {
  for (const auto& s : v) check_theta_shape(s, theta_dim, name);
}

AffineVector constant_vec(int n, double value) {
  return AffineVector(static_cast<size_t>(n), AffineScalar(value));
}

RegionPtr finalize(RegionPtr r) {
  // boundedness probe along +-e_i at the box center; lifted kinds already
  // proved nonemptiness in their constructors
  const VectorXd theta = r->theta_box().center();
  for (int i = 0; i < r->dim(); ++i) {
    VectorXd e = VectorXd::Zero(r->dim());
    e[i] = 1.0;
    r->support(theta, e);
    r->support(theta, -e);
  }
  return r;
}

}  // namespace

RegionPtr make_hypercube(int n, AffineScalar lo, AffineScalar hi, ThetaBox box) {
  if (n < 1) throw UsageError("hypercube dimension must be positive");
  if (box.dim() > 0) box.validate();
  check_theta_shape(lo, box.dim(), "hypercube lo");
  check_theta_shape(hi, box.dim(), "hypercube hi");
  std::vector<VectorXd> corners;
  enumerate_corners(box, corners);
  for (const auto& c : corners)
    if (hi.value(c) - lo.value(c) <= 1e-12)
      throw UsageError("hypercube needs lo < hi over the theta box");
  return finalize(
      std::make_shared<Hypercube>(n, std::move(lo), std::move(hi), std::move(box)));
}

RegionPtr make_hypersphere(int n, AffineScalar radius, AffineVector center,
                           ThetaBox box) {
  if (n < 1) throw UsageError("hypersphere dimension must be positive");
  if (box.dim() > 0) box.validate();
  if (center.empty()) center = constant_vec(n, 0.0);
  if (static_cast<int>(center.size()) != n)
    throw UsageError("hypersphere center has wrong dimension");
  check_theta_shape(radius, box.dim(), "hypersphere radius");
  check_theta_shape(center, box.dim(), "hypersphere center");
  check_positive_over_box(radius, box, "hypersphere radius");
  return finalize(std::make_shared<Hypersphere>(n, std::move(radius),
                                                std::move(center), std::move(box)));
}

RegionPtr make_ellipse(AffineScalar semi_x, AffineScalar semi_y, AffineVector center,
                       ThetaBox box) {
  if (box.dim() > 0) box.validate();
  if (center.empty()) center = constant_vec(2, 0.0);
  if (center.size() != 2) throw UsageError("ellipse center has wrong dimension");
  check_theta_shape(semi_x, box.dim(), "ellipse semi-axis a");
  check_theta_shape(semi_y, box.dim(), "ellipse semi-axis b");
  check_theta_shape(center, box.dim(), "ellipse center");
  check_positive_over_box(semi_x, box, "ellipse semi-axis a");
  check_positive_over_box(semi_y, box, "ellipse semi-axis b");
  return finalize(std::make_shared<Ellipse>(std::move(semi_x), std::move(semi_y),
                                            std::move(center), std::move(box)));
}

RegionPtr make_polygon(MatrixXd vertices, AffineScalar scale, AffineVector shift,
                       ThetaBox box) {
  if (box.dim() > 0) box.validate();
  if (shift.empty()) shift = constant_vec(2, 0.0);
  if (shift.size() != 2) throw UsageError("polygon shift has wrong dimension");
  check_theta_shape(scale, box.dim(), "polygon scale");
  check_theta_shape(shift, box.dim(), "polygon shift");
  check_positive_over_box(scale, box, "polygon scale");
  return finalize(std::make_shared<Polygon>(std::move(vertices), std::move(scale),
                                            std::move(shift), std::move(box)));
}

RegionPtr make_disk_difference(DiskDifferenceSpec spec, ThetaBox box) {
  if (box.dim() > 0) box.validate();
  if (spec.center.empty()) spec.center = constant_vec(2, 0.0);
  if (spec.center.size() != 2 || spec.cut_center.size() != 2)
    throw UsageError("disk_difference centers must be 2-dimensional");
  check_theta_shape(spec.center, box.dim(), "disk center");
  check_theta_shape(spec.cut_center, box.dim(), "cut center");
  check_theta_shape(spec.radius, box.dim(), "disk radius");
  check_theta_shape(spec.cut_radius, box.dim(), "cut radius");
  check_positive_over_box(spec.radius, box, "disk radius");
  check_positive_over_box(spec.cut_radius, box, "cut radius");
  // emptiness (cut swallowing the disk), checked at corners and center
  std::vector<VectorXd> corners;
  enumerate_corners(box, corners);
  corners.push_back(box.center());
  for (const auto& th : corners) {
    const VectorXd c0 = eval_affine(spec.center, th);
    const VectorXd c1 = eval_affine(spec.cut_center, th);
    const double d = (c0 - c1).norm();
    if (d + spec.radius.value(th) < spec.cut_radius.value(th) + 1e-12)
      throw InfeasibleError(
          "disk_difference region is empty: the cut swallows the disk");
  }
  return finalize(std::make_shared<DiskDifference>(std::move(spec), std::move(box)));
}

RegionPtr make_lifted(MatrixXd G, AffineVector h, std::vector<int> x_dims,
                      ThetaBox box) {
  if (box.dim() > 0) box.validate();
  check_theta_shape(h, box.dim(), "linear_lifted h");
  return finalize(std::make_shared<Lifted>(std::move(G), std::move(h),
                                           std::move(x_dims), std::move(box)));
}

RegionPtr make_minkowski(std::vector<LinearSystem> resources) {
  return finalize(std::make_shared<MinkowskiSum>(std::move(resources)));
}

RegionPtr normalized_region(RegionPtr base, Normalizer norm) {
  return std::make_shared<NormalizedRegion>(std::move(base), std::move(norm));
}

LinearSystem minkowski_disaggregation_system(const Region& region,
                                             const VectorXd& agg) {
  const auto* mink = dynamic_cast<const MinkowskiSum*>(&region);
  if (mink == nullptr)
    throw UsageError("disaggregation requires a minkowski_linear region");
  return mink->disaggregation_system(agg);
}

void bounding_box(const Region& region, const VectorXd& theta, VectorXd& lo,
                  VectorXd& hi) {
  const int n = region.dim();
  lo.resize(n);
  hi.resize(n);
  for (int i = 0; i < n; ++i) {
    VectorXd e = VectorXd::Zero(n);
    e[i] = 1.0;
    hi[i] = region.support(theta, e).value;
    lo[i] = -region.support(theta, -e).value;
  }
}

Normalizer fit_normalizer(const Region& region, const VectorXd& theta) {
  VectorXd lo, hi;
  bounding_box(region, theta, lo, hi);
  const double width = (hi - lo).maxCoeff();
  if (width < 1e-12)
    throw UsageError("region is degenerate: zero width in every coordinate");
  Normalizer norm;
  norm.scale = VectorXd::Constant(region.dim(), width);
  norm.offset = lo;
  return norm;
}

// ---------------------------------------------------------------------------
// document parsing

namespace {

[[noreturn]] void bad_doc(const std::string& what) {
  throw UsageError("region document: " + what);
}

AffineScalar parse_affine(const json& j, const std::string& name) {
  if (j.is_number()) return AffineScalar(j.get<double>());
  if (j.is_object()) {
    if (!j.contains("base")) bad_doc(name + " needs a 'base' value");
    AffineScalar s(j.at("base").get<double>());
    if (j.contains("coeff")) {
      const auto& c = j.at("coeff");
      if (!c.is_array()) bad_doc(name + ".coeff must be an array");
      s.coeff.resize(c.size());
      for (size_t i = 0; i < c.size(); ++i) s.coeff[i] = c[i].get<double>();
    }
    return s;
  }
  bad_doc(name + " must be a number or {base, coeff}");
}

AffineVector parse_affine_vec(const json& j, int n, const std::string& name) {
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    bad_doc(name + " must be an array of length " + std::to_string(n));
  AffineVector out;
  out.reserve(n);
  for (int i = 0; i < n; ++i)
    out.push_back(parse_affine(j[i], name + "[" + std::to_string(i) + "]"));
  return out;
}

MatrixXd parse_matrix(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    bad_doc(name + " must be an array of rows");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  MatrixXd M(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j[i].size()) != cols)
      bad_doc(name + " rows have uneven length");
    for (int k = 0; k < cols; ++k) M(i, k) = j[i][k].get<double>();
  }
  return M;
}

VectorXd parse_vector(const json& j, const std::string& name) {
  if (!j.is_array()) bad_doc(name + " must be an array");
  VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

ThetaBox parse_theta_box(const json& doc) {
  ThetaBox box;
  if (!doc.contains("theta_box")) return box;
  const auto& j = doc.at("theta_box");
  box.lower = parse_vector(j.at("lower"), "theta_box.lower");
  box.upper = parse_vector(j.at("upper"), "theta_box.upper");
  box.validate();
  return box;
}

}  // namespace

RegionPtr parse_region(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    bad_doc(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) bad_doc("top level must be an object");
  if (!doc.contains("schema") || doc.at("schema") != 1)
    bad_doc("missing or unsupported 'schema' (expected 1)");
  if (!doc.contains("type")) bad_doc("missing 'type' tag");
  const std::string type = doc.at("type").get<std::string>();
  const ThetaBox box = parse_theta_box(doc);

  try {
    if (type == "hypercube") {
      return make_hypercube(doc.at("n").get<int>(),
                            parse_affine(doc.at("lo"), "lo"),
                            parse_affine(doc.at("hi"), "hi"), box);
    }
    if (type == "hypersphere") {
      const int n = doc.at("n").get<int>();
      AffineVector center;
      if (doc.contains("center"))
        center = parse_affine_vec(doc.at("center"), n, "center");
      return make_hypersphere(n, parse_affine(doc.at("radius"), "radius"),
                              std::move(center), box);
    }
    if (type == "ellipse2d") {
      AffineVector center;
      if (doc.contains("center"))
        center = parse_affine_vec(doc.at("center"), 2, "center");
      return make_ellipse(parse_affine(doc.at("a"), "a"),
                          parse_affine(doc.at("b"), "b"), std::move(center), box);
    }
    if (type == "polygon2d") {
      AffineScalar scale(1.0);
      if (doc.contains("scale")) scale = parse_affine(doc.at("scale"), "scale");
      AffineVector shift;
      if (doc.contains("shift"))
        shift = parse_affine_vec(doc.at("shift"), 2, "shift");
      return make_polygon(parse_matrix(doc.at("vertices"), "vertices"),
                          std::move(scale), std::move(shift), box);
    }
    if (type == "disk_difference") {
      DiskDifferenceSpec spec;
      if (doc.contains("center"))
        spec.center = parse_affine_vec(doc.at("center"), 2, "center");
      spec.radius = parse_affine(doc.at("radius"), "radius");
      spec.cut_center = parse_affine_vec(doc.at("cut_center"), 2, "cut_center");
      spec.cut_radius = parse_affine(doc.at("cut_radius"), "cut_radius");
      return make_disk_difference(std::move(spec), box);
    }
    if (type == "linear_lifted") {
      const MatrixXd G = parse_matrix(doc.at("G"), "G");
      AffineVector h;
      const auto& hj = doc.at("h");
      if (!hj.is_array()) bad_doc("h must be an array");
      for (size_t i = 0; i < hj.size(); ++i)
        h.push_back(parse_affine(hj[i], "h[" + std::to_string(i) + "]"));
      std::vector<int> x_dims;
      for (const auto& v : doc.at("x_dims")) x_dims.push_back(v.get<int>());
      return make_lifted(G, std::move(h), std::move(x_dims), box);
    }
    if (type == "minkowski_linear") {
      std::vector<LinearSystem> resources;
      for (const auto& r : doc.at("resources")) {
        LinearSystem sys;
        sys.G = parse_matrix(r.at("G"), "resource G");
        sys.h = parse_vector(r.at("h"), "resource h");
        resources.push_back(std::move(sys));
      }
      return make_minkowski(std::move(resources));
    }
  } catch (const json::exception& e) {
    bad_doc(std::string("field error in '") + type + "': " + e.what());
  }
  bad_doc("unknown region type '" + type + "'");
}

}  // namespace polyfit
