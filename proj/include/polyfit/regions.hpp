#ifndef POLYFIT_REGIONS_HPP
#define POLYFIT_REGIONS_HPP

#include <memory>
#include <string>
#include <vector>

#include "polyfit/common.hpp"
#include "polyfit/polytope.hpp"
#include "polyfit/solver.hpp"

namespace polyfit {

/// Admissible box for the varying parameter theta.
struct ThetaBox {
  VectorXd lower;
  VectorXd upper;

  int dim() const { return static_cast<int>(lower.size()); }
  void validate() const;
  bool contains(const VectorXd& theta, double tol = 1e-9) const;
  VectorXd center() const { return 0.5 * (lower + upper); }
};

/// Shape parameter with affine dependence on theta: base + coeff . theta.
/// An empty coeff means a constant.
struct AffineScalar {
  double base = 0.0;
  VectorXd coeff;

  AffineScalar() = default;
  AffineScalar(double b) : base(b) {}  // NOLINT: implicit by design
  AffineScalar(double b, VectorXd c) : base(b), coeff(std::move(c)) {}

  double value(const VectorXd& theta) const {
    if (coeff.size() == 0) return base;
    return base + coeff.dot(theta);
  }
  bool constant() const { return coeff.size() == 0 || coeff.isZero(0.0); }
};

using AffineVector = std::vector<AffineScalar>;

VectorXd eval_affine(const AffineVector& v, const VectorXd& theta);

struct SupportResult {
  VectorXd point;
  double value = 0.0;
};

constexpr double kDirEps = 1e-12;

/// Oracle access to a bounded region: support point along a direction and
/// Euclidean projection of a point. Implementations are immutable after
/// construction and safe for concurrent read-only use.
class Region {
 public:
  virtual ~Region() = default;

  int dim() const { return dim_; }
  int theta_dim() const { return box_.dim(); }
  const ThetaBox& theta_box() const { return box_; }
  virtual std::string kind() const = 0;

  /// argmax of v . z over the region; ||v|| must exceed kDirEps.
  SupportResult support(const VectorXd& theta, const VectorXd& v) const;

  /// Closest region point to z0. Global minimizer for convex kinds; the
  /// analytic nearest point (possibly on a concave boundary) for the
  /// disk-difference kind.
  VectorXd project(const VectorXd& theta, const VectorXd& z0) const;

 protected:
  Region(int dim, ThetaBox box) : dim_(dim), box_(std::move(box)) {}
  virtual SupportResult do_support(const VectorXd& theta, const VectorXd& v) const = 0;
  virtual VectorXd do_project(const VectorXd& theta, const VectorXd& z0) const = 0;

 private:
  void check_query(const VectorXd& theta, const VectorXd& x) const;
  int dim_;
  ThetaBox box_;
};

using RegionPtr = std::shared_ptr<const Region>;

struct DiskDifferenceSpec {
  AffineVector center;      // 2
  AffineScalar radius;      // > 0
  AffineVector cut_center;  // 2
  AffineScalar cut_radius;  // > 0
};

RegionPtr make_hypercube(int n, AffineScalar lo, AffineScalar hi, ThetaBox box = {});
RegionPtr make_hypersphere(int n, AffineScalar radius, AffineVector center = {},
                           ThetaBox box = {});
RegionPtr make_ellipse(AffineScalar semi_x, AffineScalar semi_y,
                       AffineVector center = {}, ThetaBox box = {});
/// Vertices are counter-clockwise convex; theta acts as point -> scale * point + shift.
RegionPtr make_polygon(MatrixXd vertices, AffineScalar scale = {1.0},
                       AffineVector shift = {}, ThetaBox box = {});
RegionPtr make_disk_difference(DiskDifferenceSpec spec, ThetaBox box = {});
/// Region over the selected coordinates of {(x,y) | G (x,y) <= h(theta)}.
RegionPtr make_lifted(MatrixXd G, AffineVector h, std::vector<int> x_dims,
                      ThetaBox box = {});
/// Minkowski sum of per-resource polytopes, all over the same horizon.
RegionPtr make_minkowski(std::vector<LinearSystem> resources);

/// Parses a RegionSpec document (see docs/formats.md) and validates the
/// resulting oracle: boundedness along the +-e_i directions, nonemptiness,
/// positive shape parameters over the whole theta box.
RegionPtr parse_region(const std::string& text);

/// For a minkowski_linear region: the stacked per-resource system with the
/// aggregate trajectory pinned to `agg`; variables are the resource
/// trajectories. Feasibility of this system certifies that `agg` can be
/// disaggregated. Throws UsageError for other kinds.
LinearSystem minkowski_disaggregation_system(const Region& region,
                                             const VectorXd& agg);

/// View of a region in the normalized coordinates of `norm`; the scale
/// must be uniform so projections commute with the map.
RegionPtr normalized_region(RegionPtr base, Normalizer norm);

/// Axis-aligned bounding box from 2n support calls.
void bounding_box(const Region& region, const VectorXd& theta, VectorXd& lo,
                  VectorXd& hi);

/// Uniform-scale normalizer mapping the bounding box at theta into [0,1]^n.
Normalizer fit_normalizer(const Region& region, const VectorXd& theta);

}  // namespace polyfit

#endif  // POLYFIT_REGIONS_HPP
