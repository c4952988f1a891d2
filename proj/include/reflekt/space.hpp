#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace reflekt {

using PointId = std::uint32_t;

/// A real function on the points of a space, indexed by PointId.
using Function = std::vector<double>;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Finite metric measure space backed by a dense distance table.
///
/// Rows are additionally kept sorted by distance (ties by identifier) with
/// prefix masses, so V(x,r) = m(B(x,r)) is a binary search. Balls are open:
/// B(x,r) = {y : d(x,y) < r}.
class MetricMeasureSpace {
 public:
  using Metric = std::function<double(PointId, PointId)>;

  static MetricMeasureSpace build(std::size_t n, const Metric& metric, std::vector<double> mass,
                                  std::vector<Point2> coords = {});
  static MetricMeasureSpace from_table(std::vector<double> table, std::vector<double> mass,
                                       std::vector<Point2> coords = {});

  std::size_t size() const { return n_; }
  double distance(PointId x, PointId y) const { return dist_[std::size_t(x) * n_ + y]; }
  std::span<const double> distances_from(PointId x) const {
    return {dist_.data() + std::size_t(x) * n_, n_};
  }
  double mass(PointId x) const { return mass_[x]; }
  const std::vector<double>& masses() const { return mass_; }
  double total_mass() const { return total_mass_; }
  double diam() const { return diam_; }
  /// Minimum nonzero pairwise distance.
  double mesh() const { return mesh_; }
  /// d(x, X \ {x}).
  double nearest_distance(PointId x) const;

  double volume(PointId x, double r) const;
  std::size_t ball_size(PointId x, double r) const;
  /// Ball members in ascending identifier order.
  std::vector<PointId> ball(PointId x, double r) const;
  /// Ball members in the row's distance order (the order used for prefix masses).
  std::span<const PointId> ball_by_distance(PointId x, double r) const;

  bool has_coordinates() const { return !coords_.empty(); }
  const std::vector<Point2>& coordinates() const { return coords_; }

  /// Subspace on `ids` (ascending) with the inherited metric and masses.
  MetricMeasureSpace restrict_to(std::span<const PointId> ids) const;

  void check_point(PointId x) const;

 private:
  MetricMeasureSpace() = default;
  void finalize();

  std::size_t n_ = 0;
  std::vector<double> dist_;
  std::vector<double> mass_;
  std::vector<Point2> coords_;
  std::vector<PointId> order_;
  std::vector<double> prefix_;  // n_ * (n_ + 1)
  double total_mass_ = 0.0;
  double diam_ = 0.0;
  double mesh_ = 0.0;
};

using SpacePtr = std::shared_ptr<const MetricMeasureSpace>;

/// The interior D of a domain. The discrete model identifies the closure of D
/// with D, so every d(x, closure D) below is d(x, D).
class Domain {
 public:
  Domain(SpacePtr space, std::vector<PointId> interior);

  const MetricMeasureSpace& space() const { return *space_; }
  const SpacePtr& space_ptr() const { return space_; }
  const std::vector<PointId>& interior() const { return interior_; }
  const std::vector<PointId>& exterior() const { return exterior_; }
  std::size_t size() const { return interior_.size(); }
  bool contains(PointId x) const { return local_[x] != npos; }
  bool is_full() const { return exterior_.empty(); }
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  /// Position of x in interior(), or npos.
  std::size_t local_index(PointId x) const { return local_[x]; }
  double distance_to_domain(PointId x) const { return dist_to_domain_[x]; }
  /// Nearest interior point, ties by identifier.
  PointId nearest_interior(PointId x) const { return nearest_[x]; }
  /// Supremum of d over D x D.
  double diam() const { return diam_; }
  double mesh() const { return mesh_; }
  double mass() const { return mass_; }

  /// m(B(x,r) ∩ D), summed in the same order as the ambient volume.
  double volume(PointId x, double r) const;
  /// B(x,r) ∩ D in ascending identifier order.
  std::vector<PointId> ball(PointId x, double r) const;

  /// Values of a function on the space at interior(), in that order.
  Function restrict(const Function& global) const;
  /// Function on the space equal to `local` on D and 0 elsewhere.
  Function embed(const Function& local) const;

 private:
  SpacePtr space_;
  std::vector<PointId> interior_;
  std::vector<PointId> exterior_;
  std::vector<std::size_t> local_;
  std::vector<double> dist_to_domain_;
  std::vector<PointId> nearest_;
  double diam_ = 0.0;
  double mesh_ = 0.0;
  double mass_ = 0.0;
};

/// {base * 2^j} ∩ [base, upper], ascending.
std::vector<double> dyadic_radii(double base, double upper);

// ---------------------------------------------------------------------------
// Nets and volume-regularity constants

struct NetResult {
  std::vector<PointId> centers;
  double radius = 0.0;
};

/// Greedy r-net of `subset`: points are scanned in ascending identifier order and
/// kept unless already inside an open r-ball around an earlier center. Centers are
/// pairwise at distance >= r and the open r-balls around them cover `subset`.
NetResult greedy_net(const MetricMeasureSpace& space, std::span<const PointId> subset, double r);

/// max over all points x of #{i : d(x, centers[i]) < radius}.
std::size_t max_overlap(const MetricMeasureSpace& space, std::span<const PointId> centers,
                        double radius);

/// c1 (1 + 4 diam(E) / r)^d1.
double net_size_bound(double c1, double d1, double diam_subset, double r);

struct RadiusWitness {
  PointId x = 0;
  double r = 0.0;
  double big_r = 0.0;
};

struct DoublingReport {
  // V(x,R)/V(x,r) <= c1 (R/r)^d1 over dyadic radii.
  double c1 = 1.0;
  double d1 = 0.0;
  RadiusWitness c1_witness;
  // max V(x,2r)/V(x,r).
  double doubling_constant = 1.0;
  RadiusWitness doubling_witness;
  // V(x, lambda0 r) >= C V(x,r) for d(x, X\{x}) <= r < diam/lambda0.
  double qrvd_lambda0 = 2.0;
  double qrvd_C = std::numeric_limits<double>::infinity();
  RadiusWitness qrvd_witness;
  // Smallest constant for the two-point consequence V(x,r1)/V(y,r2) <= c ((d+r1)/r2)^d1,
  // over pairs with d(x,y)+r1 >= r2.
  double vd1_constant = 1.0;
  bool vd1_holds = true;
};

DoublingReport check_doubling(const MetricMeasureSpace& space, double qrvd_lambda0 = 2.0);

/// Recomputes V(x,R)/V(x,r)/(R/r)^d1 at the witness.
double doubling_ratio_at(const MetricMeasureSpace& space, const RadiusWitness& w, double d1);

struct AhlforsReport {
  double c_domain = 1.0;
  PointId witness_x = 0;
  double witness_r = 0.0;
  // m0 = m on D; exact in the discrete model, recomputed anyway.
  bool boundary_mass_null = true;
};

AhlforsReport check_ahlfors(const Domain& domain);

}  // namespace reflekt
