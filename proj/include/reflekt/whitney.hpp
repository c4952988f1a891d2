#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "reflekt/space.hpp"

namespace reflekt {

struct WhitneyBall {
  PointId center = 0;
  double radius = 0.0;
};

/// Quarter-Whitney cover of the exterior of a domain.
///
/// Invariants, checked by verify_geometry():
///   the balls B_i are pairwise disjoint as point sets,
///   5 r_i = d(x_i, D),
///   the dilates (5/2) B_i cover the exterior.
class WhitneyCover {
 public:
  static constexpr double kEpsilon = 0.25;
  /// Dilation factors whose member lists are cached.
  static constexpr std::array<double, 3> kCachedDilations = {2.5, 3.0, 4.0};

  /// Greedy construction over exterior points in decreasing distance to D, ties by
  /// identifier; stops once the (5/2)-dilates cover the exterior.
  static WhitneyCover build(std::shared_ptr<const Domain> domain);

  const Domain& domain() const { return *domain_; }
  const std::shared_ptr<const Domain>& domain_ptr() const { return domain_; }
  std::size_t size() const { return balls_.size(); }
  const WhitneyBall& ball(std::size_t i) const { return balls_[i]; }
  const std::vector<WhitneyBall>& balls() const { return balls_; }

  /// Lambda = {i : 0 < r_i < diam(D)/2}, ascending.
  const std::vector<std::size_t>& lambda_set() const { return lambda_; }
  bool in_lambda(std::size_t i) const { return in_lambda_[i]; }

  /// Points of the open ball B(x_i, lambda r_i), ascending.
  std::vector<PointId> dilate(std::size_t i, double lambda) const;
  /// Cached dilate for a factor in kCachedDilations.
  const std::vector<PointId>& members(std::size_t i, double lambda) const;
  /// Balls i with x in lambda B_i, ascending; lambda in kCachedDilations.
  const std::vector<std::size_t>& containing(PointId x, double lambda) const;
  /// {j : lambda B_i and lambda B_j share a point} (including i); lambda in {3, 4}.
  const std::vector<std::size_t>& neighbors(std::size_t i, double lambda) const;

 private:
  std::size_t slot(double lambda) const;

  std::shared_ptr<const Domain> domain_;
  std::vector<WhitneyBall> balls_;
  std::vector<std::size_t> lambda_;
  std::vector<bool> in_lambda_;
  std::array<std::vector<std::vector<PointId>>, 3> members_;
  std::array<std::vector<std::vector<std::size_t>>, 3> containing_;
  std::array<std::vector<std::vector<std::size_t>>, 3> neighbors_;
};

struct GeometryWitness {
  std::size_t i = 0;
  std::size_t j = 0;
  PointId x = 0;
  double lambda = 0.0;
  std::string what;
};

struct DilationStats {
  double lambda = 0.0;
  // Extreme r_j / r_i over pairs whose dilates intersect.
  double min_radius_ratio = 1.0;
  double max_radius_ratio = 1.0;
  std::size_t max_neighbors = 0;
  std::size_t max_overlap = 0;
  // Number of i with r_i < diam(D) and lambda B_i leaving the diam(D)/4-neighbourhood of D.
  std::size_t far_count = 0;
};

struct GeometryReport {
  bool disjoint = true;        // D.i
  bool radius_identity = true; // D.ii
  bool covering = true;        // D.iii
  bool comparability = true;   // radius comparability of intersecting dilates
  bool distance_sandwich = true;
  bool lambda_covers_near_field = true;
  std::vector<DilationStats> dilations;  // lambda = 2, 3, 4
  std::vector<GeometryWitness> violations;

  bool ok() const {
    return disjoint && radius_identity && covering && comparability && distance_sandwich &&
           lambda_covers_near_field;
  }
  /// Throws GeometryViolation naming the first witness.
  void throw_if_violated() const;
};

GeometryReport verify_geometry(const WhitneyCover& cover);

/// Independent filter of the cover radii against diam(D)/2.
std::vector<std::size_t> lambda_index_set(const WhitneyCover& cover, const Domain& domain);

}  // namespace reflekt
