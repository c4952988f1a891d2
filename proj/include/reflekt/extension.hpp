#pragma once

#include <memory>
#include <span>
#include <vector>

#include "reflekt/kernel.hpp"
#include "reflekt/partition.hpp"
#include "reflekt/probes.hpp"
#include "reflekt/whitney.hpp"

namespace reflekt {

/// Weighted mean of u under f_i m for a ball i in Lambda. Throws ZeroMass if f_i has no mass.
double ball_mean(const MassFunctions& mf, const MetricMeasureSpace& space, const Function& u,
                 std::size_t ball);

/// Eu = u on D and sum_{i in Lambda} [u]_i psi_i off D.
///
/// Self-contained: stores for each i in Lambda the averaging weights f_i m / int f_i m
/// and the nonzero values of psi_i, plus the 4B_i membership lists used by the energy split.
class ExtensionOperator {
 public:
  static ExtensionOperator build(const WhitneyCover& cover, const PartitionOfUnity& pu,
                                 const MassFunctions& mf);
  /// Eu = u on a domain with empty exterior, where no cover exists. Throws InvalidArgument
  /// if the domain has exterior points.
  static ExtensionOperator identity(std::shared_ptr<const Domain> domain);

  const Domain& domain() const { return *domain_; }
  const std::shared_ptr<const Domain>& domain_ptr() const { return domain_; }
  std::size_t size() const { return n_; }
  std::size_t terms() const { return terms_.size(); }
  std::size_t ball_of(std::size_t slot) const { return terms_[slot].ball; }

  /// [u]_i for the slot-th ball of Lambda; u is indexed over the whole space.
  double mean(const Function& u, std::size_t slot) const;
  /// u is indexed over the whole space; values off D are ignored.
  Function extend(const Function& u) const;
  /// u given on D in Domain::local_index order.
  Function extend_local(const Function& u_local) const;

  /// True when some 4B_i contains both x and y.
  bool near_diagonal(PointId x, PointId y) const;

 private:
  struct Term {
    std::size_t ball = 0;
    std::vector<PointId> avg_points;
    std::vector<double> avg_weights;  // sum to 1
    std::vector<PointId> psi_points;
    std::vector<double> psi_values;
  };

  std::shared_ptr<const Domain> domain_;
  std::size_t n_ = 0;
  std::vector<Term> terms_;
  std::vector<std::vector<std::size_t>> in4_;  // balls whose 4-dilate holds x, ascending
};

struct L2Report {
  FittedTable table;  // lhs = sum over B(x0,r) of (Eu)^2 m, rhs = sum over B_D(x0,7r) of u^2 m
  double global_lhs = 0.0;  // ||Eu||^2 over the space
  double global_rhs = 0.0;  // ||u||^2 over D
  double global_ratio = 0.0;
};

L2Report l2_locality_report(const ExtensionOperator& op, const Function& u,
                            std::span<const PointId> centers, std::span<const double> radii,
                            std::size_t fn = 0);

struct SplitRow {
  PointId x0 = 0;
  double r = 0.0;
  std::size_t fn = 0;
  // Ordered-pair energies of Eu inside B(x0,r) x B(x0,r).
  double near = 0.0;   // both points off D, inside a common 4B_i
  double off = 0.0;    // both points off D, otherwise
  double cross = 0.0;  // first point off D, second in D
  double total = 0.0;  // all pairs not in D x D, summed directly
  double full = 0.0;   // all pairs
  // Ordered-pair energies of u over D.
  double rhs_near = 0.0;      // B_D(x0,7r) x B_D(x0,14r)
  double rhs_off = 0.0;       // B_D(x0,7r) x B_D(x0,7r)
  double rhs_cross = 0.0;     // B_D(x0,7r) x B_D(x0,r)
  double additivity_error = 0.0;  // |near + off + 2 cross - total| / max(total, tiny)
};

struct EnergySplitReport {
  std::vector<SplitRow> rows;
  FittedTable near, off, cross, combined;  // combined: full against rhs_near
  double max_additivity_error = 0.0;
  bool additive = true;  // every row within 1e-12 relative
};

/// Rows for every (center, radius, function); the pair classification is shared across
/// the family.
EnergySplitReport energy_split_report(const ExtensionOperator& op, const JumpKernel& kernel,
                                      std::span<const Function> family,
                                      std::span<const PointId> centers,
                                      std::span<const double> radii);
EnergySplitReport energy_split_report(const ExtensionOperator& op, const JumpKernel& kernel,
                                      const Function& u, std::span<const PointId> centers,
                                      std::span<const double> radii);

struct ExtensionEnergyRow {
  double ambient = 0.0;    // E(Eu) + ||Eu||^2 over the space
  double reflected = 0.0;  // reflected E(u) + ||u||^2 over D
  double ratio = 0.0;
  bool vacuous = false;
};

ExtensionEnergyRow extension_energy_bound(const ExtensionOperator& op, const JumpKernel& kernel,
                                          const Function& u);

struct ContainmentWitness {
  PointId x0 = 0;
  std::size_t ball = 0;
  double nearest = 0.0;   // d(x0, lambda B_i)
  double farthest = 0.0;  // max distance from x0 to supp f_i
};

/// Index-set containments over every x0 in D and every r > 0:
///   {i in Lambda : 3B_i meets B(x0,r)} inside {i in Lambda : supp f_i inside B(x0,7r)},
///   {i in Lambda : 4B_i meets B(x0,r)} inside {i in Lambda : supp f_i inside B(x0,14r)}.
/// For fixed (x0, i) both reduce to farthest <= k * nearest, which is what is checked.
struct ContainmentReport {
  bool seven = true;
  bool fourteen = true;
  double worst_seven = 0.0;     // max farthest / (7 nearest)
  double worst_fourteen = 0.0;  // max farthest / (14 nearest)
  std::vector<ContainmentWitness> violations;
  std::size_t pairs = 0;
  bool ok() const { return seven && fourteen; }
};

ContainmentReport check_index_containments(const WhitneyCover& cover, const MassFunctions& mf);

/// Pointwise distance inequalities used by the off-diagonal and cross energy estimates:
///   9 d(x,y) >= max(r_i, r_j)     for x in 3B_i, y in 3B_j \ 4B_i,
///   d(x,y) >= (2/5) d(x_i,y)      for x in 3B_i, y in D,
///   d(x_i,y) >= (5/14) d(z,y)     for z in supp f_i (i in Lambda), y in D.
/// The reported minima are the left sides divided by the right sides.
struct PointwiseReport {
  bool ninth = true;
  bool two_fifths = true;
  bool five_fourteenths = true;
  double min_ninth = std::numeric_limits<double>::infinity();
  double min_two_fifths = std::numeric_limits<double>::infinity();
  double min_five_fourteenths = std::numeric_limits<double>::infinity();
  std::size_t checks = 0;
  bool ok() const { return ninth && two_fifths && five_fourteenths; }
};

PointwiseReport check_pointwise_inequalities(const WhitneyCover& cover, const MassFunctions& mf);

}  // namespace reflekt
