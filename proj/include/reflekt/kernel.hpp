#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "reflekt/space.hpp"

namespace reflekt {

/// Strictly increasing scale function with phi(0) = 0 and phi(1) = 1.
///
/// Both kinds are piecewise powers in log-log coordinates, so the two-sided
/// growth bounds hold with c1 = c2 = 1, beta1 = smallest exponent and
/// beta2 = largest exponent.
class ScaleFunction {
 public:
  enum class Kind { Power, TwoRegime };

  static ScaleFunction power(double beta);
  /// r^beta_low below the crossover radius, r^beta_high above it, renormalized at 1.
  static ScaleFunction two_regime(double beta_low, double beta_high, double crossover);

  double operator()(double r) const;
  double inverse(double t) const;

  Kind kind() const { return kind_; }
  double beta_low() const { return beta_low_; }
  double beta_high() const { return beta_high_; }
  double crossover() const { return crossover_; }
  double beta1() const { return std::min(beta_low_, beta_high_); }
  double beta2() const { return std::max(beta_low_, beta_high_); }
  double c1() const { return 1.0; }
  double c2() const { return 1.0; }

  /// Checks c1 (R/r)^beta1 <= phi(R)/phi(r) <= c2 (R/r)^beta2 for dyadic r <= R in [lo, hi].
  bool satisfies_growth_bounds(double lo, double hi) const;

 private:
  ScaleFunction() = default;
  double raw(double r) const;

  Kind kind_ = Kind::Power;
  double beta_low_ = 1.0;
  double beta_high_ = 1.0;
  double crossover_ = 1.0;
  double norm_ = 1.0;
};

struct JphiFit {
  // C1 <= J(x,y) V(x,d(x,y)) phi(d(x,y)) <= C2 over ordered pairs x != y.
  double C1 = 0.0;
  double C2 = 0.0;
  PointId lo_x = 0, lo_y = 0;
  PointId hi_x = 0, hi_y = 0;
};

struct TailReport {
  // tail_mass(x,r) <= c / phi(r) over all x and dyadic r.
  double c = 0.0;
  PointId witness_x = 0;
  double witness_r = 0.0;
  bool finite = true;
};

struct BoundRow {
  double lhs = 0.0;
  double rhs = 0.0;
  // lhs / rhs, with 0/0 defined as 0.
  double ratio = 0.0;
  bool holds = true;
};

/// Symmetric pure-jump form with weights w(x,y) = J(x,y) m(x) m(y).
class JumpKernel {
 public:
  using PairPredicate = std::function<bool(PointId, PointId)>;

  static JumpKernel build(SpacePtr space, const ScaleFunction& sf, double normalization = 1.0);
  /// Kernel with explicit weights; `w` must be symmetric, nonnegative and zero on the diagonal.
  static JumpKernel from_weights(SpacePtr space, std::vector<double> w,
                                 const ScaleFunction& sf = ScaleFunction::power(1.0));

  const MetricMeasureSpace& space() const { return *space_; }
  const SpacePtr& space_ptr() const { return space_; }
  const ScaleFunction& scale() const { return sf_; }
  double normalization() const { return normalization_; }
  std::size_t size() const { return n_; }

  double weight(PointId x, PointId y) const { return w_[std::size_t(x) * n_ + y]; }
  std::span<const double> weights_from(PointId x) const {
    return {w_.data() + std::size_t(x) * n_, n_};
  }
  double jump(PointId x, PointId y) const {
    return weight(x, y) / (space_->mass(x) * space_->mass(y));
  }
  /// sum_y w(x,y).
  double degree(PointId x) const { return degree_[x]; }
  const JphiFit& jphi() const { return jphi_; }

  double energy(const Function& f, const Function& g) const;
  double energy(const Function& f) const;
  /// Energy of a function vanishing off `support`, in O(|support|^2).
  double energy_sparse(const Function& f, std::span<const PointId> support) const;

  /// Ordered-pair sums of (f(x)-f(y))^2 w(x,y), without the factor 1/2.
  double restricted_energy(const Function& f, const PairPredicate& in_set) const;
  double restricted_energy(const Function& f, std::span<const PointId> A,
                           std::span<const PointId> B) const;

  /// sum over d(x,y) >= r of J(x,y) m(y).
  double tail_mass(PointId x, double r) const;
  /// max_x tail_mass(x,r) phi(r).
  double tail_constant_at(double r) const;
  TailReport tail_bound_check() const;
  /// Long-range energy against (4c/phi(r)) ||f||^2, c the larger of the fitted tail
  /// constant and the tail constant at r itself.
  BoundRow long_range_energy_bound(const Function& f, double r, const TailReport& tail) const;

  /// Same weights on D x D over the subspace D; never renormalized.
  JumpKernel restrict_to(const Domain& domain) const;

 private:
  JumpKernel() : sf_(ScaleFunction::power(1.0)) {}
  void finalize();
  void check_size(const Function& f) const;

  SpacePtr space_;
  ScaleFunction sf_;
  double normalization_ = 1.0;
  std::size_t n_ = 0;
  std::vector<double> w_;
  std::vector<double> degree_;
  JphiFit jphi_;
};

/// Reflected form on a domain: the ambient weights on D x D with measure m0 = m on D.
struct ReflectedForm {
  std::shared_ptr<const Domain> domain;
  JumpKernel kernel;  // on the subspace D, indexed by Domain::local_index

  /// Reflected energy of u given on D (local indexing).
  double energy(const Function& u_local) const { return kernel.energy(u_local); }
};

ReflectedForm reflected_form(const JumpKernel& ambient, std::shared_ptr<const Domain> domain);

/// Ratio helper: 0/0 is 0, x/0 is +inf.
double safe_ratio(double lhs, double rhs);

}  // namespace reflekt
