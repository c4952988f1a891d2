#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "reflekt/kernel.hpp"

namespace reflekt {

inline constexpr std::size_t kMaxSpectralPoints = 4096;

/// (Lf)(x) = sum_y (f(y) - f(x)) J(x,y) m(y), with its m-orthonormal eigenbasis.
class Generator {
 public:
  /// Throws ResolutionTooLarge above kMaxSpectralPoints.
  static Generator build(const JumpKernel& kernel);

  const MetricMeasureSpace& space() const { return *space_; }
  const SpacePtr& space_ptr() const { return space_; }
  const ScaleFunction& scale() const { return sf_; }
  std::size_t size() const { return n_; }

  /// Ascending, all <= 0 up to rounding.
  const Eigen::VectorXd& eigenvalues() const { return lambda_; }
  /// Columns are eigenfunctions with sum_x phi_k(x) phi_l(x) m(x) = delta_kl.
  const Eigen::MatrixXd& eigenfunctions() const { return phi_; }
  const Eigen::MatrixXd& matrix() const { return L_; }

  /// max |m(x) L(x,y) - m(y) L(y,x)| relative to max |m(x) L(x,y)|.
  double symmetry_error() const { return symmetry_error_; }
  bool connected() const { return connected_; }

  Function apply(const Function& f) const;
  /// p(t,x,y) = sum_k exp(lambda_k t) phi_k(x) phi_k(y), the density against m.
  /// Throws NonPositiveTime.
  Eigen::MatrixXd heat_kernel(double t) const;
  /// exp(tL) f through the spectral data.
  Function propagate(const Function& f, double t) const;

 private:
  SpacePtr space_;
  ScaleFunction sf_ = ScaleFunction::power(1.0);
  std::size_t n_ = 0;
  Eigen::MatrixXd L_;
  Eigen::VectorXd lambda_;
  Eigen::MatrixXd phi_;
  double symmetry_error_ = 0.0;
  bool connected_ = true;
};

/// q(t,x,y) = min(1/V(x, phi^{-1}(t)), t / (V(x,d) phi(d))), and 1/V(x, phi^{-1}(t)) at x = y.
class HkEnvelope {
 public:
  HkEnvelope(SpacePtr space, ScaleFunction sf) : space_(std::move(space)), sf_(sf) {}
  double operator()(double t, PointId x, PointId y) const;

 private:
  SpacePtr space_;
  ScaleFunction sf_;
};

struct HkWitness {
  double t = 0.0;
  PointId x = 0;
  PointId y = 0;
  double p = 0.0;
  double q = 0.0;
  double ratio = 0.0;
};

struct HkOptions {
  double window_low = 2.0;    // t >= phi(window_low * mesh)
  double window_high = 0.25;  // t <= phi(window_high * diam)
  std::size_t time_points = 6;
  std::size_t sample_pairs = 64;  // pairs kept for plot data
  std::uint64_t seed = 1;
  // Overrides the window when both are positive; mesh and diam of this length scale.
  double mesh_override = 0.0;
  double diam_override = 0.0;
};

struct HkRatioReport {
  std::vector<double> times;  // log-uniform over the window
  double t_min = 0.0;
  double t_max = 0.0;
  double inf_ratio = 0.0;
  double sup_ratio = 0.0;
  HkWitness inf_witness;
  HkWitness sup_witness;
  double log_width = 0.0;  // log(sup / inf)
  std::size_t pairs = 0;     // admissible (x, y) per time
  std::size_t excluded = 0;  // pairs with V(x, d(x,y)) holding fewer than 2 points
  double min_p = 0.0;        // raw minimum over all (t, x, y)
  std::vector<HkWitness> samples;  // time-major, |times| x sample size
  bool positive_finite() const {
    return inf_ratio > 0.0 && std::isfinite(sup_ratio) && std::isfinite(log_width);
  }
};

HkRatioReport hk_ratio_report(const Generator& gen, const HkOptions& opt = {});

struct SemigroupReport {
  double symmetry = 0.0;          // max relative asymmetry of p
  double conservation = 0.0;      // max |sum_y p m - 1|
  double min_p = 0.0;
  double chapman_kolmogorov = 0.0;  // relative error of p_s M p_t against p_{s+t}
  bool symmetric = true;
  bool conservative = true;
  bool positive = true;
  bool semigroup = true;
  bool ok() const { return symmetric && conservative && positive && semigroup; }
};

/// Symmetry (1e-12 relative) and conservation (1e-10) at t in {0.01, 1, 100},
/// positivity on connected instances, Chapman-Kolmogorov at (0.1, 0.2) to 1e-8.
SemigroupReport semigroup_checks(const Generator& gen);

struct MainTheoremReport {
  double c_domain = 0.0;
  HkRatioReport ambient;
  HkRatioReport reflected;
  double kappa = 0.0;  // reflected log-width / ambient log-width
};

/// Ambient and reflected bands on the time window of D. Throws NotAhlforsRegular when
/// the Ahlfors constant of D is below `min_c_domain`.
MainTheoremReport main_theorem_experiment(const JumpKernel& ambient, const Domain& domain,
                                          const HkOptions& opt = {},
                                          double min_c_domain = 0.05);
/// Same, reusing an ambient generator built from `ambient`. When D = X the reflected band
/// is the ambient one.
MainTheoremReport main_theorem_experiment(const Generator& ambient_gen, const JumpKernel& ambient,
                                          const Domain& domain, const HkOptions& opt = {},
                                          double min_c_domain = 0.05);

}  // namespace reflekt
