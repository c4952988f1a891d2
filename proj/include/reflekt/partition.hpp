#pragma once

#include <span>
#include <vector>

#include "reflekt/kernel.hpp"
#include "reflekt/whitney.hpp"

namespace reflekt {

/// Minimizer of the energy among functions equal to 1 on an inner set and 0 off an outer set.
struct CutoffPotential {
  Function values;               // on the whole space, in [0, 1]
  std::vector<PointId> support;  // the outer set, ascending
  double energy = 0.0;           // equals the relative capacity
};

/// Solves the harmonic system (deg - W_FF) f = W_FA 1 on the free set F = outer \ inner.
/// Free components that touch no inner point are set to 0. Dense Cholesky up to 2000
/// free points, preconditioned conjugate gradients (relative residual 1e-10) above.
CutoffPotential solve_equilibrium_potential(const JumpKernel& kernel,
                                            std::span<const PointId> inner,
                                            std::span<const PointId> outer);

struct EtaFamily {
  std::vector<CutoffPotential> eta;  // one per ball, for (5/2)B_i inside 3B_i
  // E(eta_i) phi(r_i) / m(B_i)
  std::vector<double> ratio;
  double max_ratio = 0.0;
  double min_ratio = 0.0;
  std::size_t argmax = 0;
};

EtaFamily build_eta(const JumpKernel& kernel, const WhitneyCover& cover);

struct PartitionOfUnity {
  std::vector<Function> psi;  // zero on D
  std::vector<double> energy;
  // E(psi_i) phi(r_i) / m(B_i)
  std::vector<double> energy_ratio;
  // 2 E(eta_i) + 2 n_i sum_j E(eta_j), j over the n_i balls with 3B_j meeting 3B_i.
  std::vector<double> energy_bound;
  double max_energy_ratio = 0.0;

  double max_sum_error = 0.0;         // max |sum_i psi_i - 1| on the exterior
  double max_lambda_sum_error = 0.0;  // same for the Lambda-sum where d(x,D) < diam(D)
  double min_far_lambda_sum = 1.0;    // Lambda-sum beyond diam(D), reported only
  bool sums_to_one = true;
  bool lambda_sums_to_one = true;
  bool supports_ok = true;
  bool range_ok = true;
  bool energy_chain_ok = true;
};

/// psi_i = eta_i / sum_j eta_j on the exterior, 0 on D, with its certificates.
PartitionOfUnity build_psi(const JumpKernel& kernel, const EtaFamily& eta,
                           const WhitneyCover& cover);

struct MassFunction {
  std::size_t ball = 0;
  PointId anchor = 0;  // y_i: nearest interior point to x_i
  int level = 0;       // floor(log2 r_i)
  std::vector<PointId> support;  // points of B_D(y_i, r_i), ascending
  std::vector<double> values;    // f_i on `support`
  double ball_mass = 0.0;        // m(B_D(y_i, r_i))
  double target = 0.0;           // kappa m(B_D(y_i, r_i))
  double integral = 0.0;         // sum f_i m
  double headroom = 0.0;         // sum over the ball of (1 - prior f) m
};

struct MassFunctions {
  std::vector<MassFunction> f;             // parallel to cover.lambda_set()
  std::vector<std::size_t> order;          // construction order, indices into f
  std::vector<std::size_t> slot_of_ball;   // ball index -> index into f, or npos
  double C1 = 1.0;  // max m(23 B_i) / m(B_i)
  double C2 = 1.0;  // min m(B_D(y_i, r_i)) / m(B_i)
  double C3 = 1.0;  // max m(B_D(y_i, r_i)) / m(B_i)
  double kappa = 0.5;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  const MassFunction* for_ball(std::size_t i) const {
    return slot_of_ball[i] == npos ? nullptr : &f[slot_of_ball[i]];
  }
  Function dense(std::size_t slot, std::size_t n) const;
};

/// Fixed-level recursion in (level, center identifier) order; each f_i is the water level
/// min(headroom, t) over B_D(y_i, r_i) with t set by the target mass. Throws
/// FeasibilityFailure if the headroom falls below half the ball mass.
MassFunctions build_mass_functions(const WhitneyCover& cover);

struct MassCertificate {
  bool range_and_sum = true;     // 0 <= f_i <= 1, sum_i f_i <= 1 on D
  bool support_diameter = true;  // diam(supp f_i) <= 2 r_i
  bool support_distance = true;  // d(x_i, supp f_i) <= 7 r_i
  bool anchor_distance = true;   // d(x_i, y_i) <= 6 r_i
  bool support_in_ball = true;   // supp f_i inside B_D(y_i, r_i)
  bool mass_exact = true;        // integral equals the target
  double C_stated = 0.0;         // 2 C1 C3 / C2
  double C_corrected = 0.0;      // 2 C1 C3 / C2^2
  bool mass_comparable_stated = true;
  bool mass_comparable_corrected = true;
  // extremes of integral / m(B_i)
  double min_mass_ratio = 0.0;
  double max_mass_ratio = 0.0;
  std::size_t min_mass_ball = 0;
  double max_sum = 0.0;
};

MassCertificate certify_mass_functions(const MassFunctions& mf, const WhitneyCover& cover);

}  // namespace reflekt
