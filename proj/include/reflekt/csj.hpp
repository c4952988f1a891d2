#pragma once

#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "reflekt/extension.hpp"
#include "reflekt/kernel.hpp"
#include "reflekt/probes.hpp"

namespace reflekt {

/// Gamma(u,u)(x) = sum_y (u(x) - u(y))^2 J(x,y) m(y), a density against m.
Function carre_du_champ(const JumpKernel& kernel, const Function& u);

struct CutoffCandidate {
  enum class Provenance { Equilibrium, Composite };
  PointId x0 = 0;
  double inner_radius = 0.0;  // equal to 1 on B(x0, inner_radius)
  double outer_radius = 0.0;  // equal to 0 off B(x0, outer_radius)
  Function values;
  Provenance provenance = Provenance::Equilibrium;
  // Composite only: net centers on B_2 \ B_1, the net radius and the annulus pieces.
  std::vector<PointId> net;
  double net_radius = 0.0;
  double big_r = 0.0;
  double r = 0.0;
};

/// Equilibrium potential for B(x0,r) inside B(x0,2r).
CutoffCandidate csjb_cutoff(const JumpKernel& kernel, PointId x0, double r);

/// One (lhs, energy, mass) row; the mass term already carries the 1/phi(r) factor.
struct CsjRow {
  PointId x0 = 0;
  double big_r = 0.0;  // R for CSJ rows, 0 for CSJB rows
  double r = 0.0;
  std::size_t fn = 0;
  double lhs = 0.0;
  double energy = 0.0;
  double mass = 0.0;
};

/// Rows with two fits: the ray C1 = C2 = C (the table constant, against energy + mass)
/// and the Pareto pairs (C1, minimal C2) for C1 in {0, C}.
struct CsjFit {
  std::vector<CsjRow> rows;
  FittedTable table;
  std::array<std::pair<double, double>, 2> pareto{};

  void add(const CsjRow& row);
  void append(const CsjFit& other);
  void finalize();
  double ray() const { return table.constant; }
  /// Every row satisfies lhs <= C1 energy + C2 mass at the given pair (relative slack 1e-12).
  bool holds(double C1, double C2) const;
};

/// CSJB rows: lhs = sum over B(x0,3r)^2 of f(x)^2 (phi(x) - phi(y))^2 w, energy over
/// B(x0, lambda r)^2, mass over B(x0, lambda r) divided by phi(r).
CsjFit csjb_check(const JumpKernel& kernel, PointId x0, double r,
                  std::span<const Function> family, double lambda = 3.0);
CsjRow csjb_row(const JumpKernel& kernel, const CutoffCandidate& cutoff, const Function& f,
                double lambda = 3.0, std::size_t fn = 0);

/// Cutoff for B(x0,R) inside B(x0,R+r): with B_l = B(x0, R + l r / 4), a greedy net of
/// B_2 \ B_1 at radius r/(4 lambda), local CSJB cutoffs phi_j around the net points and
/// an equilibrium psi for B_1 inside B_2; the result is max(max_j phi_j, psi).
CutoffCandidate csj_composite_cutoff(const JumpKernel& kernel, PointId x0, double big_r,
                                     double r, double lambda = 3.0);

/// Throws InvalidCutoff unless the candidate is 1 on B(x0,R), 0 off B(x0,R+r) and in [0,1].
void validate_cutoff(const MetricMeasureSpace& space, const CutoffCandidate& cutoff);

/// CSJ with C0 = 1: lhs = sum over B(x0,R+2r) of f^2 Gamma(cutoff) m, energy over U x U*
/// with U = B(x0,R+r) \ B(x0,R) and U* = B(x0,R+2r) \ B(x0,R-r), mass over B(x0,R+2r).
CsjRow csj_check(const JumpKernel& kernel, const CutoffCandidate& cutoff, const Function& f,
                 std::size_t fn = 0);

/// Constructive bound for a composite cutoff. The local CSJB rows around the net points
/// are fitted on the ray (C_B), the net overlap at radius r/4 is C3, and with
/// s = r/(4 lambda) the composite row satisfies
///   lhs <= K1 energy + K2 mass,
///   K1 = C_B C3,  K2 = C_B C3 phi(r)/phi(s) + max(tail(s) phi(r)/phi(s), tail(r/4) phi(r)/phi(r/4)),
/// tail(.) the tail constant of the kernel at that radius.
struct CompositeCertificate {
  CsjRow row;
  double local_ray = 0.0;  // C_B over the local rows
  std::size_t overlap = 0; // C3
  double K1 = 0.0;
  double K2 = 0.0;
  // Near-diagonal annulus part against the summed local rows.
  double near_lhs = 0.0;
  double near_rhs = 0.0;
  // Remaining pairs against their tail bounds.
  double far_lhs = 0.0;
  double far_rhs = 0.0;
  bool near_ok = true;
  bool far_ok = true;
  bool holds = true;  // row.lhs <= K1 energy + K2 mass
};

CompositeCertificate certify_composite(const JumpKernel& kernel, const CutoffCandidate& cutoff,
                                       const Function& f, double lambda = 3.0,
                                       std::size_t fn = 0);

/// Reflected CSJB through the extension: with g = Ef and the ambient cutoff for
/// B(x0,r) inside B(x0,2r),
///   reflected lhs <= ambient lhs <= C_B (ambient energy + ambient mass),
///   ambient mass <= C3 (mass of f over B_D(x0, 7 lambda r)),
///   ambient energy <= C4 (energy of f over B_D(x0, 14 lambda r)^2).
struct ReflectedCsjRow {
  PointId x0 = 0;
  double r = 0.0;
  std::size_t fn = 0;
  double reflected_lhs = 0.0;
  double ambient_lhs = 0.0;
  double ambient_energy = 0.0;
  double ambient_mass = 0.0;
  double domain_energy = 0.0;   // over B_D(x0, 14 lambda r)^2
  double domain_mass7 = 0.0;    // over B_D(x0, 7 lambda r), divided by phi(r)
  double domain_mass14 = 0.0;   // over B_D(x0, 14 lambda r), divided by phi(r)
  bool monotone = true;         // reflected lhs <= ambient lhs
};

std::vector<ReflectedCsjRow> reflected_csj_via_extension(const JumpKernel& kernel,
                                                         const ExtensionOperator& op,
                                                         PointId x0, double r,
                                                         std::span<const Function> family,
                                                         double lambda = 3.0);

struct ReflectedCsjReport {
  std::vector<ReflectedCsjRow> rows;
  CsjFit ambient;    // ambient CSJB rows for g = Ef
  CsjFit reflected;  // reflected lhs against domain energy + mass over B_D(x0, 14 lambda r)
  double C3 = 0.0;   // max ambient mass / domain mass7
  double C4 = 0.0;   // max ambient energy / domain energy
  double chain_bound = 0.0;  // ambient ray * max(C3, C4)
  bool monotone = true;
  bool chain_ok = true;      // reflected ray <= chain_bound
};

ReflectedCsjReport summarize_reflected(std::vector<ReflectedCsjRow> rows);

}  // namespace reflekt
