#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "reflekt/space.hpp"

namespace reflekt {

/// Seeded generator with a fixed double mapping, so sampled probe sets do not depend on
/// the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// All of D when |D| <= max_centers, otherwise a mass-weighted sample without
/// replacement; ascending.
std::vector<PointId> sample_centers(const Domain& domain, std::size_t max_centers,
                                    std::uint64_t seed);

/// Dyadic radii in [lo_factor * mesh(D), hi_factor * diam(D)].
std::vector<double> probe_radii(const Domain& domain, double lo_factor = 2.0,
                                double hi_factor = 0.5);

struct TestFunction {
  std::string name;
  Function values;  // on the whole space
};

/// The eight probe functions: constant, first coordinate, second coordinate (its square
/// on one-dimensional instances), a cosine, a product of cosines, seeded random signs,
/// a half-space indicator and a radial bump. Spaces without coordinates use x = id/(n-1).
std::vector<TestFunction> test_family(const MetricMeasureSpace& space, std::uint64_t seed);

struct ProbeRow {
  PointId x0 = 0;
  double r = 0.0;
  std::size_t fn = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  bool vacuous = false;  // rhs == 0 and lhs at roundoff level
};

/// Rows of lhs <= C rhs with C fitted as the largest non-vacuous ratio.
struct FittedTable {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  std::vector<ProbeRow> rows;
  double constant = 0.0;
  std::size_t witness = npos;
  std::vector<double> radii;       // distinct radii, ascending
  std::vector<double> per_radius;  // fitted constant restricted to each radius
  bool finite = true;

  /// Appends a row. An lhs <= floor counts as zero: ratio 0, vacuous when rhs is 0 too.
  void add(PointId x0, double r, std::size_t fn, double lhs, double rhs, double floor = 0.0);
  void append(const FittedTable& other);
  /// Recomputes constant, witness and the per-radius constants.
  void finalize();
  /// max / min of the positive per-radius constants; 1 when fewer than two are positive.
  double sweep_spread() const;
  bool all_hold() const;
};

}  // namespace reflekt
