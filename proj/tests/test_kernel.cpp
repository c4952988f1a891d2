#include <gtest/gtest.h>

#include <cmath>

#include "reflekt/error.hpp"
#include "reflekt/generators.hpp"
#include "reflekt/kernel.hpp"
#include "test_support.hpp"

using namespace reflekt;
using namespace reflekt::testing;

TEST(Scale, PowerValues) {
  const auto phi = ScaleFunction::power(1.5);
  EXPECT_EQ(phi(1.0), 1.0);
  EXPECT_EQ(phi(0.0), 0.0);
  EXPECT_NEAR(phi(4.0), 8.0, 1e-12);
  EXPECT_NEAR(phi.inverse(8.0), 4.0, 1e-10);
  EXPECT_TRUE(phi.satisfies_growth_bounds(1e-3, 1e3));
}

TEST(Scale, TwoRegimeIsContinuousAndMonotone) {
  const auto phi = ScaleFunction::two_regime(1.0, 1.8, 0.1);
  EXPECT_NEAR(phi(1.0), 1.0, 1e-14);
  EXPECT_NEAR(phi(0.1 * (1 - 1e-12)), phi(0.1 * (1 + 1e-12)), 1e-10);
  double prev = 0.0;
  for (double r = 1e-3; r < 10.0; r *= 1.3) {
    EXPECT_GT(phi(r), prev);
    EXPECT_NEAR(phi.inverse(phi(r)), r, 1e-8 * r);
    prev = phi(r);
  }
  EXPECT_EQ(phi.beta1(), 1.0);
  EXPECT_EQ(phi.beta2(), 1.8);
  EXPECT_TRUE(phi.satisfies_growth_bounds(1e-3, 1e2));
}

TEST(Kernel, TwoPointJumpIsNormalization) {
  auto X = two_point_space();
  for (double c : {1.0, 2.5}) {
    const auto k = JumpKernel::build(X, ScaleFunction::power(1.5), c);
    EXPECT_DOUBLE_EQ(k.jump(0, 1), c);
    EXPECT_DOUBLE_EQ(k.energy(Function{0.0, 1.0}), c);
  }
  EXPECT_THROW(JumpKernel::build(X, ScaleFunction::power(1.5), 0.0), Error);
}

TEST(Kernel, EnergyMatchesNaiveDoubleSum) {
  for (std::size_t n : {7u, 33u, 64u}) {
    auto X = path_space(n, 1.0 / double(n));
    const auto k = JumpKernel::build(X, ScaleFunction::power(1.5), 1.3);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto f = random_function(n, seed);
      EXPECT_LE(rel_err(k.energy(f), naive_energy(k, f)), 1e-12);
      const auto g = random_function(n, seed + 10);
      EXPECT_NEAR(k.energy(f, g), k.energy(g, f), 1e-12 * (1 + std::abs(k.energy(f, g))));
      // Product over all ordered pairs equals twice the energy.
      EXPECT_LE(rel_err(k.restricted_energy(f, [](PointId, PointId) { return true; }), 2 * k.energy(f)),
                1e-12);
      EXPECT_LE(rel_err(k.restricted_energy(f, range_ids(0, n), range_ids(0, n)), 2 * k.energy(f)),
                1e-12);
    }
  }
}

TEST(Kernel, RestrictedEnergySplitsAdditively) {
  auto X = grid_space(8);
  const auto k = JumpKernel::build(X, ScaleFunction::power(1.5));
  const auto f = random_function(X->size(), 5);
  const auto A = range_ids(0, 20), B = range_ids(20, 64);
  const double whole = k.restricted_energy(f, range_ids(0, 64), range_ids(0, 64));
  const double parts = k.restricted_energy(f, A, A) + k.restricted_energy(f, A, B) +
                       k.restricted_energy(f, B, A) + k.restricted_energy(f, B, B);
  EXPECT_LE(rel_err(whole, parts), 1e-12);
}

TEST(Kernel, SparseEnergyMatchesDense) {
  auto X = grid_space(9);
  const auto k = JumpKernel::build(X, ScaleFunction::power(1.2));
  Function f(X->size(), 0.0);
  const std::vector<PointId> support = {3, 10, 11, 40, 41, 42};
  for (PointId x : support) f[x] = 0.3 + 0.1 * double(x % 7);
  EXPECT_LE(rel_err(k.energy_sparse(f, support), k.energy(f)), 1e-12);
}

TEST(Kernel, SymmetryAndJphiBounds) {
  GeneratorParams p;
  p.resolution = 11;
  const auto inst = generate_example("comb", p);
  const auto k = JumpKernel::build(inst.space, ScaleFunction::power(1.5));
  const auto& X = *inst.space;
  for (PointId x = 0; x < X.size(); ++x)
    for (PointId y = 0; y < X.size(); ++y) {
      EXPECT_EQ(k.jump(x, y), k.jump(y, x));
      if (x == y) continue;
      const double d = X.distance(x, y);
      const double v = k.jump(x, y) * X.volume(x, d) * k.scale()(d);
      EXPECT_GE(v, k.jphi().C1 * (1 - 1e-12));
      EXPECT_LE(v, k.jphi().C2 * (1 + 1e-12));
    }
  EXPECT_GT(k.jphi().C1, 0.0);
  EXPECT_TRUE(std::isfinite(k.jphi().C2));
}

TEST(Kernel, MarkovContraction) {
  auto X = grid_space(7);
  const auto k = JumpKernel::build(X, ScaleFunction::power(1.5));
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    const auto f = random_function(X->size(), seed, -2.0, 2.0);
    Function g(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) g[i] = std::clamp(f[i], 0.0, 1.0);
    EXPECT_LE(k.energy(g), k.energy(f) * (1 + 1e-12));
  }
  EXPECT_NEAR(k.energy(Function(X->size(), 3.0)), 0.0, 1e-12);
}

TEST(Kernel, TailMassVanishesBeyondDiameter) {
  auto X = path_space(21, 0.05);
  const auto k = JumpKernel::build(X, ScaleFunction::power(1.5));
  for (PointId x = 0; x < X->size(); ++x) {
    EXPECT_EQ(k.tail_mass(x, X->diam() * 1.01), 0.0);
    double prev = k.tail_mass(x, X->mesh());
    for (double r : dyadic_radii(X->mesh(), X->diam())) {
      EXPECT_LE(k.tail_mass(x, r), prev);
      prev = k.tail_mass(x, r);
    }
  }
  const auto tail = k.tail_bound_check();
  EXPECT_TRUE(tail.finite);
  EXPECT_NEAR(k.tail_mass(tail.witness_x, tail.witness_r) * k.scale()(tail.witness_r), tail.c,
              1e-12 * tail.c);
}

TEST(Kernel, LongRangeEnergyBound) {
  GeneratorParams p;
  p.resolution = 13;
  const auto inst = generate_example("grid_with_slits", p);
  const auto k = JumpKernel::build(inst.space, ScaleFunction::power(1.5));
  const auto tail = k.tail_bound_check();
  for (std::uint64_t seed : {1u, 2u}) {
    const auto f = random_function(inst.space->size(), seed);
    for (double r : dyadic_radii(inst.space->mesh(), inst.space->diam())) {
      const auto row = k.long_range_energy_bound(f, r, tail);
      EXPECT_TRUE(row.holds) << "r=" << r << " lhs=" << row.lhs << " rhs=" << row.rhs;
      EXPECT_LE(row.lhs, row.rhs * (1 + 1e-12));
    }
  }
}

TEST(Kernel, FromWeightsValidation) {
  auto X = two_point_space();
  EXPECT_THROW(JumpKernel::from_weights(X, {0, 1, 2, 0}), Error);
  EXPECT_THROW(JumpKernel::from_weights(X, {1, 1, 1, 0}), Error);
  EXPECT_THROW(JumpKernel::from_weights(X, {0, 1, 1}), Error);
  const auto k = JumpKernel::from_weights(X, {0, 2, 2, 0});
  EXPECT_DOUBLE_EQ(k.energy(Function{1.0, 0.0}), 2.0);
  EXPECT_THROW(k.energy(Function{1.0}), Error);
}

TEST(Kernel, ReflectedFormKeepsAmbientWeights) {
  GeneratorParams p;
  p.resolution = 41;
  const auto inst = generate_example("path_interval", p);
  const auto k = JumpKernel::build(inst.space, ScaleFunction::power(1.5));
  const auto refl = reflected_form(k, inst.domain);
  const auto& D = *inst.domain;
  for (std::size_t a = 0; a < D.size(); ++a)
    for (std::size_t b = 0; b < D.size(); ++b)
      EXPECT_EQ(refl.kernel.weight(PointId(a), PointId(b)), k.weight(D.interior()[a], D.interior()[b]));
  // Restricted energy on D x D is twice the reflected energy.
  const auto f = random_function(inst.space->size(), 9);
  EXPECT_LE(rel_err(k.restricted_energy(f, D.interior(), D.interior()), 2 * refl.energy(D.restrict(f))),
            1e-12);
}

TEST(Kernel, ReflectedFormOnFullDomainIsAmbient) {
  auto X = grid_space(6);
  const auto k = JumpKernel::build(X, ScaleFunction::power(1.5));
  auto D = std::make_shared<const Domain>(X, range_ids(0, X->size()));
  const auto refl = reflected_form(k, D);
  for (std::uint64_t seed : {1u, 2u}) {
    const auto f = random_function(X->size(), seed);
    EXPECT_DOUBLE_EQ(refl.energy(f), k.energy(f));
  }
}

TEST(Kernel, SafeRatio) {
  EXPECT_EQ(safe_ratio(0.0, 0.0), 0.0);
  EXPECT_TRUE(std::isinf(safe_ratio(1.0, 0.0)));
  EXPECT_EQ(safe_ratio(1.0, 4.0), 0.25);
}
