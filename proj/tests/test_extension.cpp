#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "reflekt/error.hpp"
#include "reflekt/extension.hpp"
#include "reflekt/generators.hpp"
#include "test_support.hpp"

using namespace reflekt;
using namespace reflekt::testing;

namespace {

struct Pipeline {
  Instance inst;
  JumpKernel k;
  WhitneyCover cover;
  PartitionOfUnity pu;
  MassFunctions mf;
  ExtensionOperator op;
};

Pipeline build(const std::string& name, std::size_t res) {
  GeneratorParams p;
  p.resolution = res;
  auto inst = generate_example(name, p);
  auto k = JumpKernel::build(inst.space, ScaleFunction::power(1.5));
  auto cover = WhitneyCover::build(inst.domain);
  auto pu = build_psi(k, build_eta(k, cover), cover);
  auto mf = build_mass_functions(cover);
  auto op = ExtensionOperator::build(cover, pu, mf);
  return {std::move(inst), std::move(k), std::move(cover), std::move(pu), std::move(mf), std::move(op)};
}

const std::vector<std::pair<std::string, std::size_t>> kInstances = {
    {"path_interval", 101}, {"grid_square", 17}, {"grid_with_slits", 17}, {"comb", 17}};

}  // namespace

TEST(BallMean, ConstantAndBruteForce) {
  const auto P = build("path_interval", 101);
  const auto& X = *P.inst.space;
  Function c(X.size(), 2.5), u(X.size());
  for (PointId x = 0; x < X.size(); ++x) u[x] = X.coordinates()[x].x;
  for (std::size_t i : P.cover.lambda_set()) {
    EXPECT_NEAR(ball_mean(P.mf, X, c, i), 2.5, 1e-14);
    const auto& fi = *P.mf.for_ball(i);
    double num = 0.0, den = 0.0, lo = 1e300, hi = -1e300;
    for (std::size_t a = 0; a < fi.support.size(); ++a) {
      const PointId z = fi.support[a];
      num += fi.values[a] * u[z] * X.mass(z);
      den += fi.values[a] * X.mass(z);
      if (fi.values[a] > 0) {
        lo = std::min(lo, u[z]);
        hi = std::max(hi, u[z]);
      }
    }
    const double m = ball_mean(P.mf, X, u, i);
    EXPECT_LE(rel_err(m, num / den), 1e-12);
    EXPECT_GE(m, lo - 1e-12);
    EXPECT_LE(m, hi + 1e-12);
  }
}

TEST(BallMean, HalfMassIndicatorGivesOneHalf) {
  const auto P = build("path_interval", 101);
  const auto& X = *P.inst.space;
  for (std::size_t i : P.cover.lambda_set()) {
    const auto& fi = *P.mf.for_ball(i);
    // Split the support by f_i m mass when some prefix carries exactly half of it.
    double total = 0.0;
    for (std::size_t a = 0; a < fi.support.size(); ++a) total += fi.values[a] * X.mass(fi.support[a]);
    double run = 0.0;
    Function u(X.size(), 0.0);
    for (std::size_t a = 0; a < fi.support.size(); ++a) {
      if (std::abs(run - total / 2) < 1e-14 * total) break;
      u[fi.support[a]] = 1.0;
      run += fi.values[a] * X.mass(fi.support[a]);
    }
    if (std::abs(run - total / 2) < 1e-14 * total) {
      EXPECT_NEAR(ball_mean(P.mf, X, u, i), 0.5, 1e-13);
    }
  }
}

TEST(Extension, MatchesDefinitionAndIsLinear) {
  for (const auto& [name, res] : kInstances) {
    const auto P = build(name, res);
    const auto& X = *P.inst.space;
    const auto& D = *P.inst.domain;
    const auto u = random_function(X.size(), 3), v = random_function(X.size(), 4);
    const auto Eu = P.op.extend(u), Ev = P.op.extend(v);
    Function w(X.size());
    for (std::size_t x = 0; x < w.size(); ++x) w[x] = 2.0 * u[x] - 0.7 * v[x];
    const auto Ew = P.op.extend(w);
    for (PointId x = 0; x < X.size(); ++x) {
      EXPECT_NEAR(Ew[x], 2.0 * Eu[x] - 0.7 * Ev[x], 1e-12 * (1 + std::abs(Ew[x]))) << name;
      if (D.contains(x)) {
        EXPECT_EQ(Eu[x], u[x]);
        continue;
      }
      double s = 0.0;
      for (std::size_t i : P.cover.lambda_set()) s += ball_mean(P.mf, X, u, i) * P.pu.psi[i][x];
      EXPECT_NEAR(Eu[x], s, 1e-12) << name;
    }
    EXPECT_EQ(P.op.extend_local(D.restrict(u)), Eu);
    EXPECT_THROW(P.op.extend(Function(3, 0.0)), Error);
  }
}

TEST(Extension, ConstantsAndRange) {
  for (const auto& [name, res] : kInstances) {
    const auto P = build(name, res);
    const auto& X = *P.inst.space;
    const auto& D = *P.inst.domain;
    const auto one = P.op.extend(Function(X.size(), 1.0));
    const auto zero = P.op.extend(Function(X.size(), 0.0));
    const auto u = random_function(X.size(), 11, -3.0, 5.0);
    const auto Eu = P.op.extend(u);
    double lo = 1e300, hi = -1e300;
    for (PointId y : D.interior()) {
      lo = std::min(lo, u[y]);
      hi = std::max(hi, u[y]);
    }
    for (PointId x = 0; x < X.size(); ++x) {
      EXPECT_EQ(zero[x], 0.0);
      if (D.distance_to_domain(x) < D.diam()) {
        EXPECT_NEAR(one[x], 1.0, 1e-12) << name;
        EXPECT_GE(Eu[x], lo - 1e-12);
        EXPECT_LE(Eu[x], hi + 1e-12);
      }
    }
  }
}

TEST(Extension, SingleTermPointsTakeTheBallMean) {
  const auto P = build("grid_with_slits", 17);
  const auto& X = *P.inst.space;
  const auto u = random_function(X.size(), 5);
  const auto Eu = P.op.extend(u);
  std::size_t seen = 0;
  for (PointId x : P.inst.domain->exterior()) {
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < P.cover.size(); ++i)
      if (P.pu.psi[i][x] > 0) active.push_back(i);
    if (active.size() != 1 || !P.cover.in_lambda(active[0])) continue;
    ++seen;
    EXPECT_NEAR(Eu[x], ball_mean(P.mf, X, u, active[0]), 1e-12);
  }
  EXPECT_GT(seen, 0u);
}

TEST(Extension, IdentityOnFullDomain) {
  auto X = grid_space(5);
  auto D = std::make_shared<const Domain>(X, range_ids(0, X->size()));
  const auto op = ExtensionOperator::identity(D);
  const auto u = random_function(X->size(), 1);
  EXPECT_EQ(op.extend(u), u);
  EXPECT_EQ(op.terms(), 0u);
  auto D2 = std::make_shared<const Domain>(X, range_ids(0, 10));
  EXPECT_THROW(ExtensionOperator::identity(D2), Error);
}

TEST(L2Locality, ZeroAndConstantInputs) {
  const auto P = build("path_interval", 101);
  const auto& D = *P.inst.domain;
  const auto centers = sample_centers(D, 16, 1);
  const auto radii = probe_radii(D);
  const auto zero = l2_locality_report(P.op, Function(P.inst.space->size(), 0.0), centers, radii);
  for (const auto& row : zero.table.rows) EXPECT_TRUE(row.vacuous);
  const auto one = l2_locality_report(P.op, Function(P.inst.space->size(), 1.0), centers, radii);
  const auto& X = *P.inst.space;
  for (const auto& row : one.table.rows) {
    // Deep inside D the ball lies in D and the rows are ball masses.
    if (X.volume(row.x0, row.r) == D.volume(row.x0, row.r) && D.distance_to_domain(row.x0) == 0 &&
        X.volume(row.x0, 7 * row.r) == D.volume(row.x0, 7 * row.r)) {
      EXPECT_NEAR(row.lhs, X.volume(row.x0, row.r), 1e-12);
      EXPECT_NEAR(row.rhs, X.volume(row.x0, 7 * row.r), 1e-12);
    }
    EXPECT_TRUE(std::isfinite(row.ratio));
  }
  EXPECT_TRUE(one.table.finite);
  EXPECT_GT(one.global_ratio, 0.0);
}

TEST(EnergySplit, AdditivityAgainstDirectSums) {
  const auto P = build("path_interval", 101);
  const auto& X = *P.inst.space;
  const auto& D = *P.inst.domain;
  const auto u = random_function(X.size(), 8);
  const auto Eu = P.op.extend(u);
  const auto centers = sample_centers(D, 6, 2);
  const auto radii = probe_radii(D);
  const auto rep = energy_split_report(P.op, P.k, u, centers, radii);
  EXPECT_TRUE(rep.additive);
  for (const auto& row : rep.rows) {
    const auto B = X.ball(row.x0, row.r);
    double near = 0, off = 0, cross = 0, total = 0, full = 0;
    for (PointId x : B)
      for (PointId y : B) {
        if (x == y) continue;
        const double e = (Eu[x] - Eu[y]) * (Eu[x] - Eu[y]) * P.k.weight(x, y);
        full += e;
        if (D.contains(x) && D.contains(y)) continue;
        total += e;
        if (!D.contains(x) && !D.contains(y)) (P.op.near_diagonal(x, y) ? near : off) += e;
        if (!D.contains(x) && D.contains(y)) cross += e;
      }
    EXPECT_NEAR(row.near, near, 1e-12 * (1 + near));
    EXPECT_NEAR(row.off, off, 1e-12 * (1 + off));
    EXPECT_NEAR(row.cross, cross, 1e-12 * (1 + cross));
    EXPECT_NEAR(row.total, total, 1e-12 * (1 + total));
    EXPECT_NEAR(row.full, full, 1e-12 * (1 + full));
    EXPECT_NEAR(row.near + row.off + 2 * row.cross, row.total, 1e-12 * (1 + total));
    const auto B7 = D.ball(row.x0, 7 * row.r), B14 = D.ball(row.x0, 14 * row.r), B1 = D.ball(row.x0, row.r);
    EXPECT_NEAR(row.rhs_near, P.k.restricted_energy(u, B7, B14), 1e-12 * (1 + row.rhs_near));
    EXPECT_NEAR(row.rhs_off, P.k.restricted_energy(u, B7, B7), 1e-12 * (1 + row.rhs_off));
    EXPECT_NEAR(row.rhs_cross, P.k.restricted_energy(u, B7, B1), 1e-12 * (1 + row.rhs_cross));
  }
}

TEST(EnergySplit, NearDiagonalMatchesFourDilates) {
  const auto P = build("grid_with_slits", 13);
  const auto& X = *P.inst.space;
  for (PointId x = 0; x < X.size(); ++x)
    for (PointId y = 0; y < X.size(); ++y) {
      bool both = false;
      for (std::size_t i = 0; i < P.cover.size() && !both; ++i) {
        const auto& b = P.cover.ball(i);
        both = X.distance(b.center, x) < 4 * b.radius && X.distance(b.center, y) < 4 * b.radius;
      }
      EXPECT_EQ(P.op.near_diagonal(x, y), both);
    }
}

TEST(EnergySplit, ConstantAndInteriorSupportedInputs) {
  const auto P = build("path_interval", 201);
  const auto& X = *P.inst.space;
  const auto& D = *P.inst.domain;
  const auto radii = probe_radii(D);
  const std::vector<PointId> centers = {100};
  const auto c = energy_split_report(P.op, P.k, Function(X.size(), 1.0), centers, radii);
  for (const auto& row : c.rows) {
    if (row.r >= D.diam() / 2) continue;
    // Within diam(D) of D the extension of a constant is that constant.
    EXPECT_NEAR(row.near, 0.0, 1e-20);
    EXPECT_NEAR(row.off, 0.0, 1e-20);
    EXPECT_NEAR(row.cross, 0.0, 1e-20);
  }
  // Support in the middle fifth of D: the ball means of exterior balls near x0 vanish.
  Function u(X.size(), 0.0);
  for (PointId x = 90; x <= 110; ++x) u[x] = 1.0;
  const auto Eu = P.op.extend(u);
  for (PointId x : D.exterior()) EXPECT_EQ(Eu[x], 0.0);
  const auto s = energy_split_report(P.op, P.k, u, centers, std::vector<double>{radii.front()});
  for (const auto& row : s.rows) {
    EXPECT_EQ(row.near, 0.0);
    EXPECT_EQ(row.off, 0.0);
    EXPECT_EQ(row.cross, 0.0);
  }
}

TEST(ExtensionEnergy, ZeroAndOne) {
  const auto P = build("comb", 17);
  const auto& X = *P.inst.space;
  const auto z = extension_energy_bound(P.op, P.k, Function(X.size(), 0.0));
  EXPECT_EQ(z.ambient, 0.0);
  EXPECT_EQ(z.reflected, 0.0);
  EXPECT_TRUE(z.vacuous);
  const auto o = extension_energy_bound(P.op, P.k, Function(X.size(), 1.0));
  EXPECT_GT(o.ambient, 0.0);
  EXPECT_GT(o.reflected, 0.0);
  EXPECT_TRUE(std::isfinite(o.ratio));
  // Direct evaluation of both sides.
  const auto Eu = P.op.extend(Function(X.size(), 1.0));
  double l2 = 0.0;
  for (PointId x = 0; x < X.size(); ++x) l2 += Eu[x] * Eu[x] * X.mass(x);
  EXPECT_LE(rel_err(o.ambient, P.k.energy(Eu) + l2), 1e-12);
  EXPECT_LE(rel_err(o.reflected, P.inst.domain->mass()), 1e-12);
}

TEST(Containments, HoldOnInstances) {
  for (const auto& [name, res] : kInstances) {
    const auto P = build(name, res);
    const auto c = check_index_containments(P.cover, P.mf);
    EXPECT_TRUE(c.ok()) << name;
    EXPECT_LE(c.worst_seven, 1.0);
    EXPECT_LE(c.worst_fourteen, 1.0);
    const auto pw = check_pointwise_inequalities(P.cover, P.mf);
    EXPECT_TRUE(pw.ok()) << name;
    EXPECT_GE(pw.min_ninth, 1.0);
    EXPECT_GE(pw.min_two_fifths, 1.0);
    EXPECT_GE(pw.min_five_fourteenths, 1.0);
    EXPECT_GT(pw.checks, 0u);
  }
}

TEST(Containments, BruteForceIndexSets) {
  const auto P = build("grid_with_slits", 13);
  const auto& X = *P.inst.space;
  const auto& D = *P.inst.domain;
  for (PointId x0 : D.interior())
    for (double r : {0.5, 1.0, 1.5, 2.0, 3.0, 5.0}) {
      for (std::size_t i : P.cover.lambda_set()) {
        const auto& fi = *P.mf.for_ball(i);
        auto meets = [&](double lam) {
          for (PointId y : P.cover.dilate(i, lam))
            if (X.distance(x0, y) < r) return true;
          return false;
        };
        auto inside = [&](double k) {
          for (std::size_t a = 0; a < fi.support.size(); ++a)
            if (fi.values[a] > 0 && !(X.distance(x0, fi.support[a]) < k * r)) return false;
          return true;
        };
        if (meets(3.0)) {
          EXPECT_TRUE(inside(7.0)) << "x0=" << x0 << " r=" << r << " i=" << i;
        }
        if (meets(4.0)) {
          EXPECT_TRUE(inside(14.0)) << "x0=" << x0 << " r=" << r << " i=" << i;
        }
      }
    }
}
