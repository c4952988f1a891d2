#include <gtest/gtest.h>

#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "reflekt/error.hpp"
#include "reflekt/generators.hpp"
#include "reflekt/heat.hpp"
#include "test_support.hpp"

using namespace reflekt;
using namespace reflekt::testing;

namespace {

Instance instance(const std::string& name, std::size_t res, bool full = false) {
  GeneratorParams p;
  p.resolution = res;
  p.full_domain = full;
  return generate_example(name, p);
}

void expect_same_band(const HkRatioReport& a, const HkRatioReport& b) {
  EXPECT_EQ(a.times, b.times);
  EXPECT_EQ(a.inf_ratio, b.inf_ratio);
  EXPECT_EQ(a.sup_ratio, b.sup_ratio);
  EXPECT_EQ(a.pairs, b.pairs);
}

}  // namespace

TEST(Generator, TwoPointSpectrumAndClosedForm) {
  auto X = two_point_space();
  for (double c : {1.0, 0.3}) {
    const auto gen = Generator::build(JumpKernel::build(X, ScaleFunction::power(1.5), c));
    EXPECT_NEAR(gen.eigenvalues()[0], -2 * c, 1e-14);
    EXPECT_NEAR(gen.eigenvalues()[1], 0.0, 1e-14);
    for (double t : {0.01, 0.5, 3.0}) {
      const auto p = gen.heat_kernel(t);
      EXPECT_NEAR(p(0, 0), (1 + std::exp(-2 * c * t)) / 2, 1e-10);
      EXPECT_NEAR(p(0, 1), (1 - std::exp(-2 * c * t)) / 2, 1e-10);
    }
  }
}

TEST(Generator, ConstantsInKernelAndRowSums) {
  const auto inst = instance("comb", 9);
  const auto gen = Generator::build(JumpKernel::build(inst.space, ScaleFunction::power(1.5)));
  const auto& X = *inst.space;
  for (double v : gen.apply(Function(X.size(), 2.0))) EXPECT_NEAR(v, 0.0, 1e-12);
  for (PointId x = 0; x < X.size(); ++x) {
    double s = 0.0, scale = 0.0;
    for (PointId y = 0; y < X.size(); ++y) {
      s += gen.matrix()(x, y);
      scale += std::abs(gen.matrix()(x, y));
    }
    EXPECT_LE(std::abs(s), 1e-12 * scale);
  }
  EXPECT_LE(gen.symmetry_error(), 1e-12);
  EXPECT_TRUE(gen.connected());
  for (Eigen::Index k = 0; k < gen.eigenvalues().size(); ++k) EXPECT_LE(gen.eigenvalues()[k], 1e-10);
  // m-orthonormality of the eigenbasis.
  const auto& P = gen.eigenfunctions();
  Eigen::VectorXd m(X.size());
  for (PointId x = 0; x < X.size(); ++x) m[x] = X.mass(x);
  const Eigen::MatrixXd G = P.transpose() * m.asDiagonal() * P;
  EXPECT_LE((G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Generator, SpectralPropagationMatchesDenseExponential) {
  for (auto [name, res] : std::vector<std::pair<std::string, std::size_t>>{
           {"path_interval", 200}, {"grid_with_slits", 13}, {"comb", 13}}) {
    const auto inst = instance(name, res);
    const auto gen = Generator::build(JumpKernel::build(inst.space, ScaleFunction::power(1.5)));
    const auto f = random_function(inst.space->size(), 7);
    Eigen::VectorXd fv = Eigen::Map<const Eigen::VectorXd>(f.data(), Eigen::Index(f.size()));
    for (double t : {0.01, 0.3, 2.0}) {
      const Eigen::MatrixXd E = (t * gen.matrix()).exp();
      const Eigen::VectorXd ref = E * fv;
      const auto got = gen.propagate(f, t);
      const Eigen::VectorXd gv = Eigen::Map<const Eigen::VectorXd>(got.data(), Eigen::Index(got.size()));
      EXPECT_LE((gv - ref).norm(), 1e-8 * ref.norm()) << name << " t=" << t;
      // The density against m reproduces the same operator.
      const auto p = gen.heat_kernel(t);
      Eigen::VectorXd m(inst.space->size());
      for (PointId x = 0; x < inst.space->size(); ++x) m[x] = inst.space->mass(x);
      EXPECT_LE((p * m.asDiagonal() - E).cwiseAbs().maxCoeff(), 1e-8 * E.cwiseAbs().maxCoeff()) << name;
    }
  }
}

TEST(Generator, EquilibriumAtLargeTime) {
  const auto inst = instance("grid_square", 7);
  const auto gen = Generator::build(JumpKernel::build(inst.space, ScaleFunction::power(1.5)));
  const auto p = gen.heat_kernel(1e4);
  EXPECT_LE((p.array() - 1.0 / inst.space->total_mass()).abs().maxCoeff(), 1e-10);
}

TEST(Generator, NonPositiveTimeAndSizeCap) {
  const auto gen = Generator::build(JumpKernel::build(two_point_space(), ScaleFunction::power(1.5)));
  EXPECT_THROW(gen.heat_kernel(0.0), Error);
  EXPECT_THROW(gen.propagate(Function{1, 0}, -1.0), Error);
  try {
    gen.heat_kernel(-1.0);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonPositiveTime);
  }
}

TEST(Semigroup, ChecksOnInstances) {
  for (auto [name, res] : std::vector<std::pair<std::string, std::size_t>>{
           {"path_interval", 51}, {"grid_with_slits", 13}, {"comb", 13}}) {
    const auto inst = instance(name, res);
    const auto gen = Generator::build(JumpKernel::build(inst.space, ScaleFunction::power(1.5)));
    const auto s = semigroup_checks(gen);
    EXPECT_TRUE(s.ok()) << name;
    EXPECT_LE(s.symmetry, 1e-12);
    EXPECT_LE(s.conservation, 1e-10);
    EXPECT_LE(s.chapman_kolmogorov, 1e-8);
    EXPECT_GE(s.min_p, -1e-12);
    // Independent Chapman-Kolmogorov evaluation.
    const auto& X = *inst.space;
    Eigen::VectorXd m(X.size());
    for (PointId x = 0; x < X.size(); ++x) m[x] = X.mass(x);
    const Eigen::MatrixXd lhs = gen.heat_kernel(0.1) * m.asDiagonal() * gen.heat_kernel(0.2);
    const Eigen::MatrixXd rhs = gen.heat_kernel(0.3);
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-8 * rhs.cwiseAbs().maxCoeff());
  }
}

TEST(Envelope, OnDiagonalAndMonotoneInDistance) {
  const auto inst = instance("grid_with_slits", 13);
  const auto& X = *inst.space;
  const auto sf = ScaleFunction::power(1.5);
  const HkEnvelope q(inst.space, sf);
  for (double t : {0.5, 2.0, 8.0}) {
    for (PointId x : {PointId(0), PointId(84), PointId(168)}) {
      EXPECT_DOUBLE_EQ(q(t, x, x), 1.0 / X.volume(x, sf.inverse(t)));
      std::vector<std::pair<double, double>> byd;
      for (PointId y = 0; y < X.size(); ++y) {
        EXPECT_GT(q(t, x, y), 0.0);
        if (y != x) byd.push_back({X.distance(x, y), q(t, x, y)});
      }
      std::sort(byd.begin(), byd.end());
      for (std::size_t a = 1; a < byd.size(); ++a) EXPECT_LE(byd[a].second, byd[a - 1].second * (1 + 1e-12));
    }
  }
}

TEST(HkBand, PathLatticeIsPositiveAndFinite) {
  auto X = path_space(101, 0.01);
  const auto gen = Generator::build(JumpKernel::build(X, ScaleFunction::power(1.0)));
  const auto rep = hk_ratio_report(gen);
  EXPECT_TRUE(rep.positive_finite());
  EXPECT_EQ(rep.times.size(), 6u);
  EXPECT_GE(rep.times.front(), std::pow(2 * X->mesh(), 1.0) * (1 - 1e-12));
  EXPECT_LE(rep.times.back(), std::pow(X->diam() / 4, 1.0) * (1 + 1e-12));
  // The witnesses re-realize the band.
  const HkEnvelope q(X, ScaleFunction::power(1.0));
  for (const auto& w : {rep.inf_witness, rep.sup_witness}) {
    const double p = gen.heat_kernel(w.t)(w.x, w.y);
    EXPECT_NEAR(p, w.p, 1e-12 * std::abs(w.p));
    EXPECT_DOUBLE_EQ(q(w.t, w.x, w.y), w.q);
  }
  EXPECT_NEAR(rep.inf_witness.ratio, rep.inf_ratio, 0.0);
  EXPECT_NEAR(rep.sup_witness.ratio, rep.sup_ratio, 0.0);
  EXPECT_NEAR(rep.log_width, std::log(rep.sup_ratio / rep.inf_ratio), 1e-12);
}

TEST(HkBand, DisconnectedInstanceLowerBandAtRoundoff) {
  auto X = path_space(6);
  std::vector<double> w(36, 0.0);
  for (std::size_t a = 0; a < 6; ++a)
    for (std::size_t b = 0; b < 6; ++b)
      if (a != b && (a < 3) == (b < 3)) w[a * 6 + b] = 1.0;
  const auto gen = Generator::build(JumpKernel::from_weights(X, w, ScaleFunction::power(1.0)));
  EXPECT_FALSE(gen.connected());
  HkOptions opt;
  opt.window_low = 1.0;
  opt.window_high = 1.0;
  const auto rep = hk_ratio_report(gen, opt);
  // Raw spectral values across components vanish only to rounding.
  EXPECT_LE(rep.inf_ratio, 1e-12);
  EXPECT_NE(rep.inf_witness.x < 3, rep.inf_witness.y < 3);
  EXPECT_GT(rep.log_width, 20.0);
}

TEST(MainTheorem, FullDomainReportsCoincide) {
  const auto inst = instance("grid_with_slits", 11, true);
  const auto k = JumpKernel::build(inst.space, ScaleFunction::power(1.5));
  const auto a = main_theorem_experiment(k, *inst.domain);
  expect_same_band(a.ambient, a.reflected);
  EXPECT_EQ(a.kappa, 1.0);
  EXPECT_EQ(a.c_domain, 1.0);
  const auto gen = Generator::build(k);
  const auto b = main_theorem_experiment(gen, k, *inst.domain);
  expect_same_band(b.ambient, b.reflected);
  expect_same_band(a.ambient, b.ambient);
}

TEST(MainTheorem, SlitsAndCombBandsAreFinite) {
  for (const char* name : {"grid_with_slits", "comb"}) {
    const auto inst = instance(name, 13);
    const auto k = JumpKernel::build(inst.space, ScaleFunction::power(1.5));
    const auto rep = main_theorem_experiment(k, *inst.domain);
    EXPECT_TRUE(rep.ambient.positive_finite()) << name;
    EXPECT_TRUE(rep.reflected.positive_finite()) << name;
    EXPECT_TRUE(std::isfinite(rep.kappa)) << name;
    EXPECT_GT(rep.kappa, 0.0) << name;
    EXPECT_EQ(rep.ambient.t_min, rep.reflected.t_min);
    EXPECT_EQ(rep.ambient.t_max, rep.reflected.t_max);
  }
}

TEST(MainTheorem, RefusesNonAhlforsDomain) {
  const auto inst = instance("comb", 11);
  const auto k = JumpKernel::build(inst.space, ScaleFunction::power(1.5));
  try {
    main_theorem_experiment(k, *inst.domain, {}, 0.999);
    ADD_FAILURE() << "expected NotAhlforsRegular";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotAhlforsRegular);
  }
}
