#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "reflekt/kernel.hpp"
#include "reflekt/probes.hpp"
#include "reflekt/space.hpp"

namespace reflekt::testing {

/// Path {0, ..., n-1} with spacing h and masses h.
inline SpacePtr path_space(std::size_t n, double h = 1.0) {
  std::vector<Point2> coords(n);
  for (std::size_t i = 0; i < n; ++i) coords[i] = {double(i) * h, 0.0};
  return std::make_shared<const MetricMeasureSpace>(MetricMeasureSpace::build(
      n, [h](PointId a, PointId b) { return std::abs(double(a) - double(b)) * h; },
      std::vector<double>(n, h), coords));
}

/// n x n lattice with spacing 1, Euclidean metric and unit masses.
inline SpacePtr grid_space(std::size_t n) {
  std::vector<Point2> c;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) c.push_back({double(i), double(j)});
  return std::make_shared<const MetricMeasureSpace>(MetricMeasureSpace::build(
      c.size(), [c](PointId a, PointId b) { return std::hypot(c[a].x - c[b].x, c[a].y - c[b].y); },
      std::vector<double>(c.size(), 1.0), c));
}

inline SpacePtr two_point_space(double d = 1.0, double m0 = 1.0, double m1 = 1.0) {
  return std::make_shared<const MetricMeasureSpace>(
      MetricMeasureSpace::from_table({0.0, d, d, 0.0}, {m0, m1}));
}

inline std::vector<PointId> range_ids(std::size_t lo, std::size_t hi) {
  std::vector<PointId> v;
  for (std::size_t i = lo; i < hi; ++i) v.push_back(PointId(i));
  return v;
}

inline Function random_function(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  Function f(n);
  for (auto& v : f) v = lo + (hi - lo) * rng.uniform();
  return f;
}

inline double rel_err(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

// Minimizes f^T L f over f = 1 on A, 0 off B by solving the normal equations of the full
// quadratic form; returns the minimal energy.
inline double dense_capacity(const JumpKernel& k, const std::vector<PointId>& A, const std::vector<PointId>& B) {
  const std::size_t n = k.size();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) {
      if (x == y) continue;
      L(x, y) = -k.weight(PointId(x), PointId(y));
      L(x, x) += k.weight(PointId(x), PointId(y));
    }
  std::vector<PointId> F;
  for (PointId b : B)
    if (std::find(A.begin(), A.end(), b) == A.end()) F.push_back(b);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  for (PointId a : A) f[a] = 1.0;
  if (!F.empty()) {
    Eigen::MatrixXd LFF(F.size(), F.size());
    Eigen::VectorXd rhs(F.size());
    for (std::size_t i = 0; i < F.size(); ++i) {
      rhs[i] = 0.0;
      for (PointId a : A) rhs[i] -= L(F[i], a);
      for (std::size_t j = 0; j < F.size(); ++j) LFF(i, j) = L(F[i], F[j]);
    }
    const Eigen::VectorXd g = LFF.fullPivLu().solve(rhs);
    for (std::size_t i = 0; i < F.size(); ++i) f[F[i]] = g[i];
  }
  return f.dot(L * f);
}

// Half the ordered double sum of (f(x)-f(y))^2 J(x,y) m(x) m(y), straight from the definition.
inline double naive_energy(const JumpKernel& k, const Function& f) {
  const auto& X = k.space();
  double s = 0.0;
  for (PointId x = 0; x < X.size(); ++x)
    for (PointId y = 0; y < X.size(); ++y) {
      if (x == y) continue;
      s += (f[x] - f[y]) * (f[x] - f[y]) * k.jump(x, y) * X.mass(x) * X.mass(y);
    }
  return 0.5 * s;
}

}  // namespace reflekt::testing
