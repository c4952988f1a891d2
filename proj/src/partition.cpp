#include "reflekt/partition.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

#include "reflekt/error.hpp"

namespace reflekt {

namespace {

constexpr std::size_t kDirectSolveLimit = 2000;

std::vector<PointId> sorted_unique(std::span<const PointId> ids) {
  std::vector<PointId> v(ids.begin(), ids.end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

CutoffPotential solve_equilibrium_potential(const JumpKernel& kernel,
                                            std::span<const PointId> inner,
                                            std::span<const PointId> outer) {
  const std::size_t n = kernel.size();
  if (inner.empty()) throw Error(ErrorKind::EmptyInner, "equilibrium potential with empty inner set");
  const auto A = sorted_unique(inner);
  const auto B = sorted_unique(outer);
  std::vector<char> inA(n, 0), inB(n, 0);
  for (PointId x : B) {
    kernel.space().check_point(x);
    inB[x] = 1;
  }
  for (PointId x : A) {
    kernel.space().check_point(x);
    if (!inB[x]) throw Error(ErrorKind::InvalidArgument, "inner set is not inside the outer set");
    inA[x] = 1;
  }

  CutoffPotential out;
  out.values.assign(n, 0.0);
  out.support = B;
  for (PointId x : A) out.values[x] = 1.0;

  std::vector<PointId> free;
  for (PointId x : B)
    if (!inA[x]) free.push_back(x);

  if (!free.empty()) {
    // Components of the free set under positive weights; keep those reaching A.
    const std::size_t k = free.size();
    std::vector<long> comp(k, -1);
    std::vector<char> keep_comp;
    for (std::size_t s = 0; s < k; ++s) {
      if (comp[s] >= 0) continue;
      const long c = long(keep_comp.size());
      keep_comp.push_back(0);
      std::deque<std::size_t> queue{s};
      comp[s] = c;
      while (!queue.empty()) {
        const std::size_t a = queue.front();
        queue.pop_front();
        const auto row = kernel.weights_from(free[a]);
        if (!keep_comp[c])
          for (PointId y : A)
            if (row[y] > 0.0) {
              keep_comp[c] = 1;
              break;
            }
        for (std::size_t b = 0; b < k; ++b) {
          if (comp[b] < 0 && row[free[b]] > 0.0) {
            comp[b] = c;
            queue.push_back(b);
          }
        }
      }
    }
    std::vector<PointId> kept;
    for (std::size_t s = 0; s < k; ++s)
      if (keep_comp[std::size_t(comp[s])]) kept.push_back(free[s]);

    const std::size_t q = kept.size();
    if (q > 0) {
      Eigen::MatrixXd M(q, q);
      Eigen::VectorXd rhs(q);
      for (std::size_t a = 0; a < q; ++a) {
        const auto row = kernel.weights_from(kept[a]);
        double b = 0.0;
        for (PointId y : A) b += row[y];
        rhs(Eigen::Index(a)) = b;
        for (std::size_t c = 0; c < q; ++c) M(Eigen::Index(a), Eigen::Index(c)) = -row[kept[c]];
        M(Eigen::Index(a), Eigen::Index(a)) = kernel.degree(kept[a]);
      }
      Eigen::VectorXd sol;
      if (q <= kDirectSolveLimit) {
        Eigen::LLT<Eigen::MatrixXd> llt(M);
        if (llt.info() != Eigen::Success) {
          throw Error(ErrorKind::SingularSystem, "harmonic system is not positive definite");
        }
        sol = llt.solve(rhs);
      } else {
        Eigen::ConjugateGradient<Eigen::MatrixXd, Eigen::Lower | Eigen::Upper,
                                 Eigen::DiagonalPreconditioner<double>>
            cg;
        cg.setTolerance(1e-10);
        cg.setMaxIterations(int(10 * q));
        cg.compute(M);
        sol = cg.solve(rhs);
        if (cg.info() != Eigen::Success) {
          throw Error(ErrorKind::SingularSystem, "conjugate gradients did not converge");
        }
      }
      for (std::size_t a = 0; a < q; ++a)
        out.values[kept[a]] = std::clamp(sol(Eigen::Index(a)), 0.0, 1.0);
    }
  }
  out.energy = kernel.energy_sparse(out.values, out.support);
  return out;
}

EtaFamily build_eta(const JumpKernel& kernel, const WhitneyCover& cover) {
  const auto& X = kernel.space();
  const auto& sf = kernel.scale();
  EtaFamily fam;
  fam.eta.reserve(cover.size());
  fam.min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cover.size(); ++i) {
    const auto& b = cover.ball(i);
    fam.eta.push_back(
        solve_equilibrium_potential(kernel, cover.members(i, 2.5), cover.members(i, 3.0)));
    const double ratio = fam.eta.back().energy * sf(b.radius) / X.volume(b.center, b.radius);
    fam.ratio.push_back(ratio);
    if (ratio > fam.max_ratio) {
      fam.max_ratio = ratio;
      fam.argmax = i;
    }
    fam.min_ratio = std::min(fam.min_ratio, ratio);
  }
  if (cover.size() == 0) fam.min_ratio = 0.0;
  return fam;
}

PartitionOfUnity build_psi(const JumpKernel& kernel, const EtaFamily& eta,
                           const WhitneyCover& cover) {
  const Domain& D = cover.domain();
  const auto& X = D.space();
  const std::size_t n = X.size();
  const std::size_t m = cover.size();
  PartitionOfUnity pu;
  pu.psi.assign(m, Function(n, 0.0));

  for (PointId x : D.exterior()) {
    double s = 0.0;
    for (std::size_t j : cover.containing(x, 3.0)) s += eta.eta[j].values[x];
    if (!(s > 0.0)) {
      throw Error(ErrorKind::ZeroDenominator,
                  "sum of cutoffs vanishes at exterior point " + std::to_string(x));
    }
    for (std::size_t j : cover.containing(x, 3.0)) pu.psi[j][x] = eta.eta[j].values[x] / s;
  }

  constexpr double kSumTol = 1e-12;
  for (PointId x : D.exterior()) {
    double total = 0.0, lam = 0.0;
    for (std::size_t j : cover.containing(x, 3.0)) {
      total += pu.psi[j][x];
      if (cover.in_lambda(j)) lam += pu.psi[j][x];
    }
    pu.max_sum_error = std::max(pu.max_sum_error, std::abs(total - 1.0));
    if (D.distance_to_domain(x) < D.diam()) {
      pu.max_lambda_sum_error = std::max(pu.max_lambda_sum_error, std::abs(lam - 1.0));
    } else {
      pu.min_far_lambda_sum = std::min(pu.min_far_lambda_sum, lam);
    }
  }
  pu.sums_to_one = pu.max_sum_error <= kSumTol;
  pu.lambda_sums_to_one = pu.max_lambda_sum_error <= kSumTol;

  const auto& sf = kernel.scale();
  for (std::size_t i = 0; i < m; ++i) {
    const auto& members = cover.members(i, 3.0);
    std::vector<char> in3(n, 0);
    for (PointId y : members) in3[y] = 1;
    for (std::size_t y = 0; y < n; ++y) {
      const double v = pu.psi[i][y];
      if (v < 0.0 || v > 1.0) pu.range_ok = false;
      if (v != 0.0 && (!in3[y] || D.contains(PointId(y)))) pu.supports_ok = false;
    }
    const double e = kernel.energy_sparse(pu.psi[i], members);
    const auto& b = cover.ball(i);
    pu.energy.push_back(e);
    const double ratio = e * sf(b.radius) / X.volume(b.center, b.radius);
    pu.energy_ratio.push_back(ratio);
    pu.max_energy_ratio = std::max(pu.max_energy_ratio, ratio);
    const auto& nbr = cover.neighbors(i, 3.0);
    double sum = 0.0;
    for (std::size_t j : nbr) sum += eta.eta[j].energy;
    const double bound = 2.0 * eta.eta[i].energy + 2.0 * double(nbr.size()) * sum;
    pu.energy_bound.push_back(bound);
    if (e > bound * (1.0 + 1e-10) + 1e-300) pu.energy_chain_ok = false;
  }
  return pu;
}

// ---------------------------------------------------------------------------

Function MassFunctions::dense(std::size_t slot, std::size_t n) const {
  Function out(n, 0.0);
  const auto& mf = f.at(slot);
  for (std::size_t k = 0; k < mf.support.size(); ++k) out[mf.support[k]] = mf.values[k];
  return out;
}

MassFunctions build_mass_functions(const WhitneyCover& cover) {
  const Domain& D = cover.domain();
  const auto& X = D.space();
  const auto& lambda = cover.lambda_set();
  MassFunctions mf;
  mf.slot_of_ball.assign(cover.size(), MassFunctions::npos);
  mf.f.resize(lambda.size());

  bool first = true;
  for (std::size_t s = 0; s < lambda.size(); ++s) {
    const std::size_t i = lambda[s];
    const auto& b = cover.ball(i);
    auto& fi = mf.f[s];
    fi.ball = i;
    fi.anchor = D.nearest_interior(b.center);
    fi.level = int(std::floor(std::log2(b.radius)));
    fi.support = D.ball(fi.anchor, b.radius);
    fi.ball_mass = 0.0;
    for (PointId y : fi.support) fi.ball_mass += X.mass(y);
    mf.slot_of_ball[i] = s;

    const double mb = X.volume(b.center, b.radius);
    const double c1 = X.volume(b.center, 23.0 * b.radius) / mb;
    const double q = fi.ball_mass / mb;
    if (first) {
      mf.C1 = c1;
      mf.C2 = mf.C3 = q;
      first = false;
    } else {
      mf.C1 = std::max(mf.C1, c1);
      mf.C2 = std::min(mf.C2, q);
      mf.C3 = std::max(mf.C3, q);
    }
  }
  mf.kappa = mf.C2 / (2.0 * mf.C1 * mf.C3);

  mf.order.resize(lambda.size());
  std::iota(mf.order.begin(), mf.order.end(), std::size_t(0));
  std::stable_sort(mf.order.begin(), mf.order.end(), [&](std::size_t a, std::size_t b) {
    const auto& fa = mf.f[a];
    const auto& fb = mf.f[b];
    if (fa.level != fb.level) return fa.level < fb.level;
    return cover.ball(fa.ball).center < cover.ball(fb.ball).center;
  });

  std::vector<double> used(X.size(), 0.0);
  for (std::size_t slot : mf.order) {
    auto& fi = mf.f[slot];
    fi.target = mf.kappa * fi.ball_mass;
    const std::size_t k = fi.support.size();
    std::vector<double> cap(k);
    fi.headroom = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      cap[a] = std::max(0.0, 1.0 - used[fi.support[a]]);
      fi.headroom += cap[a] * X.mass(fi.support[a]);
    }
    if (fi.headroom < 0.5 * fi.ball_mass * (1.0 - 1e-12)) {
      std::ostringstream os;
      os << "ball " << fi.ball << " (center " << cover.ball(fi.ball).center << ", anchor "
         << fi.anchor << ", r " << cover.ball(fi.ball).radius << "): headroom " << fi.headroom
         << " below half of m(B_D) = " << fi.ball_mass << "; C1 " << mf.C1 << ", C2 " << mf.C2
         << ", C3 " << mf.C3;
      throw Error(ErrorKind::FeasibilityFailure, os.str());
    }
    // Water level t with sum_a min(cap_a, t) m_a = target.
    std::vector<std::size_t> by_cap(k);
    std::iota(by_cap.begin(), by_cap.end(), std::size_t(0));
    std::stable_sort(by_cap.begin(), by_cap.end(),
                     [&cap](std::size_t a, std::size_t b) { return cap[a] < cap[b]; });
    double below = 0.0;
    double rest = 0.0;
    for (std::size_t a = 0; a < k; ++a) rest += X.mass(fi.support[by_cap[a]]);
    double water = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      const std::size_t a = by_cap[p];
      const double t = (fi.target - below) / rest;
      if (t <= cap[a] || p + 1 == k) {
        water = std::min(t, cap[a]);
        break;
      }
      const double ma = X.mass(fi.support[a]);
      below += cap[a] * ma;
      rest -= ma;
    }
    fi.values.resize(k);
    fi.integral = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      fi.values[a] = std::min(cap[a], water);
      fi.integral += fi.values[a] * X.mass(fi.support[a]);
      used[fi.support[a]] += fi.values[a];
    }
  }
  return mf;
}

MassCertificate certify_mass_functions(const MassFunctions& mf, const WhitneyCover& cover) {
  const Domain& D = cover.domain();
  const auto& X = D.space();
  MassCertificate cert;
  cert.C_stated = 2.0 * mf.C1 * mf.C3 / mf.C2;
  cert.C_corrected = 2.0 * mf.C1 * mf.C3 / (mf.C2 * mf.C2);
  cert.min_mass_ratio = std::numeric_limits<double>::infinity();

  std::vector<double> total(X.size(), 0.0);
  for (std::size_t slot : mf.order) {
    const auto& fi = mf.f[slot];
    const auto& b = cover.ball(fi.ball);
    if (X.distance(b.center, fi.anchor) > 6.0 * b.radius * (1.0 + 1e-12)) cert.anchor_distance = false;
    double min_dx = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < fi.support.size(); ++a) {
      const PointId y = fi.support[a];
      const double v = fi.values[a];
      if (v < 0.0 || v > 1.0 || !D.contains(y)) cert.range_and_sum = false;
      total[y] += v;
      if (v > 0.0) {
        if (!(X.distance(fi.anchor, y) < b.radius)) cert.support_in_ball = false;
        min_dx = std::min(min_dx, X.distance(b.center, y));
        for (std::size_t c = a + 1; c < fi.support.size(); ++c)
          if (fi.values[c] > 0.0 && X.distance(y, fi.support[c]) > 2.0 * b.radius)
            cert.support_diameter = false;
      }
    }
    if (std::isfinite(min_dx) && min_dx > 7.0 * b.radius) cert.support_distance = false;
    if (std::abs(fi.integral - fi.target) > 1e-12 * fi.target) cert.mass_exact = false;

    const double mb = X.volume(b.center, b.radius);
    const double q = fi.integral / mb;
    if (q < cert.min_mass_ratio) {
      cert.min_mass_ratio = q;
      cert.min_mass_ball = fi.ball;
    }
    cert.max_mass_ratio = std::max(cert.max_mass_ratio, q);
    const double slack = 1e-12;
    if (q < (1.0 - slack) / cert.C_stated || q > cert.C_stated * (1.0 + slack))
      cert.mass_comparable_stated = false;
    if (q < (1.0 - slack) / cert.C_corrected || q > cert.C_corrected * (1.0 + slack))
      cert.mass_comparable_corrected = false;
  }
  for (double t : total) cert.max_sum = std::max(cert.max_sum, t);
  // Accumulated rounding of the headroom arithmetic.
  if (cert.max_sum > 1.0 + 1e-14) cert.range_and_sum = false;
  if (mf.f.empty()) cert.min_mass_ratio = 0.0;
  return cert;
}

}  // namespace reflekt
