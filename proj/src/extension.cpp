#include "reflekt/extension.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "reflekt/error.hpp"

namespace reflekt {

namespace {

constexpr double kRoundoff = 1e-12;
// Energies of locally constant extensions are rounding noise at this relative level.
constexpr double kVacuousFloor = 1e-20;

double l2_over(const MetricMeasureSpace& X, const Function& f, std::span<const PointId> ids) {
  double s = 0.0;
  for (PointId y : ids) s += f[y] * f[y] * X.mass(y);
  return s;
}

double pair_energy(const JumpKernel& k, const Function& f, std::span<const PointId> A,
                   std::span<const PointId> B) {
  double s = 0.0;
  for (PointId x : A) {
    const auto w = k.weights_from(x);
    for (PointId y : B) {
      const double d = f[x] - f[y];
      s += d * d * w[y];
    }
  }
  return s;
}

}  // namespace

double ball_mean(const MassFunctions& mf, const MetricMeasureSpace& space, const Function& u,
                 std::size_t ball) {
  if (ball >= mf.slot_of_ball.size() || mf.slot_of_ball[ball] == MassFunctions::npos) {
    throw Error(ErrorKind::InvalidArgument, "ball " + std::to_string(ball) + " is not in Lambda");
  }
  if (u.size() != space.size()) throw Error(ErrorKind::DimensionMismatch, "ball_mean input size");
  const auto& fi = mf.f[mf.slot_of_ball[ball]];
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < fi.support.size(); ++k) {
    const double fm = fi.values[k] * space.mass(fi.support[k]);
    num += fm * u[fi.support[k]];
    den += fm;
  }
  if (!(den > 0.0)) throw Error(ErrorKind::ZeroMass, "f_i has zero mass");
  return num / den;
}

ExtensionOperator ExtensionOperator::build(const WhitneyCover& cover, const PartitionOfUnity& pu,
                                           const MassFunctions& mf) {
  const Domain& D = cover.domain();
  const auto& X = D.space();
  ExtensionOperator op;
  op.domain_ = cover.domain_ptr();
  op.n_ = X.size();
  const auto& lambda = cover.lambda_set();
  if (mf.f.size() != lambda.size() || pu.psi.size() != cover.size()) {
    throw Error(ErrorKind::DimensionMismatch, "cover, partition and mass functions disagree");
  }
  op.terms_.resize(lambda.size());
  for (std::size_t s = 0; s < lambda.size(); ++s) {
    Term& t = op.terms_[s];
    t.ball = lambda[s];
    const auto& fi = mf.f[s];
    double den = 0.0;
    for (std::size_t k = 0; k < fi.support.size(); ++k) den += fi.values[k] * X.mass(fi.support[k]);
    if (!(den > 0.0)) throw Error(ErrorKind::ZeroMass, "f_i has zero mass");
    for (std::size_t k = 0; k < fi.support.size(); ++k) {
      if (fi.values[k] == 0.0) continue;
      t.avg_points.push_back(fi.support[k]);
      t.avg_weights.push_back(fi.values[k] * X.mass(fi.support[k]) / den);
    }
    const auto& psi = pu.psi[t.ball];
    for (PointId x : cover.members(t.ball, 3.0)) {
      if (D.contains(x) || psi[x] == 0.0) continue;
      t.psi_points.push_back(x);
      t.psi_values.push_back(psi[x]);
    }
  }
  op.in4_.resize(op.n_);
  for (std::size_t x = 0; x < op.n_; ++x) op.in4_[x] = cover.containing(PointId(x), 4.0);
  return op;
}

ExtensionOperator ExtensionOperator::identity(std::shared_ptr<const Domain> domain) {
  if (!domain->is_full()) throw Error(ErrorKind::InvalidArgument, "identity extension needs D = X");
  ExtensionOperator op;
  op.n_ = domain->space().size();
  op.in4_.resize(op.n_);
  op.domain_ = std::move(domain);
  return op;
}

double ExtensionOperator::mean(const Function& u, std::size_t slot) const {
  const Term& t = terms_.at(slot);
  double s = 0.0;
  for (std::size_t k = 0; k < t.avg_points.size(); ++k) s += t.avg_weights[k] * u[t.avg_points[k]];
  return s;
}

Function ExtensionOperator::extend(const Function& u) const {
  if (u.size() != n_) throw Error(ErrorKind::DimensionMismatch, "extend input size");
  Function out(n_, 0.0);
  for (PointId x : domain_->interior()) out[x] = u[x];
  for (std::size_t s = 0; s < terms_.size(); ++s) {
    const Term& t = terms_[s];
    const double m = mean(u, s);
    for (std::size_t k = 0; k < t.psi_points.size(); ++k) out[t.psi_points[k]] += m * t.psi_values[k];
  }
  return out;
}

Function ExtensionOperator::extend_local(const Function& u_local) const {
  if (u_local.size() != domain_->size()) {
    throw Error(ErrorKind::DimensionMismatch, "extend input size");
  }
  return extend(domain_->embed(u_local));
}

bool ExtensionOperator::near_diagonal(PointId x, PointId y) const {
  const auto& a = in4_[x];
  const auto& b = in4_[y];
  std::size_t p = 0, q = 0;
  while (p < a.size() && q < b.size()) {
    if (a[p] == b[q]) return true;
    (a[p] < b[q] ? p : q)++;
  }
  return false;
}

// ---------------------------------------------------------------------------

L2Report l2_locality_report(const ExtensionOperator& op, const Function& u,
                            std::span<const PointId> centers, std::span<const double> radii,
                            std::size_t fn) {
  const Domain& D = op.domain();
  const auto& X = D.space();
  const Function Eu = op.extend(u);
  L2Report rep;
  for (PointId x0 : centers) {
    for (double r : radii) {
      const double lhs = l2_over(X, Eu, X.ball(x0, r));
      const double rhs = l2_over(X, u, D.ball(x0, 7.0 * r));
      rep.table.add(x0, r, fn, lhs, rhs);
    }
  }
  rep.table.finalize();
  for (std::size_t x = 0; x < X.size(); ++x) rep.global_lhs += Eu[x] * Eu[x] * X.mass(PointId(x));
  rep.global_rhs = l2_over(X, u, D.interior());
  rep.global_ratio = safe_ratio(rep.global_lhs, rep.global_rhs);
  return rep;
}

EnergySplitReport energy_split_report(const ExtensionOperator& op, const JumpKernel& kernel,
                                      std::span<const Function> family,
                                      std::span<const PointId> centers,
                                      std::span<const double> radii) {
  const Domain& D = op.domain();
  const auto& X = D.space();
  const std::size_t n = X.size();
  if (kernel.size() != n) throw Error(ErrorKind::DimensionMismatch, "kernel and operator sizes");
  const std::size_t F = family.size();

  enum : std::uint8_t { kInner, kNear, kOff, kCross, kCrossT };
  std::vector<std::uint8_t> cls(n * n);
  for (std::size_t x = 0; x < n; ++x) {
    const bool dx = D.contains(PointId(x));
    for (std::size_t y = 0; y < n; ++y) {
      const bool dy = D.contains(PointId(y));
      std::uint8_t c = kInner;
      if (!dx && !dy) c = op.near_diagonal(PointId(x), PointId(y)) ? kNear : kOff;
      else if (!dx) c = kCross;
      else if (!dy) c = kCrossT;
      cls[x * n + y] = c;
    }
  }

  std::vector<Function> ext(F);
  std::vector<double> umax(F, 0.0);
  for (std::size_t f = 0; f < F; ++f) {
    ext[f] = op.extend(family[f]);
    for (PointId y : D.interior()) umax[f] = std::max(umax[f], std::abs(family[f][y]));
  }

  EnergySplitReport rep;
  std::vector<double> acc(5 * F), total(F), full(F);
  for (PointId x0 : centers) {
    for (double r : radii) {
      const auto B = X.ball(x0, r);
      std::fill(acc.begin(), acc.end(), 0.0);
      std::fill(total.begin(), total.end(), 0.0);
      std::fill(full.begin(), full.end(), 0.0);
      double wsum = 0.0;
      for (PointId x : B) {
        const auto w = kernel.weights_from(x);
        const std::uint8_t* row = cls.data() + std::size_t(x) * n;
        for (PointId y : B) {
          if (x == y) continue;
          const double wxy = w[y];
          wsum += wxy;
          const std::uint8_t c = row[y];
          for (std::size_t f = 0; f < F; ++f) {
            const double d = ext[f][x] - ext[f][y];
            const double e = d * d * wxy;
            acc[c * F + f] += e;
            full[f] += e;
            if (c != kInner) total[f] += e;
          }
        }
      }
      const auto A1 = D.ball(x0, r);
      const auto A7 = D.ball(x0, 7.0 * r);
      const auto A14 = D.ball(x0, 14.0 * r);
      for (std::size_t f = 0; f < F; ++f) {
        SplitRow row;
        row.x0 = x0;
        row.r = r;
        row.fn = f;
        row.near = acc[kNear * F + f];
        row.off = acc[kOff * F + f];
        row.cross = acc[kCross * F + f];
        row.total = total[f];
        row.full = full[f];
        row.rhs_near = pair_energy(kernel, family[f], A7, A14);
        row.rhs_off = pair_energy(kernel, family[f], A7, A7);
        row.rhs_cross = pair_energy(kernel, family[f], A7, A1);
        const double split = row.near + row.off + 2.0 * row.cross;
        const double scale = std::max(row.total, std::numeric_limits<double>::min());
        row.additivity_error = std::abs(split - row.total) / scale;
        rep.max_additivity_error = std::max(rep.max_additivity_error, row.additivity_error);
        if (row.total > 0.0 && row.additivity_error > kRoundoff) rep.additive = false;
        const double floor = kVacuousFloor * umax[f] * umax[f] * wsum;
        rep.near.add(x0, r, f, row.near, row.rhs_near, floor);
        rep.off.add(x0, r, f, row.off, row.rhs_off, floor);
        rep.cross.add(x0, r, f, row.cross, row.rhs_cross, floor);
        rep.combined.add(x0, r, f, row.full, row.rhs_near, floor);
        rep.rows.push_back(row);
      }
    }
  }
  rep.near.finalize();
  rep.off.finalize();
  rep.cross.finalize();
  rep.combined.finalize();
  return rep;
}

EnergySplitReport energy_split_report(const ExtensionOperator& op, const JumpKernel& kernel,
                                      const Function& u, std::span<const PointId> centers,
                                      std::span<const double> radii) {
  return energy_split_report(op, kernel, std::span<const Function>(&u, 1), centers, radii);
}

ExtensionEnergyRow extension_energy_bound(const ExtensionOperator& op, const JumpKernel& kernel,
                                          const Function& u) {
  const Domain& D = op.domain();
  const auto& X = D.space();
  const Function Eu = op.extend(u);
  ExtensionEnergyRow row;
  row.ambient = kernel.energy(Eu);
  for (std::size_t x = 0; x < X.size(); ++x) row.ambient += Eu[x] * Eu[x] * X.mass(PointId(x));
  const auto& ids = D.interior();
  double e = 0.0;
  for (std::size_t a = 0; a < ids.size(); ++a) {
    const auto w = kernel.weights_from(ids[a]);
    for (std::size_t b = a + 1; b < ids.size(); ++b) {
      const double d = u[ids[a]] - u[ids[b]];
      e += d * d * w[ids[b]];
    }
  }
  row.reflected = e + l2_over(X, u, ids);
  row.vacuous = row.reflected == 0.0 && row.ambient == 0.0;
  row.ratio = safe_ratio(row.ambient, row.reflected);
  return row;
}

// ---------------------------------------------------------------------------

ContainmentReport check_index_containments(const WhitneyCover& cover, const MassFunctions& mf) {
  const Domain& D = cover.domain();
  const auto& X = D.space();
  const auto& lambda = cover.lambda_set();
  ContainmentReport rep;
  for (PointId x0 : D.interior()) {
    const auto dist = X.distances_from(x0);
    for (std::size_t s = 0; s < lambda.size(); ++s) {
      const std::size_t i = lambda[s];
      double far = 0.0;
      for (PointId z : mf.f[s].support) far = std::max(far, dist[z]);
      double near3 = std::numeric_limits<double>::infinity(), near4 = near3;
      for (PointId y : cover.members(i, 3.0)) near3 = std::min(near3, dist[y]);
      for (PointId y : cover.members(i, 4.0)) near4 = std::min(near4, dist[y]);
      ++rep.pairs;
      const double q7 = far / (7.0 * near3);
      const double q14 = far / (14.0 * near4);
      rep.worst_seven = std::max(rep.worst_seven, q7);
      rep.worst_fourteen = std::max(rep.worst_fourteen, q14);
      const bool bad7 = q7 > 1.0 + kRoundoff;
      const bool bad14 = q14 > 1.0 + kRoundoff;
      if (bad7) rep.seven = false;
      if (bad14) rep.fourteen = false;
      if ((bad7 || bad14) && rep.violations.size() < 32) {
        rep.violations.push_back({x0, i, bad7 ? near3 : near4, far});
      }
    }
  }
  return rep;
}

PointwiseReport check_pointwise_inequalities(const WhitneyCover& cover, const MassFunctions& mf) {
  const Domain& D = cover.domain();
  const auto& X = D.space();
  const std::size_t n = X.size();
  const double tol = 1.0 - kRoundoff;
  PointwiseReport rep;

  // Largest r_j over the 3-dilates holding y.
  std::vector<double> rmax3(n, 0.0);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t j : cover.containing(PointId(y), 3.0))
      rmax3[y] = std::max(rmax3[y], cover.ball(j).radius);

  for (std::size_t i = 0; i < cover.size(); ++i) {
    const auto& b = cover.ball(i);
    const auto from_center = X.distances_from(b.center);
    for (PointId x : cover.members(i, 3.0)) {
      const auto dx = X.distances_from(x);
      for (PointId y : D.exterior()) {
        if (rmax3[y] == 0.0 || from_center[y] < 4.0 * b.radius) continue;
        // Every j with y in 3B_j is bounded by the largest such r_j.
        const double q = 9.0 * dx[y] / std::max(b.radius, rmax3[y]);
        rep.min_ninth = std::min(rep.min_ninth, q);
        ++rep.checks;
      }
      for (PointId y : D.interior()) {
        const double q = dx[y] / (0.4 * from_center[y]);
        rep.min_two_fifths = std::min(rep.min_two_fifths, q);
        ++rep.checks;
      }
    }
  }
  const auto& lambda = cover.lambda_set();
  for (std::size_t s = 0; s < lambda.size(); ++s) {
    const auto from_center = X.distances_from(cover.ball(lambda[s]).center);
    for (PointId z : mf.f[s].support) {
      const auto dz = X.distances_from(z);
      for (PointId y : D.interior()) {
        if (dz[y] == 0.0) continue;
        const double q = from_center[y] / (dz[y] * 5.0 / 14.0);
        rep.min_five_fourteenths = std::min(rep.min_five_fourteenths, q);
        ++rep.checks;
      }
    }
  }
  rep.ninth = rep.min_ninth >= tol;
  rep.two_fifths = rep.min_two_fifths >= tol;
  rep.five_fourteenths = rep.min_five_fourteenths >= tol;
  return rep;
}

}  // namespace reflekt
