#include "reflekt/csj.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>

#include "reflekt/error.hpp"
#include "reflekt/partition.hpp"

namespace reflekt {

namespace {

constexpr double kSlack = 1e-12;
constexpr double kVacuousFloor = 1e-20;

void check_size(const JumpKernel& k, const Function& f) {
  if (f.size() != k.size()) throw Error(ErrorKind::DimensionMismatch, "function size");
}

double mass_sum(const MetricMeasureSpace& X, const Function& f, std::span<const PointId> ids) {
  double s = 0.0;
  for (PointId x : ids) s += f[x] * f[x] * X.mass(x);
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

// sum over A x A of f(x)^2 (phi(x) - phi(y))^2 w
double weighted_cutoff_energy(const JumpKernel& k, const Function& f, const Function& phi,
                              std::span<const PointId> A) {
  double s = 0.0;
  for (PointId x : A) {
    if (f[x] == 0.0) continue;
    const auto w = k.weights_from(x);
    double inner = 0.0;
    for (PointId y : A) {
      const double d = phi[x] - phi[y];
      inner += d * d * w[y];
    }
    s += f[x] * f[x] * inner;
  }
  return s;
}

std::vector<PointId> difference(const std::vector<PointId>& a, const std::vector<PointId>& b) {
  std::vector<PointId> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

Function carre_du_champ(const JumpKernel& kernel, const Function& u) {
  check_size(kernel, u);
  const auto& X = kernel.space();
  const std::size_t n = kernel.size();
  Function g(n, 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    const auto w = kernel.weights_from(PointId(x));
    double s = 0.0;
    for (std::size_t y = 0; y < n; ++y) {
      const double d = u[x] - u[y];
      s += d * d * w[y];
    }
    g[x] = s / X.mass(PointId(x));
  }
  return g;
}

CutoffCandidate csjb_cutoff(const JumpKernel& kernel, PointId x0, double r) {
  const auto& X = kernel.space();
  X.check_point(x0);
  if (!(r > 0.0)) throw Error(ErrorKind::InvalidArgument, "cutoff radius must be positive");
  CutoffCandidate c;
  c.x0 = x0;
  c.inner_radius = r;
  c.outer_radius = 2.0 * r;
  c.r = r;
  c.values = solve_equilibrium_potential(kernel, X.ball(x0, r), X.ball(x0, 2.0 * r)).values;
  return c;
}

// ---------------------------------------------------------------------------

void CsjFit::add(const CsjRow& row) {
  rows.push_back(row);
  table.add(row.x0, row.r, row.fn, row.lhs, row.energy + row.mass);
}

void CsjFit::append(const CsjFit& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
  table.append(other.table);
}

void CsjFit::finalize() {
  table.finalize();
  const double C = table.constant;
  for (std::size_t k = 0; k < 2; ++k) {
    const double C1 = k == 0 ? 0.0 : C;
    double C2 = 0.0;
    for (const auto& row : rows) {
      const double excess = row.lhs - C1 * row.energy;
      if (excess <= 0.0) continue;
      C2 = std::max(C2, row.mass > 0.0 ? excess / row.mass : std::numeric_limits<double>::infinity());
    }
    pareto[k] = {C1, C2};
  }
}

bool CsjFit::holds(double C1, double C2) const {
  return std::all_of(rows.begin(), rows.end(), [&](const CsjRow& row) {
    const double rhs = C1 * row.energy + C2 * row.mass;
    return row.lhs <= rhs * (1.0 + kSlack) || (rhs == 0.0 && row.lhs == 0.0);
  });
}

CsjRow csjb_row(const JumpKernel& kernel, const CutoffCandidate& cutoff, const Function& f,
                double lambda, std::size_t fn) {
  check_size(kernel, f);
  const auto& X = kernel.space();
  const double r = cutoff.inner_radius;
  CsjRow row;
  row.x0 = cutoff.x0;
  row.r = r;
  row.fn = fn;
  row.lhs = weighted_cutoff_energy(kernel, f, cutoff.values, X.ball(cutoff.x0, 3.0 * r));
  const auto big = X.ball(cutoff.x0, lambda * r);
  row.energy = pair_energy(kernel, f, big, big);
  row.mass = mass_sum(X, f, big) / kernel.scale()(r);
  return row;
}

CsjFit csjb_check(const JumpKernel& kernel, PointId x0, double r,
                  std::span<const Function> family, double lambda) {
  const auto cutoff = csjb_cutoff(kernel, x0, r);
  CsjFit fit;
  for (std::size_t f = 0; f < family.size(); ++f) fit.add(csjb_row(kernel, cutoff, family[f], lambda, f));
  fit.finalize();
  return fit;
}

// ---------------------------------------------------------------------------

CutoffCandidate csj_composite_cutoff(const JumpKernel& kernel, PointId x0, double big_r,
                                     double r, double lambda) {
  const auto& X = kernel.space();
  X.check_point(x0);
  if (!(r > 0.0) || r > big_r) throw Error(ErrorKind::InvalidArgument, "composite needs 0 < r <= R");
  auto B = [&](int l) { return X.ball(x0, big_r + l * r / 4.0); };
  const auto B1 = B(1);
  const auto B2 = B(2);
  const auto annulus = difference(B2, B1);

  CutoffCandidate c;
  c.x0 = x0;
  c.inner_radius = big_r;
  c.outer_radius = big_r + r;
  c.provenance = CutoffCandidate::Provenance::Composite;
  c.big_r = big_r;
  c.r = r;
  c.net_radius = r / (4.0 * lambda);
  c.values = solve_equilibrium_potential(kernel, B1, B2).values;
  if (!annulus.empty()) c.net = greedy_net(X, annulus, c.net_radius).centers;
  for (PointId xj : c.net) {
    const auto local = csjb_cutoff(kernel, xj, c.net_radius);
    for (std::size_t y = 0; y < c.values.size(); ++y) c.values[y] = std::max(c.values[y], local.values[y]);
  }
  return c;
}

void validate_cutoff(const MetricMeasureSpace& space, const CutoffCandidate& cutoff) {
  if (cutoff.values.size() != space.size()) {
    throw Error(ErrorKind::DimensionMismatch, "cutoff size");
  }
  const auto dist = space.distances_from(cutoff.x0);
  for (std::size_t y = 0; y < space.size(); ++y) {
    const double v = cutoff.values[y];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorKind::InvalidCutoff, "cutoff value outside [0,1] at " + std::to_string(y));
    }
    if (dist[y] < cutoff.inner_radius && v != 1.0) {
      throw Error(ErrorKind::InvalidCutoff, "cutoff not 1 on the inner ball at " + std::to_string(y));
    }
    if (!(dist[y] < cutoff.outer_radius) && v != 0.0) {
      throw Error(ErrorKind::InvalidCutoff, "cutoff not 0 off the outer ball at " + std::to_string(y));
    }
  }
}

CsjRow csj_check(const JumpKernel& kernel, const CutoffCandidate& cutoff, const Function& f,
                 std::size_t fn) {
  check_size(kernel, f);
  const auto& X = kernel.space();
  validate_cutoff(X, cutoff);
  const double R = cutoff.inner_radius;
  const double r = cutoff.outer_radius - R;
  const PointId x0 = cutoff.x0;
  CsjRow row;
  row.x0 = x0;
  row.big_r = R;
  row.r = r;
  row.fn = fn;
  const auto outer = X.ball(x0, R + 2.0 * r);
  const Function gamma = carre_du_champ(kernel, cutoff.values);
  for (PointId x : outer) row.lhs += f[x] * f[x] * gamma[x] * X.mass(x);
  const auto U = difference(X.ball(x0, R + r), X.ball(x0, R));
  const auto Ustar = difference(outer, X.ball(x0, R - r));
  row.energy = pair_energy(kernel, f, U, Ustar);
  row.mass = mass_sum(X, f, outer) / kernel.scale()(r);
  return row;
}

CompositeCertificate certify_composite(const JumpKernel& kernel, const CutoffCandidate& cutoff,
                                       const Function& f, double lambda, std::size_t fn) {
  if (cutoff.provenance != CutoffCandidate::Provenance::Composite) {
    throw Error(ErrorKind::InvalidArgument, "certificate needs a composite cutoff");
  }
  const auto& X = kernel.space();
  const auto& sf = kernel.scale();
  const double R = cutoff.big_r;
  const double r = cutoff.r;
  const double s = cutoff.net_radius;
  CompositeCertificate cert;
  cert.row = csj_check(kernel, cutoff, f, fn);

  CsjFit local;
  for (PointId xj : cutoff.net) local.add(csjb_row(kernel, csjb_cutoff(kernel, xj, s), f, lambda, fn));
  local.finalize();
  cert.local_ray = local.ray();
  cert.overlap = cutoff.net.empty() ? 0 : max_overlap(X, cutoff.net, r / 4.0);

  const double tail_s = kernel.tail_constant_at(s);
  const double tail_q = kernel.tail_constant_at(r / 4.0);
  const double C3 = double(cert.overlap);
  cert.K1 = cert.local_ray * C3;
  // Points of U pick up the local mass terms; annulus points add the tail at s, the others
  // (including B_1 \ B_0, which the local balls may reach) the tail at r/4.
  const double local_coef = cert.local_ray * C3 * sf(r) / sf(s);
  cert.K2 = std::max(local_coef + tail_s * sf(r) / sf(s), local_coef + tail_q * sf(r) / sf(r / 4.0));
  const double rhs = cert.K1 * cert.row.energy + cert.K2 * cert.row.mass;
  cert.holds = cert.row.lhs <= rhs * (1.0 + kSlack) || (rhs == 0.0 && cert.row.lhs == 0.0);

  // Split the lhs pairs: x in the annulus B_4 \ B_1 with y in it at distance <= s, and the rest.
  const auto B1 = X.ball(cutoff.x0, R + r / 4.0);
  const auto B4 = X.ball(cutoff.x0, R + r);
  const auto annulus = difference(B4, B1);
  std::vector<char> in_ann(X.size(), 0);
  for (PointId x : annulus) in_ann[x] = 1;
  const auto& phi = cutoff.values;
  double near = 0.0, far_ann = 0.0, far_rest = 0.0;
  for (PointId x : X.ball(cutoff.x0, R + 2.0 * r)) {
    if (f[x] == 0.0) continue;
    const auto w = kernel.weights_from(x);
    const auto dist = X.distances_from(x);
    for (std::size_t y = 0; y < X.size(); ++y) {
      const double d = phi[x] - phi[y];
      const double e = f[x] * f[x] * d * d * w[y];
      if (e == 0.0) continue;
      if (!in_ann[x]) far_rest += e;
      else if (in_ann[y] && dist[y] <= s) near += e;
      else far_ann += e;
    }
  }
  cert.near_lhs = near;
  for (const auto& row : local.rows) cert.near_rhs += row.lhs;
  cert.near_ok = near <= cert.near_rhs * (1.0 + kSlack) || (near == 0.0);

  const auto outer = X.ball(cutoff.x0, R + 2.0 * r);
  double m_ann = 0.0, m_rest = 0.0;
  for (PointId x : outer) (in_ann[x] ? m_ann : m_rest) += f[x] * f[x] * X.mass(x);
  cert.far_lhs = far_ann + far_rest;
  cert.far_rhs = tail_s / sf(s) * m_ann + tail_q / sf(r / 4.0) * m_rest;
  cert.far_ok = cert.far_lhs <= cert.far_rhs * (1.0 + kSlack) || cert.far_lhs == 0.0;
  return cert;
}

// ---------------------------------------------------------------------------

std::vector<ReflectedCsjRow> reflected_csj_via_extension(const JumpKernel& kernel,
                                                         const ExtensionOperator& op,
                                                         PointId x0, double r,
                                                         std::span<const Function> family,
                                                         double lambda) {
  const Domain& D = op.domain();
  const auto& X = kernel.space();
  if (!D.contains(x0)) throw Error(ErrorKind::InvalidArgument, "center must lie in D");
  const double pr = kernel.scale()(r);
  const auto cutoff = csjb_cutoff(kernel, x0, r);
  const auto D3 = D.ball(x0, 3.0 * r);
  const auto D7 = D.ball(x0, 7.0 * lambda * r);
  const auto D14 = D.ball(x0, 14.0 * lambda * r);
  std::vector<ReflectedCsjRow> rows;
  for (std::size_t fn = 0; fn < family.size(); ++fn) {
    const Function& f = family[fn];
    check_size(kernel, f);
    const Function g = op.extend(f);
    const CsjRow amb = csjb_row(kernel, cutoff, g, lambda, fn);
    ReflectedCsjRow row;
    row.x0 = x0;
    row.r = r;
    row.fn = fn;
    row.reflected_lhs = weighted_cutoff_energy(kernel, f, cutoff.values, D3);
    row.ambient_lhs = amb.lhs;
    row.ambient_energy = amb.energy;
    row.ambient_mass = amb.mass;
    row.domain_energy = pair_energy(kernel, f, D14, D14);
    row.domain_mass7 = mass_sum(X, f, D7) / pr;
    row.domain_mass14 = mass_sum(X, f, D14) / pr;
    row.monotone = row.reflected_lhs <= row.ambient_lhs * (1.0 + kSlack);
    rows.push_back(row);
  }
  return rows;
}

ReflectedCsjReport summarize_reflected(std::vector<ReflectedCsjRow> rows) {
  ReflectedCsjReport rep;
  rep.rows = std::move(rows);
  for (const auto& row : rep.rows) {
    rep.ambient.add({row.x0, 0.0, row.r, row.fn, row.ambient_lhs, row.ambient_energy, row.ambient_mass});
    rep.reflected.add(
        {row.x0, 0.0, row.r, row.fn, row.reflected_lhs, row.domain_energy, row.domain_mass14});
    rep.monotone = rep.monotone && row.monotone;
    if (row.domain_mass7 > 0.0) {
      rep.C3 = std::max(rep.C3, row.ambient_mass / row.domain_mass7);
    } else if (row.ambient_mass > 0.0) {
      rep.C3 = std::numeric_limits<double>::infinity();
    }
    if (row.domain_energy > 0.0) {
      rep.C4 = std::max(rep.C4, row.ambient_energy / row.domain_energy);
    } else if (row.ambient_energy > kVacuousFloor * row.ambient_mass) {
      rep.C4 = std::numeric_limits<double>::infinity();
    }
  }
  rep.ambient.finalize();
  rep.reflected.finalize();
  rep.chain_bound = rep.ambient.ray() * std::max(rep.C3, rep.C4);
  rep.chain_ok = rep.reflected.ray() <= rep.chain_bound * (1.0 + kSlack);
  return rep;
}

}  // namespace reflekt
