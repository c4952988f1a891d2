#include "reflekt/kernel.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "reflekt/error.hpp"

namespace reflekt {

ScaleFunction ScaleFunction::power(double beta) {
  if (!(beta > 0.0)) throw Error(ErrorKind::InvalidArgument, "scale exponent must be positive");
  ScaleFunction sf;
  sf.kind_ = Kind::Power;
  sf.beta_low_ = sf.beta_high_ = beta;
  return sf;
}

ScaleFunction ScaleFunction::two_regime(double beta_low, double beta_high, double crossover) {
  if (!(beta_low > 0.0) || !(beta_high > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "scale exponents must be positive");
  }
  if (!(crossover > 0.0)) throw Error(ErrorKind::InvalidArgument, "crossover must be positive");
  ScaleFunction sf;
  sf.kind_ = Kind::TwoRegime;
  sf.beta_low_ = beta_low;
  sf.beta_high_ = beta_high;
  sf.crossover_ = crossover;
  sf.norm_ = 1.0;
  sf.norm_ = sf.raw(1.0);
  return sf;
}

double ScaleFunction::raw(double r) const {
  if (kind_ == Kind::Power) return std::pow(r, beta_low_);
  if (r <= crossover_) return std::pow(r, beta_low_);
  return std::pow(crossover_, beta_low_) * std::pow(r / crossover_, beta_high_);
}

double ScaleFunction::operator()(double r) const {
  if (r < 0.0 || std::isnan(r)) throw Error(ErrorKind::NegativeArgument, "phi of a negative radius");
  if (r == 0.0) return 0.0;
  return raw(r) / norm_;
}

double ScaleFunction::inverse(double t) const {
  if (t < 0.0 || std::isnan(t)) throw Error(ErrorKind::NegativeArgument, "phi inverse of a negative time");
  if (t == 0.0) return 0.0;
  if (kind_ == Kind::Power) return std::pow(t, 1.0 / beta_low_);
  double lo = 0.0, hi = 1.0;
  while ((*this)(hi) < t) {
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > 1e-13 * hi) {
    const double mid = 0.5 * (lo + hi);
    ((*this)(mid) < t ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

bool ScaleFunction::satisfies_growth_bounds(double lo, double hi) const {
  const auto radii = dyadic_radii(lo, hi);
  for (std::size_t a = 0; a < radii.size(); ++a) {
    for (std::size_t b = a; b < radii.size(); ++b) {
      const double q = radii[b] / radii[a];
      const double ratio = (*this)(radii[b]) / (*this)(radii[a]);
      const double tol = 1e-12 * ratio;
      if (ratio < c1() * std::pow(q, beta1()) - tol) return false;
      if (ratio > c2() * std::pow(q, beta2()) + tol) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------

JumpKernel JumpKernel::build(SpacePtr space, const ScaleFunction& sf, double normalization) {
  if (!(normalization > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "kernel normalization must be positive");
  }
  JumpKernel k;
  k.space_ = std::move(space);
  k.sf_ = sf;
  k.normalization_ = normalization;
  const auto& X = *k.space_;
  const std::size_t n = X.size();
  k.n_ = n;
  k.w_.assign(n * n, 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = x + 1; y < n; ++y) {
      const double d = X.distance(PointId(x), PointId(y));
      const double vx = X.volume(PointId(x), d);
      const double vy = X.volume(PointId(y), d);
      const double J = 2.0 * normalization / ((vx + vy) * sf(d));
      const double w = J * X.mass(PointId(x)) * X.mass(PointId(y));
      k.w_[x * n + y] = w;
      k.w_[y * n + x] = w;
    }
  }
  k.finalize();
  return k;
}

JumpKernel JumpKernel::from_weights(SpacePtr space, std::vector<double> w,
                                    const ScaleFunction& sf) {
  const std::size_t n = space->size();
  if (w.size() != n * n) throw Error(ErrorKind::DimensionMismatch, "weight table size");
  for (std::size_t x = 0; x < n; ++x) {
    if (w[x * n + x] != 0.0) throw Error(ErrorKind::InvalidArgument, "nonzero diagonal weight");
    for (std::size_t y = x + 1; y < n; ++y) {
      if (w[x * n + y] != w[y * n + x] || !(w[x * n + y] >= 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "weights must be symmetric and nonnegative");
      }
    }
  }
  JumpKernel k;
  k.space_ = std::move(space);
  k.sf_ = sf;
  k.n_ = n;
  k.w_ = std::move(w);
  k.finalize();
  return k;
}

void JumpKernel::finalize() {
  const auto& X = *space_;
  degree_.assign(n_, 0.0);
  jphi_ = JphiFit{};
  jphi_.C1 = std::numeric_limits<double>::infinity();
  for (std::size_t x = 0; x < n_; ++x) {
    for (std::size_t y = 0; y < n_; ++y) {
      if (x == y) continue;
      degree_[x] += w_[x * n_ + y];
      const double d = X.distance(PointId(x), PointId(y));
      const double v = jump(PointId(x), PointId(y)) * X.volume(PointId(x), d) * sf_(d);
      if (v < jphi_.C1) {
        jphi_.C1 = v;
        jphi_.lo_x = PointId(x);
        jphi_.lo_y = PointId(y);
      }
      if (v > jphi_.C2) {
        jphi_.C2 = v;
        jphi_.hi_x = PointId(x);
        jphi_.hi_y = PointId(y);
      }
    }
  }
  if (n_ < 2) jphi_.C1 = 0.0;
}

void JumpKernel::check_size(const Function& f) const {
  if (f.size() != n_) {
    std::ostringstream os;
    os << "function has " << f.size() << " values, space has " << n_ << " points";
    throw Error(ErrorKind::DimensionMismatch, os.str());
  }
}

double JumpKernel::energy(const Function& f, const Function& g) const {
  check_size(f);
  check_size(g);
  double s = 0.0;
  for (std::size_t x = 0; x < n_; ++x) {
    const double* row = w_.data() + x * n_;
    for (std::size_t y = x + 1; y < n_; ++y) s += (f[x] - f[y]) * (g[x] - g[y]) * row[y];
  }
  return s;
}

double JumpKernel::energy(const Function& f) const { return energy(f, f); }

double JumpKernel::energy_sparse(const Function& f, std::span<const PointId> support) const {
  check_size(f);
  double inner = 0.0, outer = 0.0;
  for (std::size_t a = 0; a < support.size(); ++a) {
    const PointId x = support[a];
    double inside = 0.0;
    for (std::size_t b = 0; b < support.size(); ++b) {
      if (a == b) continue;
      const PointId y = support[b];
      const double w = weight(x, y);
      inside += w;
      if (b > a) inner += (f[x] - f[y]) * (f[x] - f[y]) * w;
    }
    outer += f[x] * f[x] * std::max(0.0, degree_[x] - inside);
  }
  return inner + outer;
}

double JumpKernel::restricted_energy(const Function& f, const PairPredicate& in_set) const {
  check_size(f);
  double s = 0.0;
  for (std::size_t x = 0; x < n_; ++x) {
    for (std::size_t y = 0; y < n_; ++y) {
      if (x == y || !in_set(PointId(x), PointId(y))) continue;
      const double df = f[x] - f[y];
      s += df * df * w_[x * n_ + y];
    }
  }
  return s;
}

double JumpKernel::restricted_energy(const Function& f, std::span<const PointId> A,
                                     std::span<const PointId> B) const {
  check_size(f);
  double s = 0.0;
  for (PointId x : A) {
    space_->check_point(x);
    for (PointId y : B) {
      const double df = f[x] - f[y];
      s += df * df * weight(x, y);
    }
  }
  return s;
}

double JumpKernel::tail_mass(PointId x, double r) const {
  space_->check_point(x);
  const auto& X = *space_;
  double s = 0.0;
  for (std::size_t y = 0; y < n_; ++y)
    if (y != x && X.distance(x, PointId(y)) >= r) s += w_[std::size_t(x) * n_ + y];
  return s / X.mass(x);
}

double JumpKernel::tail_constant_at(double r) const {
  double c = 0.0;
  const double p = sf_(r);
  for (std::size_t x = 0; x < n_; ++x) c = std::max(c, tail_mass(PointId(x), r) * p);
  return c;
}

TailReport JumpKernel::tail_bound_check() const {
  TailReport rep;
  for (double r : dyadic_radii(space_->mesh(), space_->diam())) {
    const double p = sf_(r);
    for (std::size_t x = 0; x < n_; ++x) {
      const double v = tail_mass(PointId(x), r) * p;
      if (v > rep.c) {
        rep.c = v;
        rep.witness_x = PointId(x);
        rep.witness_r = r;
      }
    }
  }
  rep.finite = std::isfinite(rep.c);
  return rep;
}

BoundRow JumpKernel::long_range_energy_bound(const Function& f, double r,
                                             const TailReport& tail) const {
  check_size(f);
  const auto& X = *space_;
  BoundRow row;
  row.lhs = restricted_energy(f, [&X, r](PointId x, PointId y) { return X.distance(x, y) >= r; });
  const double c = std::max(tail.c, tail_constant_at(r));
  double l2 = 0.0;
  for (std::size_t x = 0; x < n_; ++x) l2 += f[x] * f[x] * X.mass(PointId(x));
  row.rhs = 4.0 * c / sf_(r) * l2;
  row.ratio = safe_ratio(row.lhs, row.rhs);
  row.holds = row.lhs <= row.rhs * (1.0 + 1e-12);
  return row;
}

JumpKernel JumpKernel::restrict_to(const Domain& domain) const {
  const auto& ids = domain.interior();
  const std::size_t k = ids.size();
  JumpKernel out;
  out.space_ = std::make_shared<const MetricMeasureSpace>(space_->restrict_to(ids));
  out.sf_ = sf_;
  out.normalization_ = normalization_;
  out.n_ = k;
  out.w_.resize(k * k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) out.w_[a * k + b] = weight(ids[a], ids[b]);
  out.finalize();
  return out;
}

ReflectedForm reflected_form(const JumpKernel& ambient, std::shared_ptr<const Domain> domain) {
  if (!domain || domain->size() == 0) throw Error(ErrorKind::EmptyDomain, "reflected form on empty D");
  JumpKernel k = ambient.restrict_to(*domain);
  return ReflectedForm{std::move(domain), std::move(k)};
}

double safe_ratio(double lhs, double rhs) {
  if (rhs == 0.0) return lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return lhs / rhs;
}

}  // namespace reflekt
