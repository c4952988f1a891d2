#include "reflekt/space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "reflekt/error.hpp"

namespace reflekt {

namespace {

constexpr std::size_t kExhaustiveTriangleLimit = 512;
constexpr std::size_t kSampledTriangles = std::size_t(1) << 18;

std::string triple_str(std::size_t x, std::size_t y, std::size_t z) {
  std::ostringstream os;
  os << "(" << x << ", " << y << ", " << z << ")";
  return os.str();
}

void validate_masses(const std::vector<double>& mass) {
  for (std::size_t i = 0; i < mass.size(); ++i) {
    if (!(mass[i] > 0.0) || !std::isfinite(mass[i])) {
      std::ostringstream os;
      os << "point " << i << " has mass " << mass[i];
      throw Error(ErrorKind::NonPositiveMass, os.str());
    }
  }
}

void validate_metric(std::size_t n, const std::vector<double>& d) {
  double diam = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    if (d[x * n + x] != 0.0) {
      throw Error(ErrorKind::MetricAxiomViolation,
                  "d(x,x) != 0 at triple " + triple_str(x, x, x));
    }
    for (std::size_t y = x + 1; y < n; ++y) {
      const double a = d[x * n + y];
      if (!std::isfinite(a) || a < 0.0) {
        throw Error(ErrorKind::MetricAxiomViolation,
                    "distance not finite and nonnegative at triple " + triple_str(x, y, y));
      }
      if (a == 0.0) {
        throw Error(ErrorKind::MetricAxiomViolation,
                    "distinct points at distance 0, triple " + triple_str(x, y, y));
      }
      if (a != d[y * n + x]) {
        throw Error(ErrorKind::MetricAxiomViolation,
                    "asymmetric distance at triple " + triple_str(x, y, x));
      }
      diam = std::max(diam, a);
    }
  }
  const double slack = 1e-12 * diam;
  auto check = [&](std::size_t x, std::size_t y, std::size_t z) {
    if (d[x * n + z] > d[x * n + y] + d[y * n + z] + slack) {
      throw Error(ErrorKind::MetricAxiomViolation,
                  "triangle inequality fails at triple " + triple_str(x, y, z));
    }
  };
  if (n <= kExhaustiveTriangleLimit) {
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t y = 0; y < n; ++y)
        for (std::size_t z = x + 1; z < n; ++z) check(x, y, z);
  } else {
    std::mt19937_64 rng(0x7269616e676c65ULL);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t s = 0; s < kSampledTriangles; ++s) check(pick(rng), pick(rng), pick(rng));
  }
}

}  // namespace

MetricMeasureSpace MetricMeasureSpace::build(std::size_t n, const Metric& metric,
                                             std::vector<double> mass,
                                             std::vector<Point2> coords) {
  std::vector<double> table(n * n, 0.0);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) table[x * n + y] = metric(PointId(x), PointId(y));
  return from_table(std::move(table), std::move(mass), std::move(coords));
}

MetricMeasureSpace MetricMeasureSpace::from_table(std::vector<double> table,
                                                  std::vector<double> mass,
                                                  std::vector<Point2> coords) {
  const std::size_t n = mass.size();
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "a space needs at least 2 points");
  if (table.size() != n * n) {
    throw Error(ErrorKind::DimensionMismatch, "distance table does not match point count");
  }
  if (!coords.empty() && coords.size() != n) {
    throw Error(ErrorKind::DimensionMismatch, "coordinate count does not match point count");
  }
  validate_masses(mass);
  validate_metric(n, table);

  MetricMeasureSpace s;
  s.n_ = n;
  s.dist_ = std::move(table);
  s.mass_ = std::move(mass);
  s.coords_ = std::move(coords);
  s.finalize();
  return s;
}

void MetricMeasureSpace::finalize() {
  const std::size_t n = n_;
  order_.resize(n * n);
  prefix_.assign(n * (n + 1), 0.0);
  total_mass_ = 0.0;
  for (double m : mass_) total_mass_ += m;
  diam_ = 0.0;
  mesh_ = std::numeric_limits<double>::infinity();
  for (std::size_t x = 0; x < n; ++x) {
    const double* row = dist_.data() + x * n;
    PointId* ord = order_.data() + x * n;
    std::iota(ord, ord + n, PointId(0));
    std::stable_sort(ord, ord + n, [row](PointId a, PointId b) { return row[a] < row[b]; });
    double* pre = prefix_.data() + x * (n + 1);
    for (std::size_t k = 0; k < n; ++k) pre[k + 1] = pre[k] + mass_[ord[k]];
    for (std::size_t y = 0; y < n; ++y) {
      if (y == x) continue;
      diam_ = std::max(diam_, row[y]);
      mesh_ = std::min(mesh_, row[y]);
    }
  }
  if (n < 2) mesh_ = 0.0;
}

void MetricMeasureSpace::check_point(PointId x) const {
  if (std::size_t(x) >= n_) {
    throw Error(ErrorKind::UnknownPoint, "point " + std::to_string(x) + " is not in the space");
  }
}

double MetricMeasureSpace::nearest_distance(PointId x) const {
  check_point(x);
  if (n_ < 2) return std::numeric_limits<double>::infinity();
  return dist_[std::size_t(x) * n_ + order_[std::size_t(x) * n_ + 1]];
}

std::size_t MetricMeasureSpace::ball_size(PointId x, double r) const {
  check_point(x);
  const PointId* ord = order_.data() + std::size_t(x) * n_;
  const double* row = dist_.data() + std::size_t(x) * n_;
  return std::size_t(std::partition_point(ord, ord + n_, [&](PointId y) { return row[y] < r; }) -
                     ord);
}

double MetricMeasureSpace::volume(PointId x, double r) const {
  return prefix_[std::size_t(x) * (n_ + 1) + ball_size(x, r)];
}

std::span<const PointId> MetricMeasureSpace::ball_by_distance(PointId x, double r) const {
  const std::size_t k = ball_size(x, r);
  return {order_.data() + std::size_t(x) * n_, k};
}

std::vector<PointId> MetricMeasureSpace::ball(PointId x, double r) const {
  auto span = ball_by_distance(x, r);
  std::vector<PointId> out(span.begin(), span.end());
  std::sort(out.begin(), out.end());
  return out;
}

MetricMeasureSpace MetricMeasureSpace::restrict_to(std::span<const PointId> ids) const {
  const std::size_t k = ids.size();
  if (k == 0) throw Error(ErrorKind::EmptyDomain, "cannot restrict to an empty set");
  MetricMeasureSpace s;
  s.n_ = k;
  s.dist_.resize(k * k);
  s.mass_.resize(k);
  if (has_coordinates()) s.coords_.resize(k);
  for (std::size_t a = 0; a < k; ++a) {
    check_point(ids[a]);
    s.mass_[a] = mass_[ids[a]];
    if (has_coordinates()) s.coords_[a] = coords_[ids[a]];
    for (std::size_t b = 0; b < k; ++b) s.dist_[a * k + b] = distance(ids[a], ids[b]);
  }
  s.finalize();
  return s;
}

// ---------------------------------------------------------------------------

Domain::Domain(SpacePtr space, std::vector<PointId> interior)
    : space_(std::move(space)), interior_(std::move(interior)) {
  const auto& X = *space_;
  const std::size_t n = X.size();
  std::sort(interior_.begin(), interior_.end());
  interior_.erase(std::unique(interior_.begin(), interior_.end()), interior_.end());
  if (interior_.empty()) throw Error(ErrorKind::EmptyDomain, "domain interior is empty");
  for (PointId x : interior_) X.check_point(x);

  local_.assign(n, npos);
  for (std::size_t k = 0; k < interior_.size(); ++k) local_[interior_[k]] = k;
  for (std::size_t x = 0; x < n; ++x)
    if (local_[x] == npos) exterior_.push_back(PointId(x));

  dist_to_domain_.assign(n, 0.0);
  nearest_.resize(n);
  for (std::size_t x = 0; x < n; ++x) {
    if (local_[x] != npos) {
      nearest_[x] = PointId(x);
      continue;
    }
    double best = std::numeric_limits<double>::infinity();
    PointId arg = interior_.front();
    for (PointId y : interior_) {
      const double dxy = X.distance(PointId(x), y);
      if (dxy < best) {
        best = dxy;
        arg = y;
      }
    }
    dist_to_domain_[x] = best;
    nearest_[x] = arg;
  }

  mesh_ = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < interior_.size(); ++a) {
    mass_ += X.mass(interior_[a]);
    for (std::size_t b = a + 1; b < interior_.size(); ++b) {
      const double d = X.distance(interior_[a], interior_[b]);
      diam_ = std::max(diam_, d);
      mesh_ = std::min(mesh_, d);
    }
  }
  if (interior_.size() < 2) mesh_ = 0.0;
}

double Domain::volume(PointId x, double r) const {
  double s = 0.0;
  for (PointId y : space_->ball_by_distance(x, r)) s += local_[y] != npos ? space_->mass(y) : 0.0;
  return s;
}

std::vector<PointId> Domain::ball(PointId x, double r) const {
  std::vector<PointId> out;
  for (PointId y : space_->ball(x, r))
    if (local_[y] != npos) out.push_back(y);
  return out;
}

Function Domain::restrict(const Function& global) const {
  if (global.size() != space_->size()) {
    throw Error(ErrorKind::DimensionMismatch, "function size does not match the space");
  }
  Function out(interior_.size());
  for (std::size_t k = 0; k < interior_.size(); ++k) out[k] = global[interior_[k]];
  return out;
}

Function Domain::embed(const Function& local) const {
  if (local.size() != interior_.size()) {
    throw Error(ErrorKind::DimensionMismatch, "function size does not match the domain");
  }
  Function out(space_->size(), 0.0);
  for (std::size_t k = 0; k < interior_.size(); ++k) out[interior_[k]] = local[k];
  return out;
}

std::vector<double> dyadic_radii(double base, double upper) {
  std::vector<double> out;
  if (!(base > 0.0)) return out;
  for (double r = base; r <= upper; r *= 2.0) out.push_back(r);
  return out;
}

// ---------------------------------------------------------------------------

NetResult greedy_net(const MetricMeasureSpace& space, std::span<const PointId> subset, double r) {
  if (subset.empty()) throw Error(ErrorKind::InvalidArgument, "net of an empty set");
  if (!(r > 0.0)) throw Error(ErrorKind::InvalidArgument, "net radius must be positive");
  std::vector<PointId> scan(subset.begin(), subset.end());
  std::sort(scan.begin(), scan.end());
  scan.erase(std::unique(scan.begin(), scan.end()), scan.end());
  NetResult net;
  net.radius = r;
  for (PointId x : scan) {
    space.check_point(x);
    bool covered = false;
    for (PointId c : net.centers) {
      if (space.distance(x, c) < r) {
        covered = true;
        break;
      }
    }
    if (!covered) net.centers.push_back(x);
  }
  return net;
}

std::size_t max_overlap(const MetricMeasureSpace& space, std::span<const PointId> centers,
                        double radius) {
  std::size_t best = 0;
  for (std::size_t x = 0; x < space.size(); ++x) {
    std::size_t count = 0;
    for (PointId c : centers)
      if (space.distance(PointId(x), c) < radius) ++count;
    best = std::max(best, count);
  }
  return best;
}

double net_size_bound(double c1, double d1, double diam_subset, double r) {
  return c1 * std::pow(1.0 + 4.0 * diam_subset / r, d1);
}

namespace {

// Radii below this multiple of the mesh see only lattice quantization.
constexpr double kSlopeFloor = 4.0;

double least_squares_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = double(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxy += (xs[k] - mx) * (ys[k] - my);
    sxx += (xs[k] - mx) * (xs[k] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

}  // namespace

DoublingReport check_doubling(const MetricMeasureSpace& space, double qrvd_lambda0) {
  DoublingReport rep;
  rep.qrvd_lambda0 = qrvd_lambda0;
  const std::size_t n = space.size();
  const auto radii = dyadic_radii(space.mesh(), space.diam());
  const std::size_t nr = radii.size();
  std::vector<double> vol(n * nr);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t k = 0; k < nr; ++k) vol[x * nr + k] = space.volume(PointId(x), radii[k]);

  // d1: worst per-center log-log growth rate above the quantization floor.
  std::size_t first = 0;
  while (first < nr && radii[first] < kSlopeFloor * space.mesh()) ++first;
  if (nr - first < 2) first = 0;
  double d1 = 0.0;
  if (nr - first >= 2) {
    std::vector<double> lr;
    for (std::size_t k = first; k < nr; ++k) lr.push_back(std::log(radii[k]));
    std::vector<double> lv(lr.size());
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t k = first; k < nr; ++k) lv[k - first] = std::log(vol[x * nr + k]);
      d1 = std::max(d1, least_squares_slope(lr, lv));
    }
  }
  rep.d1 = d1;

  // c1 given d1, and the plain doubling constant.
  rep.c1 = 1.0;
  rep.doubling_constant = 1.0;
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t a = 0; a < nr; ++a) {
      for (std::size_t b = a + 1; b < nr; ++b) {
        const double ratio = vol[x * nr + b] / vol[x * nr + a] / std::pow(radii[b] / radii[a], d1);
        if (ratio > rep.c1) {
          rep.c1 = ratio;
          rep.c1_witness = {PointId(x), radii[a], radii[b]};
        }
      }
      const double dbl = space.volume(PointId(x), 2.0 * radii[a]) / vol[x * nr + a];
      if (dbl > rep.doubling_constant) {
        rep.doubling_constant = dbl;
        rep.doubling_witness = {PointId(x), radii[a], 2.0 * radii[a]};
      }
    }
  }

  // QRVD restricted to d(x, X\{x}) <= r < diam / lambda0.
  for (std::size_t x = 0; x < n; ++x) {
    const double floor_r = space.nearest_distance(PointId(x));
    for (std::size_t k = 0; k < nr; ++k) {
      const double r = radii[k];
      if (r < floor_r || !(r < space.diam() / qrvd_lambda0)) continue;
      const double ratio = space.volume(PointId(x), qrvd_lambda0 * r) / vol[x * nr + k];
      if (ratio < rep.qrvd_C) {
        rep.qrvd_C = ratio;
        rep.qrvd_witness = {PointId(x), r, qrvd_lambda0 * r};
      }
    }
  }

  // Two-point consequence, over a strided subset of centers; the radius d + r1 is
  // off-grid, so one dyadic rounding step is allowed on top of c1.
  const std::size_t stride = std::max<std::size_t>(1, n / 48);
  rep.vd1_constant = 0.0;
  for (std::size_t x = 0; x < n; x += stride) {
    for (std::size_t y = 0; y < n; y += stride) {
      const double dxy = space.distance(PointId(x), PointId(y));
      for (std::size_t a = 0; a < nr; ++a) {
        for (std::size_t b = 0; b < nr; ++b) {
          const double q = (dxy + radii[a]) / radii[b];
          if (q < 1.0) continue;
          const double ratio = vol[x * nr + a] / vol[y * nr + b] / std::pow(q, d1);
          rep.vd1_constant = std::max(rep.vd1_constant, ratio);
        }
      }
    }
  }
  rep.vd1_holds = rep.vd1_constant <= rep.c1 * std::pow(2.0, d1) * (1.0 + 1e-12);
  return rep;
}

double doubling_ratio_at(const MetricMeasureSpace& space, const RadiusWitness& w, double d1) {
  return space.volume(w.x, w.big_r) / space.volume(w.x, w.r) / std::pow(w.big_r / w.r, d1);
}

AhlforsReport check_ahlfors(const Domain& domain) {
  const auto& X = domain.space();
  AhlforsReport rep;
  rep.c_domain = 1.0;
  bool first = true;
  for (double r : dyadic_radii(X.mesh(), domain.diam() / 2.0)) {
    if (!(r < domain.diam() / 2.0)) continue;
    for (PointId x : domain.interior()) {
      const double ratio = domain.volume(x, r) / X.volume(x, r);
      if (first || ratio < rep.c_domain) {
        rep.c_domain = ratio;
        rep.witness_x = x;
        rep.witness_r = r;
        first = false;
      }
    }
  }
  double m0 = 0.0;
  for (PointId x : domain.interior()) m0 += X.mass(x);
  rep.boundary_mass_null = m0 == domain.mass();
  return rep;
}

}  // namespace reflekt
