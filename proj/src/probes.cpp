#include "reflekt/probes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace reflekt {

std::vector<PointId> sample_centers(const Domain& domain, std::size_t max_centers,
                                    std::uint64_t seed) {
  const auto& ids = domain.interior();
  if (ids.size() <= max_centers) return ids;
  const auto& X = domain.space();
  std::vector<double> cum(ids.size());
  double s = 0.0;
  for (std::size_t k = 0; k < ids.size(); ++k) cum[k] = (s += X.mass(ids[k]));
  Rng rng(seed);
  std::vector<bool> taken(ids.size(), false);
  std::vector<PointId> out;
  while (out.size() < max_centers) {
    const double u = rng.uniform() * s;
    std::size_t k = std::size_t(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
    k = std::min(k, ids.size() - 1);
    if (taken[k]) continue;
    taken[k] = true;
    out.push_back(ids[k]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> probe_radii(const Domain& domain, double lo_factor, double hi_factor) {
  return dyadic_radii(lo_factor * domain.mesh(), hi_factor * domain.diam());
}

std::vector<TestFunction> test_family(const MetricMeasureSpace& space, std::uint64_t seed) {
  const std::size_t n = space.size();
  std::vector<Point2> c = space.coordinates();
  if (c.empty()) {
    c.resize(n);
    for (std::size_t k = 0; k < n; ++k) c[k] = {n > 1 ? double(k) / double(n - 1) : 0.0, 0.0};
  }
  const bool flat = std::all_of(c.begin(), c.end(), [](const Point2& p) { return p.y == 0.0; });
  const double pi = std::numbers::pi;
  const Point2 mid{0.5, flat ? 0.0 : 0.5};

  std::vector<TestFunction> fam(8);
  const char* names[8] = {"one", "coord_x", flat ? "coord_x_sq" : "coord_y", "cos_x",
                          "cos_xy", "random_sign", "half_indicator", "radial_bump"};
  for (std::size_t f = 0; f < 8; ++f) {
    fam[f].name = names[f];
    fam[f].values.resize(n);
  }
  Rng rng(seed);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& p = c[k];
    fam[0].values[k] = 1.0;
    fam[1].values[k] = p.x;
    fam[2].values[k] = flat ? p.x * p.x : p.y;
    fam[3].values[k] = std::cos(pi * p.x);
    fam[4].values[k] = std::cos(pi * p.x) * std::cos(pi * p.y);
    fam[5].values[k] = rng.uniform() < 0.5 ? -1.0 : 1.0;
    fam[6].values[k] = p.x < 0.5 ? 1.0 : 0.0;
    fam[7].values[k] = std::max(0.0, 1.0 - std::hypot(p.x - mid.x, p.y - mid.y) / 0.25);
  }
  return fam;
}

void FittedTable::add(PointId x0, double r, std::size_t fn, double lhs, double rhs,
                      double floor) {
  ProbeRow row{x0, r, fn, lhs, rhs, 0.0, false};
  if (lhs <= floor) {
    // Roundoff-level lhs holds at every C >= 0.
    row.vacuous = rhs == 0.0;
  } else {
    row.ratio = rhs == 0.0 ? std::numeric_limits<double>::infinity() : lhs / rhs;
  }
  rows.push_back(row);
}

void FittedTable::append(const FittedTable& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

void FittedTable::finalize() {
  constant = 0.0;
  witness = npos;
  radii.clear();
  per_radius.clear();
  for (const auto& row : rows) radii.push_back(row.r);
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  per_radius.assign(radii.size(), 0.0);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& row = rows[k];
    if (row.vacuous) continue;
    if (witness == npos || row.ratio > constant) {
      constant = row.ratio;
      witness = k;
    }
    const std::size_t s =
        std::size_t(std::lower_bound(radii.begin(), radii.end(), row.r) - radii.begin());
    per_radius[s] = std::max(per_radius[s], row.ratio);
  }
  finite = std::isfinite(constant);
}

double FittedTable::sweep_spread() const {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  std::size_t count = 0;
  for (double c : per_radius) {
    if (!(c > 0.0)) continue;
    ++count;
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  return count < 2 ? 1.0 : hi / lo;
}

bool FittedTable::all_hold() const {
  return finite && std::all_of(rows.begin(), rows.end(), [this](const ProbeRow& row) {
    return row.vacuous || row.ratio <= constant;
  });
}

}  // namespace reflekt
