#include "reflekt/whitney.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "reflekt/error.hpp"

namespace reflekt {

namespace {

// Absorbs the rounding of r_i = d(x_i, D) / 5; every checked inequality is strict in
// exact arithmetic on a finite space.
constexpr double kRoundoff = 1e-12;

}  // namespace

WhitneyCover WhitneyCover::build(std::shared_ptr<const Domain> domain) {
  const Domain& D = *domain;
  const auto& X = D.space();
  if (D.exterior().empty()) {
    throw Error(ErrorKind::InvalidArgument, "Whitney cover needs a nonempty exterior");
  }
  std::vector<PointId> order = D.exterior();
  std::stable_sort(order.begin(), order.end(), [&D](PointId a, PointId b) {
    return D.distance_to_domain(a) > D.distance_to_domain(b);
  });

  WhitneyCover cover;
  cover.domain_ = domain;
  const std::size_t n = X.size();
  std::vector<long> owner(n, -1);
  std::vector<bool> covered(n, false);
  std::size_t uncovered = order.size();

  for (PointId x : order) {
    if (uncovered == 0) break;
    const double r = D.distance_to_domain(x) / 5.0;
    const auto pts = X.ball_by_distance(x, r);
    const bool free = std::none_of(pts.begin(), pts.end(), [&](PointId y) { return owner[y] >= 0; });
    if (!free) continue;
    const long id = long(cover.balls_.size());
    cover.balls_.push_back({x, r});
    for (PointId y : pts) owner[y] = id;
    for (PointId y : X.ball_by_distance(x, 2.5 * r)) {
      if (!covered[y] && !D.contains(y)) {
        covered[y] = true;
        --uncovered;
      }
    }
  }
  if (uncovered != 0) {
    throw Error(ErrorKind::CoverageFailure,
                std::to_string(uncovered) + " exterior points left outside every (5/2)B_i");
  }

  const std::size_t m = cover.balls_.size();
  const double half_diam = D.diam() / 2.0;
  cover.in_lambda_.assign(m, false);
  for (std::size_t i = 0; i < m; ++i) {
    const double r = cover.balls_[i].radius;
    if (r > 0.0 && r < half_diam) {
      cover.lambda_.push_back(i);
      cover.in_lambda_[i] = true;
    }
  }

  for (std::size_t s = 0; s < kCachedDilations.size(); ++s) {
    const double lam = kCachedDilations[s];
    auto& mem = cover.members_[s];
    auto& con = cover.containing_[s];
    auto& nbr = cover.neighbors_[s];
    mem.resize(m);
    con.assign(n, {});
    nbr.assign(m, {});
    for (std::size_t i = 0; i < m; ++i) {
      mem[i] = X.ball(cover.balls_[i].center, lam * cover.balls_[i].radius);
      for (PointId y : mem[i]) con[y].push_back(i);
    }
    std::vector<long> mark(m, -1);
    for (std::size_t i = 0; i < m; ++i) {
      for (PointId y : mem[i]) {
        for (std::size_t j : con[y]) {
          if (mark[j] != long(i)) {
            mark[j] = long(i);
            nbr[i].push_back(j);
          }
        }
      }
      std::sort(nbr[i].begin(), nbr[i].end());
    }
  }
  return cover;
}

std::size_t WhitneyCover::slot(double lambda) const {
  for (std::size_t s = 0; s < kCachedDilations.size(); ++s)
    if (kCachedDilations[s] == lambda) return s;
  throw Error(ErrorKind::InvalidArgument, "dilation " + std::to_string(lambda) + " is not cached");
}

std::vector<PointId> WhitneyCover::dilate(std::size_t i, double lambda) const {
  return domain_->space().ball(balls_.at(i).center, lambda * balls_.at(i).radius);
}

const std::vector<PointId>& WhitneyCover::members(std::size_t i, double lambda) const {
  return members_[slot(lambda)].at(i);
}

const std::vector<std::size_t>& WhitneyCover::containing(PointId x, double lambda) const {
  return containing_[slot(lambda)].at(x);
}

const std::vector<std::size_t>& WhitneyCover::neighbors(std::size_t i, double lambda) const {
  return neighbors_[slot(lambda)].at(i);
}

// ---------------------------------------------------------------------------

void GeometryReport::throw_if_violated() const {
  if (ok()) return;
  std::ostringstream os;
  if (!violations.empty()) {
    const auto& w = violations.front();
    os << w.what << " (i=" << w.i << ", j=" << w.j << ", x=" << w.x << ", lambda=" << w.lambda
       << ")";
  } else {
    os << "geometry check failed";
  }
  throw Error(ErrorKind::GeometryViolation, os.str());
}

GeometryReport verify_geometry(const WhitneyCover& cover) {
  GeometryReport rep;
  const Domain& D = cover.domain();
  const auto& X = D.space();
  const std::size_t n = X.size();
  const std::size_t m = cover.size();
  auto violate = [&rep](bool& flag, std::size_t i, std::size_t j, PointId x, double lam,
                        const std::string& what) {
    flag = false;
    if (rep.violations.size() < 32) rep.violations.push_back({i, j, x, lam, what});
  };

  // D.i
  std::vector<long> owner(n, -1);
  for (std::size_t i = 0; i < m; ++i) {
    for (PointId y : cover.dilate(i, 1.0)) {
      if (owner[y] >= 0) violate(rep.disjoint, std::size_t(owner[y]), i, y, 1.0, "balls overlap");
      owner[y] = long(i);
    }
  }
  // D.ii
  for (std::size_t i = 0; i < m; ++i) {
    const auto& b = cover.ball(i);
    const double d = D.distance_to_domain(b.center);
    if (std::abs(5.0 * b.radius - d) > 4.0 * std::numeric_limits<double>::epsilon() * d)
      violate(rep.radius_identity, i, i, b.center, 1.0, "d(x_i, D) != 5 r_i");
  }
  // D.iii
  for (PointId x : D.exterior())
    if (cover.containing(x, 2.5).empty())
      violate(rep.covering, 0, 0, x, 2.5, "exterior point outside every (5/2)B_i");

  // Points of the exterior close to D lie in a 3B_i with i in Lambda.
  for (PointId x : D.exterior()) {
    if (!(D.distance_to_domain(x) < D.diam())) continue;
    const auto& in3 = cover.containing(x, 3.0);
    if (std::none_of(in3.begin(), in3.end(), [&](std::size_t i) { return cover.in_lambda(i); }))
      violate(rep.lambda_covers_near_field, 0, 0, x, 3.0, "no 3B_i with i in Lambda");
  }

  for (double lam : {2.0, 3.0, 4.0}) {
    DilationStats st;
    st.lambda = lam;
    std::vector<std::vector<PointId>> mem(m);
    std::vector<std::vector<std::size_t>> con(n);
    for (std::size_t i = 0; i < m; ++i) {
      mem[i] = cover.dilate(i, lam);
      for (PointId y : mem[i]) con[y].push_back(i);
    }
    const double lo = (5.0 - lam) / (5.0 + lam);
    const double hi = (5.0 + lam) / (5.0 - lam);
    std::vector<long> mark(m, -1);
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t count = 0;
      const double ri = cover.ball(i).radius;
      for (PointId y : mem[i]) {
        for (std::size_t j : con[y]) {
          if (mark[j] == long(i)) continue;
          mark[j] = long(i);
          ++count;
          const double q = cover.ball(j).radius / ri;
          st.min_radius_ratio = std::min(st.min_radius_ratio, q);
          st.max_radius_ratio = std::max(st.max_radius_ratio, q);
          if (q < lo * (1.0 - kRoundoff) || q > hi * (1.0 + kRoundoff))
            violate(rep.comparability, i, j, y, lam, "radius comparability fails");
        }
        const double dx = D.distance_to_domain(y);
        if (dx < (5.0 - lam) * ri * (1.0 - kRoundoff) || dx > (5.0 + lam) * ri * (1.0 + kRoundoff))
          violate(rep.distance_sandwich, i, i, y, lam, "distance sandwich fails");
      }
      st.max_neighbors = std::max(st.max_neighbors, count);
    }
    for (std::size_t y = 0; y < n; ++y) st.max_overlap = std::max(st.max_overlap, con[y].size());
    const double s = D.diam() / 4.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (!(cover.ball(i).radius < D.diam())) continue;
      const bool leaves = std::any_of(mem[i].begin(), mem[i].end(), [&](PointId y) {
        return !(D.distance_to_domain(y) < s);
      });
      if (leaves) ++st.far_count;
    }
    rep.dilations.push_back(st);
  }
  return rep;
}

std::vector<std::size_t> lambda_index_set(const WhitneyCover& cover, const Domain& domain) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cover.size(); ++i) {
    const double r = cover.ball(i).radius;
    if (r > 0.0 && r < domain.diam() / 2.0) out.push_back(i);
  }
  return out;
}

}  // namespace reflekt
