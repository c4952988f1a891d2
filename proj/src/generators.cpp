#include "reflekt/generators.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>

#include "reflekt/error.hpp"

namespace reflekt {

namespace {

std::size_t pow_size(std::size_t base, int exp) {
  std::size_t v = 1;
  for (int k = 0; k < exp; ++k) v *= base;
  return v;
}

bool within(double v, double lo, double hi) {
  constexpr double tol = 1e-9;
  return v >= lo - tol && v <= hi + tol;
}

struct Lattice {
  std::size_t n;
  double h;
  std::vector<Point2> coords;
  std::vector<double> mass;
};

Lattice make_lattice(std::size_t n) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "lattice needs at least 2 points per side");
  Lattice L{n, 1.0 / double(n - 1), {}, {}};
  L.coords.reserve(n * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) L.coords.push_back({double(i) * L.h, double(j) * L.h});
  L.mass.assign(n * n, L.h * L.h);
  return L;
}

Instance finish(std::string name, MetricMeasureSpace space, std::vector<PointId> interior,
                bool full) {
  auto sp = std::make_shared<const MetricMeasureSpace>(std::move(space));
  if (full) {
    interior.resize(sp->size());
    for (std::size_t k = 0; k < interior.size(); ++k) interior[k] = PointId(k);
  }
  auto dom = std::make_shared<const Domain>(sp, std::move(interior));
  return {std::move(name), sp, dom};
}

Instance lattice_instance(std::string name, std::size_t n,
                          const std::function<bool(double, double)>& in_domain, bool full) {
  Lattice L = make_lattice(n);
  std::vector<PointId> interior;
  for (std::size_t k = 0; k < L.coords.size(); ++k)
    if (in_domain(L.coords[k].x, L.coords[k].y)) interior.push_back(PointId(k));
  const auto& c = L.coords;
  auto space = MetricMeasureSpace::build(
      c.size(), [&c](PointId a, PointId b) { return std::hypot(c[a].x - c[b].x, c[a].y - c[b].y); },
      L.mass, c);
  return finish(std::move(name), std::move(space), std::move(interior), full);
}

Instance path_interval(const GeneratorParams& p) {
  const std::size_t n = p.resolution;
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "path_interval needs at least 2 points");
  const double h = 1.0 / double(n - 1);
  std::vector<Point2> coords(n);
  std::vector<PointId> interior;
  for (std::size_t i = 0; i < n; ++i) {
    coords[i] = {double(i) * h, 0.0};
    // 0.25 <= i h <= 0.75 in exact integer arithmetic.
    if (4 * i >= n - 1 && 4 * i <= 3 * (n - 1)) interior.push_back(PointId(i));
  }
  auto space = MetricMeasureSpace::build(
      n, [h](PointId a, PointId b) { return std::abs(double(a) - double(b)) * h; },
      std::vector<double>(n, h), coords);
  return finish("path_interval", std::move(space), std::move(interior), p.full_domain);
}

bool in_square(double x, double y) { return within(x, 0.25, 0.75) && within(y, 0.25, 0.75); }

Instance grid_with_slits(const GeneratorParams& p) {
  const std::size_t n = p.resolution;
  const double h = 1.0 / double(n - 1);
  std::vector<long> slit_cols;
  for (double sx : {0.35, 0.5, 0.65}) slit_cols.push_back(std::lround(sx / h));
  auto in_domain = [h, slit_cols](double x, double y) {
    if (!in_square(x, y)) return false;
    const long col = std::lround(x / h);
    const bool on_slit = std::find(slit_cols.begin(), slit_cols.end(), col) != slit_cols.end();
    return !(on_slit && y > 0.45 + 1e-9);
  };
  return lattice_instance("grid_with_slits", n, in_domain, p.full_domain);
}

Instance comb(const GeneratorParams& p) {
  auto in_domain = [](double x, double y) {
    if (within(y, 0.25, 0.4) && within(x, 0.25, 0.75)) return true;
    if (!within(y, 0.4, 0.75)) return false;
    return within(x, 0.25, 0.35) || within(x, 0.45, 0.55) || within(x, 0.65, 0.75);
  };
  return lattice_instance("comb", p.resolution, in_domain, p.full_domain);
}

bool carpet_cell(std::size_t i, std::size_t j, int level) {
  for (int k = 0; k < level; ++k) {
    if (i % 3 == 1 && j % 3 == 1) return false;
    i /= 3;
    j /= 3;
  }
  return true;
}

Instance carpet_prefractal(const GeneratorParams& p) {
  const int level = p.level;
  const std::size_t side = pow_size(3, level);
  const double cell = 1.0 / double(side);
  std::vector<long> index(side * side, -1);
  std::vector<Point2> coords;
  for (std::size_t j = 0; j < side; ++j) {
    for (std::size_t i = 0; i < side; ++i) {
      if (!carpet_cell(i, j, level)) continue;
      index[j * side + i] = long(coords.size());
      coords.push_back({(double(i) + 0.5) * cell, (double(j) + 0.5) * cell});
    }
  }
  const std::size_t n = coords.size();
  // Graph metric: breadth-first hop counts over 4-neighbour adjacency, scaled by the cell size.
  std::vector<double> table(n * n, 0.0);
  std::vector<int> hops(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(hops.begin(), hops.end(), -1);
    std::deque<std::size_t> queue{s};
    hops[s] = 0;
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      const long ui = std::lround(coords[u].x / cell - 0.5);
      const long uj = std::lround(coords[u].y / cell - 0.5);
      const long di[4] = {1, -1, 0, 0};
      const long dj[4] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        const long vi = ui + di[k], vj = uj + dj[k];
        if (vi < 0 || vj < 0 || vi >= long(side) || vj >= long(side)) continue;
        const long v = index[std::size_t(vj) * side + std::size_t(vi)];
        if (v < 0 || hops[std::size_t(v)] >= 0) continue;
        hops[std::size_t(v)] = hops[u] + 1;
        queue.push_back(std::size_t(v));
      }
    }
    for (std::size_t t = 0; t < n; ++t) table[s * n + t] = double(hops[t]) * cell;
  }
  std::vector<PointId> interior;
  for (std::size_t k = 0; k < n; ++k)
    if (coords[k].x < 0.5) interior.push_back(PointId(k));
  auto space = MetricMeasureSpace::from_table(std::move(table),
                                              std::vector<double>(n, 1.0 / double(n)), coords);
  return finish("carpet_prefractal", std::move(space), std::move(interior), p.full_domain);
}

}  // namespace

std::vector<std::string> generator_names() {
  return {"path_interval", "grid_square", "grid_with_slits", "comb", "carpet_prefractal"};
}

std::size_t generator_point_count(const std::string& name, const GeneratorParams& params) {
  if (name == "path_interval") return params.resolution;
  if (name == "grid_square" || name == "grid_with_slits" || name == "comb")
    return params.resolution * params.resolution;
  if (name == "carpet_prefractal") {
    if (params.level < 0 || params.level > 6)
      throw Error(ErrorKind::InvalidArgument, "carpet level must lie in [0, 6]");
    return pow_size(8, params.level);
  }
  throw Error(ErrorKind::UnknownGenerator, "no generator named '" + name + "'");
}

Instance generate_example(const std::string& name, const GeneratorParams& params) {
  const std::size_t count = generator_point_count(name, params);
  if (count > params.max_points) {
    throw Error(ErrorKind::ResolutionTooLarge, name + " would produce " + std::to_string(count) +
                                                   " points, cap is " +
                                                   std::to_string(params.max_points));
  }
  if (name == "path_interval") return path_interval(params);
  if (name == "grid_square")
    return lattice_instance("grid_square", params.resolution, in_square, params.full_domain);
  if (name == "grid_with_slits") return grid_with_slits(params);
  if (name == "comb") return comb(params);
  return carpet_prefractal(params);
}

}  // namespace reflekt
