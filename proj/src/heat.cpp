#include "reflekt/heat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "reflekt/error.hpp"
#include "reflekt/probes.hpp"

namespace reflekt {

Generator Generator::build(const JumpKernel& kernel) {
  const auto& X = kernel.space();
  const std::size_t n = X.size();
  if (n > kMaxSpectralPoints) {
    throw Error(ErrorKind::ResolutionTooLarge,
                std::to_string(n) + " points exceed the spectral cap " +
                    std::to_string(kMaxSpectralPoints));
  }
  Generator g;
  g.space_ = kernel.space_ptr();
  g.sf_ = kernel.scale();
  g.n_ = n;
  g.L_.resize(n, n);
  Eigen::MatrixXd S(n, n);
  Eigen::VectorXd sq(n);
  for (std::size_t x = 0; x < n; ++x) sq[x] = std::sqrt(X.mass(PointId(x)));
  for (std::size_t x = 0; x < n; ++x) {
    const double mx = X.mass(PointId(x));
    for (std::size_t y = 0; y < n; ++y) {
      const double w = kernel.weight(PointId(x), PointId(y));
      g.L_(x, y) = x == y ? -kernel.degree(PointId(x)) / mx : w / mx;
      S(x, y) = x == y ? -kernel.degree(PointId(x)) / mx : w / (sq[x] * sq[y]);
    }
  }
  double asym = 0.0, scale = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      const double a = X.mass(PointId(x)) * g.L_(x, y);
      const double b = X.mass(PointId(y)) * g.L_(y, x);
      asym = std::max(asym, std::abs(a - b));
      scale = std::max(scale, std::abs(a));
    }
  }
  g.symmetry_error_ = scale > 0.0 ? asym / scale : 0.0;

  std::vector<bool> seen(n, false);
  std::queue<std::size_t> bfs;
  bfs.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!bfs.empty()) {
    const std::size_t x = bfs.front();
    bfs.pop();
    for (std::size_t y = 0; y < n; ++y) {
      if (!seen[y] && kernel.weight(PointId(x), PointId(y)) > 0.0) {
        seen[y] = true;
        ++reached;
        bfs.push(y);
      }
    }
  }
  g.connected_ = reached == n;

  // sqrt(m) spans the kernel of S; a Householder reflection sending it to e_1 deflates it
  // so the constant mode is exact and the semigroup conserves mass to rounding.
  const Eigen::VectorXd v = sq / sq.norm();
  Eigen::VectorXd u = v;
  u[0] -= 1.0;
  const double unorm2 = u.squaredNorm();
  Eigen::MatrixXd V(n, n);
  Eigen::VectorXd lambda(n);
  if (n == 1 || unorm2 < 1e-30) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success) throw Error(ErrorKind::SingularSystem, "eigen-decomposition failed");
    V = es.eigenvectors();
    lambda = es.eigenvalues();
  } else {
    const double beta = 2.0 / unorm2;
    const Eigen::VectorXd a = S * u;
    const double ua = u.dot(a);
    Eigen::MatrixXd R = S;
    R.noalias() -= beta * u * a.transpose();
    R.noalias() -= beta * a * u.transpose();
    R.noalias() += (beta * beta * ua) * u * u.transpose();
    const Eigen::MatrixXd T = 0.5 * (R.bottomRightCorner(n - 1, n - 1) +
                                     R.bottomRightCorner(n - 1, n - 1).transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    if (es.info() != Eigen::Success) throw Error(ErrorKind::SingularSystem, "eigen-decomposition failed");
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n - 1);
    W.bottomRows(n - 1) = es.eigenvectors();
    const Eigen::RowVectorXd uw = u.transpose() * W;
    W.noalias() -= beta * u * uw;
    // Ascending order with the exact zero mode last.
    V.leftCols(n - 1) = W;
    V.col(n - 1) = v;
    lambda.head(n - 1) = es.eigenvalues();
    lambda[n - 1] = 0.0;
  }
  g.lambda_ = lambda;
  g.phi_ = sq.cwiseInverse().asDiagonal() * V;
  return g;
}

namespace {

// exp(lambda t) below this contributes nothing representable and would push the dense
// products into subnormal arithmetic.
constexpr double kNegligible = 1e-200;

Eigen::VectorXd decay(const Eigen::VectorXd& lambda, double t) {
  Eigen::VectorXd e = (lambda * t).array().exp();
  for (Eigen::Index k = 0; k < e.size(); ++k)
    if (e[k] < kNegligible) e[k] = 0.0;
  return e;
}

}  // namespace

Function Generator::apply(const Function& f) const {
  if (f.size() != n_) throw Error(ErrorKind::DimensionMismatch, "generator input size");
  Function out(n_, 0.0);
  for (std::size_t x = 0; x < n_; ++x) {
    double s = 0.0;
    for (std::size_t y = 0; y < n_; ++y)
      if (y != x) s += (f[y] - f[x]) * L_(x, y);
    out[x] = s;
  }
  return out;
}

Eigen::MatrixXd Generator::heat_kernel(double t) const {
  if (!(t > 0.0)) throw Error(ErrorKind::NonPositiveTime, "heat kernel needs t > 0");
  const Eigen::VectorXd e = decay(lambda_, t);
  const Eigen::MatrixXd scaled = phi_ * e.asDiagonal();
  Eigen::MatrixXd p(n_, n_);
  p.noalias() = scaled * phi_.transpose();
  return p;
}

Function Generator::propagate(const Function& f, double t) const {
  if (f.size() != n_) throw Error(ErrorKind::DimensionMismatch, "propagate input size");
  if (t < 0.0) throw Error(ErrorKind::NonPositiveTime, "negative time");
  Eigen::VectorXd v(n_);
  for (std::size_t x = 0; x < n_; ++x) v[x] = f[x] * space_->mass(PointId(x));
  const Eigen::VectorXd c = phi_.transpose() * v;
  const Eigen::VectorXd out = phi_ * (decay(lambda_, t).array() * c.array()).matrix();
  return Function(out.data(), out.data() + n_);
}

// ---------------------------------------------------------------------------

double HkEnvelope::operator()(double t, PointId x, PointId y) const {
  if (!(t > 0.0)) throw Error(ErrorKind::NonPositiveTime, "envelope needs t > 0");
  const auto& X = *space_;
  const double diag = 1.0 / X.volume(x, sf_.inverse(t));
  if (x == y) return diag;
  const double d = X.distance(x, y);
  return std::min(diag, t / (X.volume(x, d) * sf_(d)));
}

HkRatioReport hk_ratio_report(const Generator& gen, const HkOptions& opt) {
  const auto& X = gen.space();
  const auto& sf = gen.scale();
  const std::size_t n = X.size();
  const double mesh = opt.mesh_override > 0.0 ? opt.mesh_override : X.mesh();
  const double diam = opt.diam_override > 0.0 ? opt.diam_override : X.diam();
  HkRatioReport rep;
  rep.t_min = sf(opt.window_low * mesh);
  rep.t_max = sf(opt.window_high * diam);
  if (!(rep.t_min <= rep.t_max) || opt.time_points == 0) {
    throw Error(ErrorKind::InvalidArgument, "empty heat kernel time window");
  }
  const std::size_t K = opt.time_points;
  for (std::size_t k = 0; k < K; ++k) {
    const double s = K == 1 ? 0.0 : double(k) / double(K - 1);
    rep.times.push_back(rep.t_min * std::pow(rep.t_max / rep.t_min, s));
  }

  std::vector<bool> admissible(n * n);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      const bool ok = x == y || X.ball_size(PointId(x), X.distance(PointId(x), PointId(y))) >= 2;
      admissible[x * n + y] = ok;
      ok ? ++rep.pairs : ++rep.excluded;
    }
  }
  std::vector<std::pair<PointId, PointId>> sample;
  if (rep.pairs <= opt.sample_pairs) {
    for (std::size_t k = 0; k < n * n; ++k)
      if (admissible[k]) sample.emplace_back(PointId(k / n), PointId(k % n));
  } else {
    Rng rng(opt.seed);
    std::vector<bool> taken(n * n, false);
    while (sample.size() < opt.sample_pairs) {
      const std::size_t k = std::size_t(rng.uniform() * double(n * n));
      if (k >= n * n || !admissible[k] || taken[k]) continue;
      taken[k] = true;
      sample.emplace_back(PointId(k / n), PointId(k % n));
    }
    std::sort(sample.begin(), sample.end());
  }

  const HkEnvelope q(gen.space_ptr(), sf);
  rep.inf_ratio = std::numeric_limits<double>::infinity();
  rep.sup_ratio = 0.0;
  rep.min_p = std::numeric_limits<double>::infinity();
  std::vector<double> qrow(n);
  for (double t : rep.times) {
    const Eigen::MatrixXd p = gen.heat_kernel(t);
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t y = 0; y < n; ++y) {
        const double pv = p(x, y);
        rep.min_p = std::min(rep.min_p, pv);
        if (!admissible[x * n + y]) continue;
        const double qv = q(t, PointId(x), PointId(y));
        const double ratio = pv / qv;
        if (ratio < rep.inf_ratio) {
          rep.inf_ratio = ratio;
          rep.inf_witness = {t, PointId(x), PointId(y), pv, qv, ratio};
        }
        if (ratio > rep.sup_ratio) {
          rep.sup_ratio = ratio;
          rep.sup_witness = {t, PointId(x), PointId(y), pv, qv, ratio};
        }
      }
    }
    for (const auto& [x, y] : sample) {
      const double pv = p(x, y);
      const double qv = q(t, x, y);
      rep.samples.push_back({t, x, y, pv, qv, pv / qv});
    }
  }
  rep.log_width = rep.inf_ratio > 0.0 ? std::log(rep.sup_ratio / rep.inf_ratio)
                                      : std::numeric_limits<double>::infinity();
  return rep;
}

SemigroupReport semigroup_checks(const Generator& gen) {
  const auto& X = gen.space();
  const std::size_t n = X.size();
  Eigen::VectorXd m(n);
  for (std::size_t x = 0; x < n; ++x) m[x] = X.mass(PointId(x));
  SemigroupReport rep;
  rep.min_p = std::numeric_limits<double>::infinity();
  for (double t : {0.01, 1.0, 100.0}) {
    const Eigen::MatrixXd p = gen.heat_kernel(t);
    const double scale = p.cwiseAbs().maxCoeff();
    rep.symmetry = std::max(rep.symmetry, (p - p.transpose()).cwiseAbs().maxCoeff() / scale);
    rep.conservation =
        std::max(rep.conservation, ((p * m).array() - 1.0).abs().maxCoeff());
    rep.min_p = std::min(rep.min_p, p.minCoeff());
  }
  const Eigen::MatrixXd ps = gen.heat_kernel(0.1);
  const Eigen::MatrixXd pt = gen.heat_kernel(0.2);
  const Eigen::MatrixXd pst = gen.heat_kernel(0.3);
  const Eigen::MatrixXd psm = ps * m.asDiagonal();
  Eigen::MatrixXd comp(n, n);
  comp.noalias() = psm * pt;
  rep.chapman_kolmogorov = (comp - pst).cwiseAbs().maxCoeff() / pst.cwiseAbs().maxCoeff();
  rep.symmetric = rep.symmetry <= 1e-12;
  rep.conservative = rep.conservation <= 1e-10;
  rep.positive = !gen.connected() || rep.min_p > 0.0;
  rep.semigroup = rep.chapman_kolmogorov <= 1e-8;
  return rep;
}

namespace {

MainTheoremReport check_domain(const Domain& domain, double min_c_domain) {
  MainTheoremReport rep;
  rep.c_domain = check_ahlfors(domain).c_domain;
  if (rep.c_domain < min_c_domain) {
    throw Error(ErrorKind::NotAhlforsRegular,
                "Ahlfors constant " + std::to_string(rep.c_domain) + " below " +
                    std::to_string(min_c_domain));
  }
  return rep;
}

void finish_bands(MainTheoremReport& rep, const Generator& ambient_gen,
                  const JumpKernel& ambient, const Domain& domain, const HkOptions& opt) {
  HkOptions o = opt;
  o.mesh_override = domain.mesh();
  o.diam_override = domain.diam();
  rep.ambient = hk_ratio_report(ambient_gen, o);
  rep.reflected = domain.is_full()
                      ? rep.ambient
                      : hk_ratio_report(Generator::build(ambient.restrict_to(domain)), o);
  rep.kappa = rep.ambient.log_width > 0.0 ? rep.reflected.log_width / rep.ambient.log_width
                                          : (rep.reflected.log_width > 0.0
                                                 ? std::numeric_limits<double>::infinity()
                                                 : 1.0);
}

}  // namespace

MainTheoremReport main_theorem_experiment(const JumpKernel& ambient, const Domain& domain,
                                          const HkOptions& opt, double min_c_domain) {
  auto rep = check_domain(domain, min_c_domain);
  finish_bands(rep, Generator::build(ambient), ambient, domain, opt);
  return rep;
}

MainTheoremReport main_theorem_experiment(const Generator& ambient_gen, const JumpKernel& ambient,
                                          const Domain& domain, const HkOptions& opt,
                                          double min_c_domain) {
  if (ambient_gen.size() != ambient.size()) {
    throw Error(ErrorKind::DimensionMismatch, "generator and kernel sizes differ");
  }
  auto rep = check_domain(domain, min_c_domain);
  finish_bands(rep, ambient_gen, ambient, domain, opt);
  return rep;
}

}  // namespace reflekt
