#include "reflekt/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "reflekt/error.hpp"
#include "reflekt/probes.hpp"

namespace reflekt {

using Json = nlohmann::ordered_json;

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::ConfigError, what); }

[[noreturn]] void invariant(const std::string& module, const std::string& op,
                            const std::string& witness) {
  throw Error(ErrorKind::InvariantViolation, module + "." + op + ": " + witness);
}

// Copies obj[key] into out when present; wrong types become ConfigError.
template <class T>
void read(const Json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    config_error(std::string("field '") + key + "': " + e.what());
  }
}

const Json& section(const Json& root, const char* key) {
  static const Json empty = Json::object();
  if (!root.contains(key)) return empty;
  const Json& s = root.at(key);
  if (!s.is_object()) config_error(std::string("section '") + key + "' must be an object");
  return s;
}

void reject_unknown(const Json& obj, std::initializer_list<const char*> known, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const bool ok = std::any_of(known.begin(), known.end(), [&](const char* k) { return it.key() == k; });
    if (!ok) config_error("unknown field '" + it.key() + "' in " + where);
  }
}

double factor(double a, double b) {
  if (a == b) return 1.0;
  const double lo = std::min(a, b), hi = std::max(a, b);
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

// JSON has no infinities; they are written as null and read back as +inf.
Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

ScaleFunction ScaleSpec::make() const {
  if (kind == "power") return ScaleFunction::power(beta);
  if (kind == "two_regime") return ScaleFunction::two_regime(beta_low, beta_high, crossover);
  config_error("unknown scale kind '" + kind + "'");
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    config_error(std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) config_error("configuration must be a JSON object");
  reject_unknown(root,
                 {"schema_version", "generator", "scale", "normalization", "probes", "window",
                  "stages", "thresholds", "seed", "output_dir", "max_points"},
                 "configuration");
  int version = kSchemaVersion;
  read(root, "schema_version", version);
  if (version < 1 || version > kSchemaVersion) {
    config_error("unsupported schema_version " + std::to_string(version));
  }

  ExperimentConfig c;
  const Json& gen = section(root, "generator");
  reject_unknown(gen, {"name", "refinements", "full_domain"}, "generator");
  read(gen, "name", c.generator);
  read(gen, "refinements", c.refinements);
  read(gen, "full_domain", c.full_domain);

  const Json& sc = section(root, "scale");
  reject_unknown(sc, {"kind", "beta", "beta_low", "beta_high", "crossover"}, "scale");
  read(sc, "kind", c.scale.kind);
  read(sc, "beta", c.scale.beta);
  read(sc, "beta_low", c.scale.beta_low);
  read(sc, "beta_high", c.scale.beta_high);
  read(sc, "crossover", c.scale.crossover);

  read(root, "normalization", c.normalization);

  const Json& pr = section(root, "probes");
  reject_unknown(pr, {"centers", "csj_centers", "hk_pairs", "time_points"}, "probes");
  read(pr, "centers", c.centers);
  read(pr, "csj_centers", c.csj_centers);
  read(pr, "hk_pairs", c.hk_pairs);
  read(pr, "time_points", c.time_points);

  const Json& win = section(root, "window");
  reject_unknown(win, {"low", "high"}, "window");
  read(win, "low", c.window_low);
  read(win, "high", c.window_high);

  const Json& st = section(root, "stages");
  reject_unknown(st, {"heat", "csj"}, "stages");
  read(st, "heat", c.heat);
  read(st, "csj", c.csj);

  const Json& th = section(root, "thresholds");
  reject_unknown(th, {"refinement_factor", "sweep_factor", "kappa_max", "kappa_tolerance", "min_c_domain"},
                 "thresholds");
  read(th, "refinement_factor", c.thresholds.refinement_factor);
  read(th, "sweep_factor", c.thresholds.sweep_factor);
  read(th, "kappa_max", c.thresholds.kappa_max);
  read(th, "kappa_tolerance", c.thresholds.kappa_tolerance);
  read(th, "min_c_domain", c.thresholds.min_c_domain);

  read(root, "seed", c.seed);
  read(root, "output_dir", c.output_dir);
  read(root, "max_points", c.max_points);
  return c;
}

std::string ExperimentConfig::to_json_text() const {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["generator"] = {{"name", generator}, {"refinements", refinements}, {"full_domain", full_domain}};
  j["scale"] = {{"kind", scale.kind},
                {"beta", scale.beta},
                {"beta_low", scale.beta_low},
                {"beta_high", scale.beta_high},
                {"crossover", scale.crossover}};
  j["normalization"] = normalization;
  j["probes"] = {{"centers", centers},
                 {"csj_centers", csj_centers},
                 {"hk_pairs", hk_pairs},
                 {"time_points", time_points}};
  j["window"] = {{"low", window_low}, {"high", window_high}};
  j["stages"] = {{"heat", heat}, {"csj", csj}};
  j["thresholds"] = {{"refinement_factor", thresholds.refinement_factor},
                     {"sweep_factor", thresholds.sweep_factor},
                     {"kappa_max", thresholds.kappa_max},
                     {"kappa_tolerance", thresholds.kappa_tolerance},
                     {"min_c_domain", thresholds.min_c_domain}};
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  j["max_points"] = max_points;
  return j.dump(2) + "\n";
}

GeneratorParams ExperimentConfig::params(std::size_t level) const {
  GeneratorParams p;
  if (generator == "carpet_prefractal") {
    p.level = int(level);
  } else {
    p.resolution = level;
  }
  p.max_points = max_points;
  p.full_domain = full_domain;
  return p;
}

void ExperimentConfig::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) config_error(std::string(what) + " must be positive");
  };
  if (refinements.empty()) config_error("at least one refinement level is required");
  for (std::size_t k = 1; k < refinements.size(); ++k) {
    if (refinements[k] <= refinements[k - 1]) config_error("refinements must increase strictly");
  }
  if (scale.kind == "power") {
    positive(scale.beta, "scale.beta");
  } else if (scale.kind == "two_regime") {
    positive(scale.beta_low, "scale.beta_low");
    positive(scale.beta_high, "scale.beta_high");
    positive(scale.crossover, "scale.crossover");
  } else {
    config_error("unknown scale kind '" + scale.kind + "'");
  }
  positive(normalization, "normalization");
  if (centers == 0) config_error("probes.centers must be at least 1");
  if (csj && csj_centers == 0) config_error("probes.csj_centers must be at least 1");
  if (heat && time_points < 2) config_error("probes.time_points must be at least 2");
  if (heat && hk_pairs == 0) config_error("probes.hk_pairs must be at least 1");
  positive(window_low, "window.low");
  positive(window_high, "window.high");
  positive(thresholds.refinement_factor, "thresholds.refinement_factor");
  positive(thresholds.sweep_factor, "thresholds.sweep_factor");
  positive(thresholds.kappa_max, "thresholds.kappa_max");
  positive(thresholds.kappa_tolerance, "thresholds.kappa_tolerance");
  if (!(thresholds.min_c_domain >= 0.0)) config_error("thresholds.min_c_domain must be nonnegative");
  if (max_points == 0) config_error("max_points must be positive");
  if (output_dir.empty()) config_error("output_dir must not be empty");
  for (std::size_t level : refinements) {
    const std::size_t n = generator_point_count(generator, params(level));
    if (n > max_points) {
      throw Error(ErrorKind::ResolutionTooLarge, generator + " at " + std::to_string(level) +
                                                     " has " + std::to_string(n) +
                                                     " points, cap is " + std::to_string(max_points));
    }
    if (heat && n > kMaxSpectralPoints) {
      throw Error(ErrorKind::ResolutionTooLarge,
                  "heat stage needs at most " + std::to_string(kMaxSpectralPoints) + " points");
    }
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ExperimentConfig::from_json_text(ss.str());
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

void check_partition(const PartitionSummary& p) {
  if (!p.sums_to_one) invariant("partition", "build_psi", "sum of psi off 1 by " + fmt(p.max_sum_error));
  if (!p.lambda_sums_to_one) {
    invariant("partition", "build_psi", "Lambda-sum off 1 by " + fmt(p.max_lambda_sum_error));
  }
  if (!p.supports_ok) invariant("partition", "build_psi", "psi_i leaves 3B_i or touches D");
  if (!p.range_ok) invariant("partition", "build_psi", "psi_i outside [0,1]");
  if (!p.energy_chain_ok) invariant("partition", "build_psi", "energy of psi_i above its bound");
}

void check_mass(const MassCertificate& c) {
  const char* bad = !c.range_and_sum       ? "range or sum"
                    : !c.support_diameter  ? "support diameter"
                    : !c.support_distance  ? "support distance"
                    : !c.anchor_distance   ? "anchor distance"
                    : !c.support_in_ball   ? "support inside the ball"
                    : !c.mass_exact        ? "exact mass"
                    : !c.mass_comparable_corrected ? "mass comparability"
                                                   : nullptr;
  if (bad) {
    invariant("partition", "certify_mass_functions",
              std::string(bad) + " (min mass ratio " + fmt(c.min_mass_ratio) + " at ball " +
                  std::to_string(c.min_mass_ball) + ")");
  }
}

LevelReport run_level(const ExperimentConfig& c, std::size_t level) {
  LevelReport L;
  L.resolution = level;
  const Instance inst = generate_example(c.generator, c.params(level));
  const MetricMeasureSpace& X = *inst.space;
  const Domain& D = *inst.domain;
  L.instance = inst.name;
  L.points = X.size();
  L.domain_points = D.size();
  L.full_domain = D.is_full();

  // space
  L.doubling = check_doubling(X);
  L.ahlfors = check_ahlfors(D);

  // kernel
  const JumpKernel kernel = JumpKernel::build(inst.space, c.scale.make(), c.normalization);
  L.jphi = kernel.jphi();
  L.tail = kernel.tail_bound_check();

  std::vector<Function> family;
  for (auto& t : test_family(X, c.seed)) {
    L.functions.push_back(t.name);
    family.push_back(std::move(t.values));
  }
  const auto centers = sample_centers(D, c.centers, c.seed);
  const auto radii = probe_radii(D);

  // whitney, partition
  std::optional<ExtensionOperator> op;
  if (D.is_full()) {
    op = ExtensionOperator::identity(inst.domain);
  } else {
    const WhitneyCover cover = WhitneyCover::build(inst.domain);
    L.balls = cover.size();
    L.lambda_size = cover.lambda_set().size();
    L.geometry = verify_geometry(cover);
    if (!L.geometry.ok()) {
      try {
        L.geometry.throw_if_violated();
      } catch (const Error& e) {
        invariant("whitney", "verify_geometry", e.what());
      }
    }
    const EtaFamily eta = build_eta(kernel, cover);
    const PartitionOfUnity pu = build_psi(kernel, eta, cover);
    L.partition = {eta.max_ratio,        pu.max_energy_ratio, pu.max_sum_error,
                   pu.max_lambda_sum_error, pu.min_far_lambda_sum, pu.sums_to_one,
                   pu.lambda_sums_to_one, pu.supports_ok,     pu.range_ok,
                   pu.energy_chain_ok};
    check_partition(L.partition);
    const MassFunctions mf = build_mass_functions(cover);
    L.mass_C1 = mf.C1;
    L.mass_C2 = mf.C2;
    L.mass_C3 = mf.C3;
    L.mass = certify_mass_functions(mf, cover);
    check_mass(L.mass);

    // extension
    L.containment = check_index_containments(cover, mf);
    if (!L.containment.ok()) {
      const auto& w = L.containment.violations.front();
      invariant("extension", "check_index_containments",
                "x0=" + std::to_string(w.x0) + " ball=" + std::to_string(w.ball) +
                    " nearest=" + fmt(w.nearest) + " farthest=" + fmt(w.farthest));
    }
    L.pointwise = check_pointwise_inequalities(cover, mf);
    if (!L.pointwise.ok()) {
      invariant("extension", "check_pointwise_inequalities",
                "minima " + fmt(L.pointwise.min_ninth) + ", " + fmt(L.pointwise.min_two_fifths) +
                    ", " + fmt(L.pointwise.min_five_fourteenths));
    }
    op = ExtensionOperator::build(cover, pu, mf);
  }

  for (std::size_t f = 0; f < family.size(); ++f) {
    L.l2.append(l2_locality_report(*op, family[f], centers, radii, f).table);
  }
  L.l2.finalize();
  L.split = energy_split_report(*op, kernel, family, centers, radii);
  if (!L.split.additive) {
    invariant("extension", "energy_split_report",
              "near + off + 2 cross misses the total by " + fmt(L.split.max_additivity_error));
  }
  for (std::size_t f = 0; f < family.size(); ++f) {
    const auto row = extension_energy_bound(*op, kernel, family[f]);
    L.energy.add(0, 0.0, f, row.ambient, row.reflected);
  }
  L.energy.finalize();

  // heat
  if (c.heat) {
    L.heat_run = true;
    HkOptions opt;
    opt.window_low = c.window_low;
    opt.window_high = c.window_high;
    opt.time_points = c.time_points;
    opt.sample_pairs = c.hk_pairs;
    opt.seed = c.seed;
    try {
      const Generator gen = Generator::build(kernel);
      L.semigroup = semigroup_checks(gen);
      L.main = main_theorem_experiment(gen, kernel, D, opt, c.thresholds.min_c_domain);
      L.heat_status = "ok";
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NotAhlforsRegular) throw;
      L.heat_status = std::string(to_string(e.kind()));
    }
  } else {
    L.heat_status = "skipped";
  }

  // csj
  if (c.csj) {
    L.csj_run = true;
    const auto csj_centers = sample_centers(D, c.csj_centers, c.seed + 1);
    std::vector<ReflectedCsjRow> rrows;
    for (PointId x0 : csj_centers) {
      for (double r : radii) {
        L.csjb.append(csjb_check(kernel, x0, r, family));
        const auto cutoff = csj_composite_cutoff(kernel, x0, 2.0 * r, r);
        for (std::size_t f = 0; f < family.size(); ++f) {
          const auto cert = certify_composite(kernel, cutoff, family[f], 3.0, f);
          L.csj.add(cert.row);
          ++L.certificates;
          L.certificates_held += cert.holds ? 1 : 0;
          L.max_K1 = std::max(L.max_K1, cert.K1);
          L.max_K2 = std::max(L.max_K2, cert.K2);
        }
        auto rows = reflected_csj_via_extension(kernel, *op, x0, r, family);
        rrows.insert(rrows.end(), rows.begin(), rows.end());
      }
    }
    L.csjb.finalize();
    L.csj.finalize();
    L.reflected = summarize_reflected(std::move(rrows));
  }
  return L;
}

void add_check(std::vector<Check>& out, std::string name, std::string scope, double value,
               double threshold, bool pass) {
  out.push_back({std::move(name), std::move(scope), value, threshold, pass});
}

struct NamedTable {
  const char* name;
  const FittedTable* table;
};

std::vector<NamedTable> extension_tables(const LevelReport& L) {
  return {{"extension.l2", &L.l2},
          {"extension.near", &L.split.near},
          {"extension.off", &L.split.off},
          {"extension.cross", &L.split.cross},
          {"extension.combined", &L.split.combined}};
}

}  // namespace

std::vector<Check> stability_checks(const ExperimentConfig& c, const std::vector<LevelReport>& levels) {
  const Thresholds& th = c.thresholds;
  std::vector<Check> out;
  for (const auto& L : levels) {
    const std::string scope = std::to_string(L.resolution);
    if (!L.full_domain) {
      add_check(out, "partition.mass_constant", scope, L.mass.min_mass_ratio, 1.0 / L.mass.C_stated,
                L.mass.mass_comparable_stated);
    }
    for (const auto& [name, t] : extension_tables(L)) {
      add_check(out, std::string(name) + ".holds", scope, t->constant, t->constant, t->all_hold());
      add_check(out, std::string(name) + ".sweep", scope, t->sweep_spread(), th.sweep_factor,
                t->sweep_spread() <= th.sweep_factor);
    }
    add_check(out, "extension.energy.holds", scope, L.energy.constant, L.energy.constant,
              L.energy.all_hold());
    if (L.heat_run && L.heat_status == "ok") {
      add_check(out, "heat.semigroup", scope, L.semigroup.conservation, 1e-10, L.semigroup.ok());
      const bool band = L.main.ambient.positive_finite() && L.main.reflected.positive_finite();
      add_check(out, "heat.band", scope, L.main.reflected.log_width, L.main.reflected.log_width, band);
      add_check(out, "heat.kappa", scope, L.main.kappa, th.kappa_max,
                band && L.main.kappa <= th.kappa_max);
    }
    if (L.csj_run) {
      add_check(out, "csj.csjb.finite", scope, L.csjb.ray(), L.csjb.ray(), L.csjb.table.finite);
      add_check(out, "csj.composite.certified", scope, double(L.certificates_held),
                double(L.certificates), L.certificates_held == L.certificates);
      const auto& R = L.reflected.reflected;
      add_check(out, "csj.reflected.finite", scope, R.ray(), R.ray(), R.table.finite);
      add_check(out, "csj.reflected.sweep", scope, R.table.sweep_spread(), th.sweep_factor,
                R.table.sweep_spread() <= th.sweep_factor);
      add_check(out, "csj.reflected.chain", scope, R.ray(), L.reflected.chain_bound,
                L.reflected.chain_ok && L.reflected.monotone);
    }
  }
  for (std::size_t k = 1; k < levels.size(); ++k) {
    const LevelReport& A = levels[k - 1];
    const LevelReport& B = levels[k];
    const std::string scope = std::to_string(A.resolution) + "->" + std::to_string(B.resolution);
    const auto ta = extension_tables(A);
    const auto tb = extension_tables(B);
    for (std::size_t t = 0; t < ta.size(); ++t) {
      const double f = factor(ta[t].table->constant, tb[t].table->constant);
      add_check(out, std::string(ta[t].name) + ".refinement", scope, f, th.refinement_factor,
                f <= th.refinement_factor);
    }
    {
      const double f = factor(A.energy.constant, B.energy.constant);
      add_check(out, "extension.energy.refinement", scope, f, th.refinement_factor,
                f <= th.refinement_factor);
    }
    if (A.csj_run && B.csj_run) {
      const double f = factor(A.reflected.reflected.ray(), B.reflected.reflected.ray());
      add_check(out, "csj.reflected.refinement", scope, f, th.refinement_factor,
                f <= th.refinement_factor);
    }
    if (A.heat_status == "ok" && B.heat_status == "ok") {
      const double drift = std::abs(B.main.kappa / A.main.kappa - 1.0);
      add_check(out, "heat.kappa.refinement", scope, drift, th.kappa_tolerance,
                drift <= th.kappa_tolerance);
    }
  }
  return out;
}

bool ReportBundle::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

ReportBundle run_experiment(const ExperimentConfig& config) {
  config.validate();
  ReportBundle b;
  b.config = config;
  for (std::size_t level : config.refinements) b.levels.push_back(run_level(config, level));
  b.checks = stability_checks(config, b.levels);
  return b;
}

// ---------------------------------------------------------------------------
// Emission

namespace {

Json table_json(const FittedTable& t) {
  Json j;
  j["constant"] = num(t.constant);
  j["finite"] = t.finite;
  j["all_hold"] = t.all_hold();
  j["rows"] = t.rows.size();
  if (t.witness != FittedTable::npos) {
    const auto& w = t.rows[t.witness];
    j["witness"] = {{"x0", w.x0}, {"r", w.r}, {"fn", w.fn}, {"lhs", w.lhs}, {"rhs", w.rhs}};
  } else {
    j["witness"] = nullptr;
  }
  Json per = Json::array();
  for (std::size_t k = 0; k < t.radii.size(); ++k) {
    per.push_back({{"r", t.radii[k]}, {"constant", num(t.per_radius[k])}});
  }
  j["per_radius"] = per;
  j["sweep_spread"] = num(t.sweep_spread());
  return j;
}

Json fit_json(const CsjFit& f) {
  Json j = table_json(f.table);
  j["pareto"] = Json::array();
  for (const auto& [c1, c2] : f.pareto) j["pareto"].push_back({{"C1", num(c1)}, {"C2", num(c2)}});
  return j;
}

Json band_json(const HkRatioReport& r) {
  auto witness = [](const HkWitness& w) {
    return Json{{"t", w.t}, {"x", w.x}, {"y", w.y}, {"p", w.p}, {"q", w.q}, {"ratio", num(w.ratio)}};
  };
  return {{"t_min", r.t_min},
          {"t_max", r.t_max},
          {"times", r.times},
          {"inf_ratio", num(r.inf_ratio)},
          {"sup_ratio", num(r.sup_ratio)},
          {"inf_witness", witness(r.inf_witness)},
          {"sup_witness", witness(r.sup_witness)},
          {"log_width", num(r.log_width)},
          {"pairs", r.pairs},
          {"excluded", r.excluded},
          {"min_p", r.min_p},
          {"positive_finite", r.positive_finite()}};
}

Json constants_json(const LevelReport& L) {
  Json j;
  j["doubling.c1"] = num(L.doubling.c1);
  j["doubling.d1"] = num(L.doubling.d1);
  j["ahlfors.c_domain"] = num(L.ahlfors.c_domain);
  j["kernel.jphi.C1"] = num(L.jphi.C1);
  j["kernel.jphi.C2"] = num(L.jphi.C2);
  j["kernel.tail"] = num(L.tail.c);
  if (!L.full_domain) {
    j["partition.eta_max_ratio"] = num(L.partition.eta_max_ratio);
    j["partition.psi_max_energy_ratio"] = num(L.partition.psi_max_energy_ratio);
    j["partition.mass_C1"] = num(L.mass_C1);
    j["partition.mass_C2"] = num(L.mass_C2);
    j["partition.mass_C3"] = num(L.mass_C3);
  }
  for (const auto& [name, t] : extension_tables(L)) j[name] = num(t->constant);
  j["extension.energy"] = num(L.energy.constant);
  if (L.heat_status == "ok") {
    j["heat.ambient.log_width"] = num(L.main.ambient.log_width);
    j["heat.reflected.log_width"] = num(L.main.reflected.log_width);
    j["heat.kappa"] = num(L.main.kappa);
  }
  if (L.csj_run) {
    j["csj.csjb.ray"] = num(L.csjb.ray());
    j["csj.composite.ray"] = num(L.csj.ray());
    j["csj.composite.K1"] = num(L.max_K1);
    j["csj.composite.K2"] = num(L.max_K2);
    j["csj.reflected.ray"] = num(L.reflected.reflected.ray());
    j["csj.reflected.C3"] = num(L.reflected.C3);
    j["csj.reflected.C4"] = num(L.reflected.C4);
  }
  return j;
}

Json level_json(const LevelReport& L) {
  Json j;
  j["resolution"] = L.resolution;
  j["instance"] = L.instance;
  j["points"] = L.points;
  j["domain_points"] = L.domain_points;
  j["full_domain"] = L.full_domain;
  const auto& d = L.doubling;
  j["doubling"] = {{"c1", num(d.c1)},
                   {"d1", num(d.d1)},
                   {"c1_witness", {{"x", d.c1_witness.x}, {"r", d.c1_witness.r}, {"R", d.c1_witness.big_r}}},
                   {"doubling_constant", num(d.doubling_constant)},
                   {"qrvd_lambda0", d.qrvd_lambda0},
                   {"qrvd_C", num(d.qrvd_C)},
                   {"vd1_constant", num(d.vd1_constant)},
                   {"vd1_holds", d.vd1_holds}};
  j["ahlfors"] = {{"c_domain", num(L.ahlfors.c_domain)},
                  {"witness", {{"x", L.ahlfors.witness_x}, {"r", L.ahlfors.witness_r}}},
                  {"boundary_mass_null", L.ahlfors.boundary_mass_null}};
  j["kernel"] = {{"jphi", {{"C1", num(L.jphi.C1)}, {"C2", num(L.jphi.C2)},
                           {"lo", {L.jphi.lo_x, L.jphi.lo_y}}, {"hi", {L.jphi.hi_x, L.jphi.hi_y}}}},
                 {"tail", {{"c", num(L.tail.c)}, {"x", L.tail.witness_x}, {"r", L.tail.witness_r},
                           {"finite", L.tail.finite}}}};
  if (!L.full_domain) {
    const auto& g = L.geometry;
    Json dil = Json::array();
    for (const auto& s : g.dilations) {
      dil.push_back({{"lambda", s.lambda},
                     {"min_radius_ratio", s.min_radius_ratio},
                     {"max_radius_ratio", s.max_radius_ratio},
                     {"max_neighbors", s.max_neighbors},
                     {"max_overlap", s.max_overlap},
                     {"far_count", s.far_count}});
    }
    j["whitney"] = {{"balls", L.balls},           {"lambda_size", L.lambda_size},
                    {"disjoint", g.disjoint},     {"radius_identity", g.radius_identity},
                    {"covering", g.covering},     {"comparability", g.comparability},
                    {"distance_sandwich", g.distance_sandwich},
                    {"lambda_covers_near_field", g.lambda_covers_near_field},
                    {"dilations", dil}};
    const auto& p = L.partition;
    const auto& m = L.mass;
    j["partition"] = {{"eta_max_ratio", num(p.eta_max_ratio)},
                      {"psi_max_energy_ratio", num(p.psi_max_energy_ratio)},
                      {"max_sum_error", p.max_sum_error},
                      {"max_lambda_sum_error", p.max_lambda_sum_error},
                      {"min_far_lambda_sum", p.min_far_lambda_sum},
                      {"sums_to_one", p.sums_to_one},
                      {"lambda_sums_to_one", p.lambda_sums_to_one},
                      {"supports_ok", p.supports_ok},
                      {"range_ok", p.range_ok},
                      {"energy_chain_ok", p.energy_chain_ok},
                      {"mass", {{"C1", L.mass_C1}, {"C2", L.mass_C2}, {"C3", L.mass_C3},
                                {"C_stated", m.C_stated}, {"C_corrected", m.C_corrected},
                                {"comparable_stated", m.mass_comparable_stated},
                                {"comparable_corrected", m.mass_comparable_corrected},
                                {"min_mass_ratio", m.min_mass_ratio},
                                {"max_mass_ratio", m.max_mass_ratio},
                                {"min_mass_ball", m.min_mass_ball},
                                {"max_sum", m.max_sum}}}};
    j["containment"] = {{"seven", L.containment.seven},
                        {"fourteen", L.containment.fourteen},
                        {"worst_seven", L.containment.worst_seven},
                        {"worst_fourteen", L.containment.worst_fourteen},
                        {"pairs", L.containment.pairs}};
    j["pointwise"] = {{"min_ninth", num(L.pointwise.min_ninth)},
                      {"min_two_fifths", num(L.pointwise.min_two_fifths)},
                      {"min_five_fourteenths", num(L.pointwise.min_five_fourteenths)},
                      {"checks", L.pointwise.checks}};
  }
  Json ext;
  for (const auto& [name, t] : extension_tables(L)) ext[std::string(name).substr(10)] = table_json(*t);
  ext["energy"] = table_json(L.energy);
  ext["max_additivity_error"] = L.split.max_additivity_error;
  j["extension"] = ext;
  j["functions"] = L.functions;

  Json heat = {{"status", L.heat_status}};
  if (L.heat_status == "ok") {
    const auto& s = L.semigroup;
    heat["semigroup"] = {{"symmetry", s.symmetry},
                         {"conservation", s.conservation},
                         {"min_p", s.min_p},
                         {"chapman_kolmogorov", s.chapman_kolmogorov},
                         {"ok", s.ok()}};
    heat["c_domain"] = L.main.c_domain;
    heat["ambient"] = band_json(L.main.ambient);
    heat["reflected"] = band_json(L.main.reflected);
    heat["kappa"] = num(L.main.kappa);
  }
  j["heat"] = heat;

  if (L.csj_run) {
    j["csj"] = {{"csjb", fit_json(L.csjb)},
                {"composite", fit_json(L.csj)},
                {"certificates", L.certificates},
                {"certificates_held", L.certificates_held},
                {"max_K1", num(L.max_K1)},
                {"max_K2", num(L.max_K2)},
                {"reflected", {{"ambient", fit_json(L.reflected.ambient)},
                               {"reflected", fit_json(L.reflected.reflected)},
                               {"C3", num(L.reflected.C3)},
                               {"C4", num(L.reflected.C4)},
                               {"chain_bound", num(L.reflected.chain_bound)},
                               {"monotone", L.reflected.monotone},
                               {"chain_ok", L.reflected.chain_ok}}}};
  }
  j["constants"] = constants_json(L);
  return j;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  out << text;
  if (!out.flush()) throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
}

void make_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw Error(ErrorKind::IoFailure, "cannot create " + dir.string());
  }
}

std::string probe_csv(const FittedTable* t) {
  std::string s = "x0,r,lhs,rhs,ratio\n";
  if (!t) return s;
  for (const auto& row : t->rows) {
    s += std::to_string(row.x0) + "," + fmt(row.r) + "," + fmt(row.lhs) + "," + fmt(row.rhs) +
         "," + fmt(row.ratio) + "\n";
  }
  return s;
}

std::string hk_csv(const HkRatioReport* r) {
  std::string s = "t,x,y,p,q,ratio\n";
  if (!r) return s;
  for (const auto& w : r->samples) {
    s += fmt(w.t) + "," + std::to_string(w.x) + "," + std::to_string(w.y) + "," + fmt(w.p) + "," +
         fmt(w.q) + "," + fmt(w.ratio) + "\n";
  }
  return s;
}

void write_level_csvs(const LevelReport* L, const std::filesystem::path& dir) {
  const bool heat = L && L->heat_status == "ok";
  const bool csj = L && L->csj_run;
  write_file(dir / "hk_ambient.csv", hk_csv(heat ? &L->main.ambient : nullptr));
  write_file(dir / "hk_reflected.csv", hk_csv(heat ? &L->main.reflected : nullptr));
  write_file(dir / "extension_l2.csv", probe_csv(L ? &L->l2 : nullptr));
  write_file(dir / "extension_near.csv", probe_csv(L ? &L->split.near : nullptr));
  write_file(dir / "extension_off.csv", probe_csv(L ? &L->split.off : nullptr));
  write_file(dir / "extension_cross.csv", probe_csv(L ? &L->split.cross : nullptr));
  write_file(dir / "extension_combined.csv", probe_csv(L ? &L->split.combined : nullptr));
  write_file(dir / "csjb.csv", probe_csv(csj ? &L->csjb.table : nullptr));
  write_file(dir / "csj_composite.csv", probe_csv(csj ? &L->csj.table : nullptr));
  write_file(dir / "csj_reflected.csv", probe_csv(csj ? &L->reflected.reflected.table : nullptr));
}

}  // namespace

std::string bundle_to_json_text(const ReportBundle& b) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["config"] = Json::parse(b.config.to_json_text());
  Json levels = Json::array();
  for (const auto& L : b.levels) levels.push_back(level_json(L));
  j["levels"] = levels;
  Json checks = Json::array();
  for (const auto& c : b.checks) {
    checks.push_back({{"name", c.name},
                      {"scope", c.scope},
                      {"value", num(c.value)},
                      {"threshold", num(c.threshold)},
                      {"pass", c.pass}});
  }
  j["checks"] = checks;
  j["passed"] = b.passed();
  return j.dump(2) + "\n";
}

void emit_reports(const ReportBundle& bundle, const std::filesystem::path& dir) {
  make_dir(dir);
  write_file(dir / "report.json", bundle_to_json_text(bundle));
  write_file(dir / "config.json", bundle.config.to_json_text());
}

void emit_plot_data(const ReportBundle& bundle, const std::filesystem::path& dir) {
  make_dir(dir);
  write_level_csvs(bundle.levels.empty() ? nullptr : &bundle.levels.back(), dir);
  for (const auto& L : bundle.levels) {
    const auto sub = dir / "levels" / std::to_string(L.resolution);
    make_dir(sub);
    write_level_csvs(&L, sub);
  }
}

// ---------------------------------------------------------------------------
// Comparison

bool CompareResult::pass() const {
  return std::all_of(entries.begin(), entries.end(), [](const CompareEntry& e) { return e.pass; });
}

namespace {

Json load_report(const std::filesystem::path& p) {
  const auto file = std::filesystem::is_directory(p) ? p / "report.json" : p;
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot read " + file.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    config_error(file.string() + ": " + e.what());
  }
  const int version = j.value("schema_version", 0);
  if (version < 1 || version > kSchemaVersion) {
    config_error(file.string() + ": unsupported schema_version " + std::to_string(version));
  }
  if (!j.contains("levels") || !j["levels"].is_array() || j["levels"].empty()) {
    config_error(file.string() + ": no levels to compare");
  }
  return j;
}

double as_number(const Json& v) {
  return v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
}

}  // namespace

CompareResult compare_bundles(const std::filesystem::path& a, const std::filesystem::path& b,
                              double threshold) {
  const Json ja = load_report(a);
  const Json jb = load_report(b);
  const Json& ca = ja["levels"].back()["constants"];
  const Json& cb = jb["levels"].back()["constants"];
  CompareResult res;
  res.threshold = threshold;
  for (auto it = ca.begin(); it != ca.end(); ++it) {
    if (!cb.contains(it.key())) continue;
    CompareEntry e;
    e.key = it.key();
    e.a = as_number(it.value());
    e.b = as_number(cb[it.key()]);
    e.factor = factor(e.a, e.b);
    e.pass = e.factor <= threshold;
    res.entries.push_back(e);
  }
  return res;
}

}  // namespace reflekt
