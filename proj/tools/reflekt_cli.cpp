// reflekt: run, validate and compare verification experiments.
//
// Exit codes: 0 every check passed, 1 an invariant or threshold check failed,
// 2 the configuration (or a compared bundle) could not be used.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "reflekt/error.hpp"
#include "reflekt/experiment.hpp"

namespace {

using namespace reflekt;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

bool is_config_kind(ErrorKind k) {
  return k == ErrorKind::ConfigError || k == ErrorKind::UnknownGenerator ||
         k == ErrorKind::ResolutionTooLarge;
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> max_points;
};

// Precedence: config file, then REFLEKT_MAX_POINTS, then flags.
ExperimentConfig resolve(const std::string& path, const Overrides& o) {
  ExperimentConfig c;
  try {
    c = load_config(path);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::IoFailure) throw;
    throw Error(ErrorKind::ConfigError, e.what());
  }
  if (const char* env = std::getenv("REFLEKT_MAX_POINTS"); env && *env) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0' || v == 0) {
      throw Error(ErrorKind::ConfigError, "REFLEKT_MAX_POINTS must be a positive integer");
    }
    c.max_points = std::size_t(v);
  }
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.output_dir = *o.out;
  if (o.max_points) c.max_points = *o.max_points;
  c.validate();
  return c;
}

int cmd_run(const std::string& path, const Overrides& o) {
  const ExperimentConfig c = resolve(path, o);
  const ReportBundle b = run_experiment(c);
  emit_reports(b, c.output_dir);
  emit_plot_data(b, c.output_dir);
  std::size_t failed = 0;
  for (const auto& chk : b.checks) {
    if (chk.pass) continue;
    ++failed;
    std::printf("FAIL %-32s %-10s value %.6g threshold %.6g\n", chk.name.c_str(), chk.scope.c_str(),
                chk.value, chk.threshold);
  }
  std::printf("%zu/%zu checks passed; reports in %s\n", b.checks.size() - failed, b.checks.size(),
              c.output_dir.c_str());
  return b.passed() ? kExitPass : kExitFail;
}

int cmd_check(const std::string& path, const Overrides& o) {
  const ExperimentConfig c = resolve(path, o);
  for (std::size_t level : c.refinements) {
    std::printf("%s %zu: %zu points\n", c.generator.c_str(), level,
                generator_point_count(c.generator, c.params(level)));
  }
  std::printf("configuration ok\n");
  return kExitPass;
}

int cmd_compare(const std::string& a, const std::string& b, double threshold) {
  const CompareResult r = compare_bundles(a, b, threshold);
  for (const auto& e : r.entries) {
    std::printf("%-4s %-34s %14.6g %14.6g  x%.4g\n", e.pass ? "ok" : "DIFF", e.key.c_str(), e.a, e.b,
                e.factor);
  }
  std::printf("%s (threshold x%.4g)\n", r.pass() ? "stable" : "unstable", threshold);
  return r.pass() ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Whitney-cover extension and reflected heat kernel verification"};
  app.require_subcommand(1);

  Overrides o;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t max_points = 0;
  auto add_overrides = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Random seed for probe sampling");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--max-points", max_points, "Cap on instance size")->check(CLI::PositiveNumber);
  };

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the pipeline and write reports");
  run->add_option("config", config_path, "Configuration file")->required();
  add_overrides(run);
  auto* check = app.add_subcommand("check", "Validate a configuration without computing");
  check->add_option("config", config_path, "Configuration file")->required();
  add_overrides(check);

  std::string bundle_a, bundle_b;
  double threshold = 2.0;
  auto* compare = app.add_subcommand("compare", "Compare fitted constants of two report bundles");
  compare->add_option("a", bundle_a, "Report directory or report.json")->required();
  compare->add_option("b", bundle_b, "Report directory or report.json")->required();
  compare->add_option("--threshold", threshold, "Allowed factor between constants")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }

  for (auto* sub : {run, check}) {
    if (sub->count("--seed")) o.seed = seed;
    if (sub->count("--out")) o.out = out;
    if (sub->count("--max-points")) o.max_points = max_points;
  }

  try {
    if (*run) return cmd_run(config_path, o);
    if (*check) return cmd_check(config_path, o);
    return cmd_compare(bundle_a, bundle_b, threshold);
  } catch (const Error& e) {
    std::fprintf(stderr, "reflekt: %s\n", e.what());
    if (is_config_kind(e.kind())) return kExitConfig;
    // An unreadable bundle is a usage problem; a failed report write is not.
    if (e.kind() == ErrorKind::IoFailure && *compare) return kExitConfig;
    return kExitFail;
  }
}
