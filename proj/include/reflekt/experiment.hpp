#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "reflekt/csj.hpp"
#include "reflekt/extension.hpp"
#include "reflekt/generators.hpp"
#include "reflekt/heat.hpp"
#include "reflekt/kernel.hpp"
#include "reflekt/partition.hpp"
#include "reflekt/whitney.hpp"

namespace reflekt {

inline constexpr int kSchemaVersion = 1;

struct ScaleSpec {
  std::string kind = "power";  // "power" or "two_regime"
  double beta = 1.5;
  double beta_low = 1.0;
  double beta_high = 1.5;
  double crossover = 0.1;

  ScaleFunction make() const;
  bool operator==(const ScaleSpec&) const = default;
};

struct Thresholds {
  double refinement_factor = 2.0;  // fitted constants across consecutive refinements
  double sweep_factor = 4.0;       // per-radius constants across the dyadic sweep
  double kappa_max = 3.0;
  double kappa_tolerance = 0.5;    // |kappa' / kappa - 1| under one refinement
  double min_c_domain = 0.05;
  bool operator==(const Thresholds&) const = default;
};

struct ExperimentConfig {
  std::string generator = "path_interval";
  // Resolutions (prefractal levels for carpet_prefractal), coarse to fine.
  std::vector<std::size_t> refinements = {101, 201};
  bool full_domain = false;
  ScaleSpec scale;
  double normalization = 1.0;
  std::size_t centers = 64;      // extension probe centers per level
  std::size_t csj_centers = 4;   // CSJ probe centers per level
  std::size_t hk_pairs = 64;     // heat kernel pairs kept for plot data
  std::size_t time_points = 6;
  double window_low = 2.0;
  double window_high = 0.25;
  bool heat = true;
  bool csj = true;
  Thresholds thresholds;
  std::uint64_t seed = 1;
  std::string output_dir = "reflekt_out";
  std::size_t max_points = kDefaultMaxPoints;

  bool operator==(const ExperimentConfig&) const = default;

  /// Throws ConfigError on malformed documents or values.
  static ExperimentConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
  /// Value checks plus generator name and point counts: ConfigError, UnknownGenerator or
  /// ResolutionTooLarge, all before any instance is built.
  void validate() const;
  GeneratorParams params(std::size_t level) const;
};

/// Reads and validates a configuration file; IoFailure or ConfigError.
ExperimentConfig load_config(const std::filesystem::path& path);

struct PartitionSummary {
  double eta_max_ratio = 0.0;
  double psi_max_energy_ratio = 0.0;
  double max_sum_error = 0.0;
  double max_lambda_sum_error = 0.0;
  double min_far_lambda_sum = 1.0;
  bool sums_to_one = true;
  bool lambda_sums_to_one = true;
  bool supports_ok = true;
  bool range_ok = true;
  bool energy_chain_ok = true;
};

struct LevelReport {
  std::size_t resolution = 0;
  std::string instance;
  std::size_t points = 0;
  std::size_t domain_points = 0;
  bool full_domain = false;
  std::vector<std::string> functions;  // probe family names, indexed by fn

  DoublingReport doubling;
  AhlforsReport ahlfors;
  JphiFit jphi;
  TailReport tail;

  // Whitney and partition data; empty when D = X.
  std::size_t balls = 0;
  std::size_t lambda_size = 0;
  GeometryReport geometry;
  PartitionSummary partition;
  double mass_C1 = 1.0, mass_C2 = 1.0, mass_C3 = 1.0;
  MassCertificate mass;
  ContainmentReport containment;
  PointwiseReport pointwise;

  FittedTable l2;
  EnergySplitReport split;
  FittedTable energy;  // E(Eu) + ||Eu||^2 against the reflected counterpart, one row per function

  bool heat_run = false;
  std::string heat_status;  // "ok", "skipped" or the error kind that stopped it
  SemigroupReport semigroup;
  MainTheoremReport main;

  bool csj_run = false;
  CsjFit csjb;
  CsjFit csj;
  std::size_t certificates = 0;
  std::size_t certificates_held = 0;
  double max_K1 = 0.0;
  double max_K2 = 0.0;
  ReflectedCsjReport reflected;
};

struct Check {
  std::string name;
  std::string scope;  // resolution or "a->b" for refinement checks
  double value = 0.0;
  double threshold = 0.0;
  bool pass = true;
};

struct ReportBundle {
  ExperimentConfig config;
  std::vector<LevelReport> levels;
  std::vector<Check> checks;
  bool passed() const;
};

/// Runs every level in pipeline order and records the threshold checks. Exact invariants
/// throw InvariantViolation naming the module, the operation and a witness.
ReportBundle run_experiment(const ExperimentConfig& config);

/// Threshold checks for the levels already in the bundle.
std::vector<Check> stability_checks(const ExperimentConfig& config,
                                    const std::vector<LevelReport>& levels);

/// report.json with a schema version; deterministic for a fixed bundle.
std::string bundle_to_json_text(const ReportBundle& bundle);
void emit_reports(const ReportBundle& bundle, const std::filesystem::path& dir);
/// CSV tables: hk_ambient.csv and hk_reflected.csv with t,x,y,p,q,ratio, and one
/// x0,r,lhs,rhs,ratio file per extension and CSJ table. The top-level files hold the finest
/// level (header only when the bundle is empty or the stage did not run); levels/<res>/
/// holds the same files for every level.
void emit_plot_data(const ReportBundle& bundle, const std::filesystem::path& dir);

struct CompareEntry {
  std::string key;
  double a = 0.0;
  double b = 0.0;
  double factor = 1.0;  // max / min of the two, 1 when both vanish
  bool pass = true;
};

struct CompareResult {
  std::vector<CompareEntry> entries;
  double threshold = 2.0;
  bool pass() const;
};

/// Fitted constants of the finest level in each report.json, matched by key.
CompareResult compare_bundles(const std::filesystem::path& a, const std::filesystem::path& b,
                              double threshold = 2.0);

}  // namespace reflekt
