#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cemwave/diagnostics.hpp"
#include "cemwave/integrators.hpp"
#include "cemwave/media.hpp"
#include "cemwave/spaces.hpp"
#include "cemwave/stability.hpp"

namespace cemwave {

struct MediumConfig {
  std::optional<std::filesystem::path> field_file;  // CSV coefficient grid
  std::optional<GeometrySpec> geometry;             // synthesized channels
  std::optional<double> contrast;                   // overrides the geometry's contrast
};

/// Which space a single-space scheme runs in.
enum class SchemeSpace { full, v1, fine };

struct SchemeEntry {
  std::string name;  // output label, defaults to the scheme kind
  SchemeKind kind = SchemeKind::implicit;
  double tau = 0.006;
  double final_time = 0.6;
  double sigma = 0.25;
  double omega = 1.0;
  SchemeSpace space = SchemeSpace::full;
};

struct ReferenceConfig {
  bool enabled = true;
  double tau = 1e-4;
  /// Divide tau by the smallest integer that puts it below 0.95 of the
  /// fine-grid leapfrog limit.
  bool auto_refine = true;
};

struct LumpingConfig {
  double threshold = 1.0;
  Index count = 5;
};

struct ExperimentConfig {
  Index n_fine = 100;
  Index n_coarse = 10;
  MediumConfig medium;
  std::optional<SourceConfig> source = SourceConfig{};
  SpaceParams spaces;
  bool orthogonalize = false;
  LumpingConfig lumping;
  std::vector<SchemeEntry> schemes;
  ReferenceConfig reference;
  std::vector<double> snapshot_times{0.3, 0.6};
  double window_start = 0.2;
  double window_end = 0.6;
  CertifyMode split_certification = CertifyMode::nonortho;
  bool parallel = true;
  int threads = 0;  // 0 = OpenMP default
};

/// Validates while parsing; errors name the offending field path
/// (e.g. "schemes[1].tau"). Relative file paths resolve against `base_dir`.
ExperimentConfig parse_experiment_config(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

CoefficientField build_medium(const ExperimentConfig& config);

struct SchemeSummary {
  std::string name;
  std::string kind;
  double tau = 0.0;
  long steps = 0;
  Index dofs = 0;
  double energy_drift = 0.0;  // NaN when a source drives the run
  bool certified = true;
  double tau_max = 0.0;
  /// Empty when the reference is disabled.
  ErrorSeries errors;
};

struct ExperimentSummary {
  StabilityInputs inputs;
  Index dim1 = 0;
  Index dim2 = 0;
  double reference_tau = 0.0;
  std::vector<SchemeSummary> schemes;
};

/// Builds the medium and spaces, certifies, runs every scheme (and the
/// reference), and writes into `out_dir`:
///   stability.json, summary.json, energy_<name>.csv, errors_<name>.csv,
///   errors_<name>_window.csv, snapshot_<name>_t<time>.{csv,pgm}.
/// Throws InstabilityError if a scheme blows up.
ExperimentSummary run_experiment(const ExperimentConfig& config,
                                 const std::filesystem::path& out_dir);

/// Stability constants and per-scheme certification only; writes stability.json.
nlohmann::json certify_experiment(const ExperimentConfig& config,
                                  const std::filesystem::path& out_dir);

enum class SweepAxis { contrast, tau, J, layers };
SweepAxis sweep_axis_from_string(const std::string& name);
std::string to_string(SweepAxis axis);

ExperimentConfig with_axis_value(const ExperimentConfig& config, SweepAxis axis, double value);

struct SweepRow {
  double value = 0.0;
  StabilityInputs inputs;
  double tau_max_split = 0.0;
  double tau_max_explicit = 0.0;
  double max_energy_drift = 0.0;  // NaN (empty CSV cell) when forced
  double final_l2 = 0.0;
  double final_energy = 0.0;
  std::string status;  // "ok", "unstable", "solver_failure"
};

/// One run_experiment per value in out_dir/<axis>_<index>/, then
/// out_dir/sweep_<axis>.csv with one row per value. Unstable points are
/// recorded with status "unstable" and the sweep continues.
std::vector<SweepRow> sweep(const ExperimentConfig& config, SweepAxis axis,
                            const std::vector<double>& values, const std::filesystem::path& out_dir);

}  // namespace cemwave
