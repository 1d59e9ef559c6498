#pragma once

// Experiment configuration: JSON ingestion with fail-closed parsing, kind-specific
// defaults and command-line overrides.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace gnls::harness {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

enum class ExperimentKind { transform_check, evolve, final_state, ivp_scatter, failure_scan };

/// Throws ConfigError on an unknown name.
ExperimentKind parse_kind(std::string_view name);
const char* to_string(ExperimentKind kind);

struct GraphSpec {
  int edges = 3;
  double length = 64.0;
  int grid = 4096;
};

/// Initial data (space grid) or final data (frequency grid), by preset:
///   gaussian:      amplitude exp(-((y - center)/width)^2) (1 + tilt c_j y / width) on the
///                  listed edges, c_j = j - (n-1)/2 (sum zero), all edges when the list is empty;
///   bump:          amplitude exp(-((y - center)/width)^2) on a single edge (edges[0], default 0);
///   discontinuous: amplitude exp(-(y/width)^2) (1 + j), a vertex-discontinuous control;
///   file:          samples read from `file`.
/// sup_norm > 0 rescales the result to that sup norm.
struct DataSpec {
  std::string preset = "gaussian";
  double center = 0.0;
  double width = 2.0;
  double amplitude = 0.05;
  double tilt = 0.2;
  std::vector<int> edges;
  double sup_norm = 0.0;
  std::string file;
};

struct EvolutionSpec {
  bool nonlinear = true;
  int lambda = 1;
  double power = 2.0;
  double t_end = 100.0;
  double dt = 0.01;
  std::string growth = "fixed";  // fixed | proportional
  double max_dt = 0.0;           // 0: no cap
  int snapshots_per_octave = 8;  // geometric snapshots from t = 1
  bool abort_on_support_breach = false;
};

struct FinalStateSpec {
  double alpha = 0.3;
  double T = 20.0;
  double T_max = 320.0;
  int per_octave = 16;
  int max_iters = 8;
  double tol = 1e-10;
  bool nonlinear = true;
  std::vector<double> calibration_scales;  // empty: no calibration sweep
  std::vector<double> calibration_starts;
};

struct FailureSpec {
  std::vector<double> powers{1.5, 2.0, 3.0};
  double T = 10.0;
  double t_ref = 0.0;  // 0: geometric mean of T and t_end
};

struct TransformCheckSpec {
  std::vector<int> edge_counts{2, 3, 5};
  int bank_size = 24;
  int slow_grid = 256;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::evolve;
  GraphSpec graph;
  DataSpec data;
  EvolutionSpec evolution;
  std::array<double, 2> fit_window{1.0, 100.0};
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  FinalStateSpec final_state;
  FailureSpec failure;
  TransformCheckSpec transform_check;
};

/// Defaults sized for the kind's headline experiment.
ExperimentConfig default_config(ExperimentKind kind);

/// Overlays a JSON document on default_config(kind). Unknown keys, wrong types, a
/// schema_version other than kSchemaVersion or a "kind" different from `kind` throw
/// ConfigError. Relative data file paths resolve against base_dir.
ExperimentConfig parse_config(const nlohmann::json& doc, ExperimentKind kind,
                              const std::filesystem::path& base_dir = {});

/// Reads and parses a config file; I/O and JSON syntax errors throw ConfigError.
ExperimentConfig load_config(const std::filesystem::path& file, ExperimentKind kind);

struct Overrides {
  std::optional<int> edges;
  std::optional<int> grid;
  std::optional<double> length;
  std::optional<int> lambda;
  std::optional<double> power;
  std::optional<double> alpha;
  std::optional<double> tmax;
  std::optional<std::string> out;
};

/// --tmax sets T_max for final-state and evolution.t_end otherwise; --power replaces the
/// failure-scan power list; --edges replaces the transform-check edge counts.
void apply_overrides(ExperimentConfig& cfg, const Overrides& o);

/// Range and consistency checks; throws ConfigError.
void validate(const ExperimentConfig& cfg);

/// Canonical form (every field, fixed key order) used for provenance and hashing.
nlohmann::json to_json(const ExperimentConfig& cfg);

/// FNV-1a 64 of the canonical dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

/// Field documentation plus per-kind defaults.
nlohmann::json describe_schema();

}  // namespace gnls::harness
