#pragma once

// Experiment pipelines behind the graph-nls command line. Each run produces a
// JSON report (config, provenance, verdicts, results) and a tab-separated series.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gnls/fit.hpp"
#include "gnls/harness/config.hpp"
#include "gnls/scattering.hpp"

namespace gnls::harness {

enum ExitCode : int { kExitPass = 0, kExitVerdictFail = 1, kExitConfigError = 2, kExitNumericalAbort = 3 };

// Pinned tolerances.
inline constexpr double kParsevalTol = 1e-10;
inline constexpr double kRoundTripTol = 1e-8;
inline constexpr double kCommutationTol = 1e-6;
inline constexpr double kFastSlowTol = 1e-12;
inline constexpr double kDecaySlopeLo = -0.55;
inline constexpr double kDecaySlopeHi = -0.45;
inline constexpr double kDecayR2 = 0.99;
inline constexpr double kAmplitudeRatio = 3.0;
inline constexpr double kMassDriftRate = 1e-8;  // relative mass drift per unit time
inline constexpr double kKirchhoffTol = 1e-6;
inline constexpr double kGaugeTol = 1e-12;
inline constexpr double kFailureMassTol = 1e-8;
inline constexpr double kBoundedSlope = 0.02;
inline constexpr double kRateImprovementSlack = 0.05;
inline constexpr double kLinftyAlpha = 0.2;

struct RunOutput {
  nlohmann::json report;
  std::string series;  // tab-separated, one header line
  std::vector<Verdict> verdicts;

  bool pass() const;
};

/// Samples a data preset on the space (initial data) or frequency (final data) grid.
/// Throws ConfigError for unreadable or mis-shaped sample files.
template <Domain D>
Field<D> make_data(const DataSpec& spec, const StarGraph& graph);

/// Vertex-continuous smooth functions with random complex amplitudes: a common
/// Gaussian at the vertex plus one modulated bump per edge away from it. The
/// generator uses raw 64-bit draws only, so the bank is identical on every platform.
std::vector<GraphFunction> smooth_bank(const StarGraph& graph, int count, std::uint64_t seed);

/// Runs the pipeline for cfg.kind. Library errors propagate.
RunOutput run_experiment(const ExperimentConfig& cfg);

/// validate + run_experiment + write report.json and series.tsv to cfg.output_dir.
/// Errors become an error record on `err` (and error.json when the directory is
/// writable) and the matching exit code.
int execute(const ExperimentConfig& cfg, std::ostream& err);

nlohmann::json to_json(const Verdict& v);
nlohmann::json to_json(const FitResult& f);

/// Fixed-format number used in every series file.
std::string format_number(double x);

}  // namespace gnls::harness
