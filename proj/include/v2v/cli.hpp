#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "v2v/engine.hpp"

namespace v2v {

/// Reads a YAML scenario file. Missing keys keep their defaults; unknown keys, wrong
/// types and invalid values throw ConfigError naming the key path (e.g. "radio.bandwidth_ghz").
SimConfig parse_config(const std::string& path);
SimConfig parse_config_text(const std::string& yaml);

/// YAML text that parse_config_text() turns back into an equal SimConfig.
std::string serialize(const SimConfig& config);

/// 64-bit FNV-1a of the serialized configuration, as 16 hex digits.
std::string config_hash(const SimConfig& config);

struct RunManifest {
  /// Empty: built-in defaults.
  std::string config_path;
  std::string output_dir = "results";
  /// Overrides the experiment of the config file when set.
  std::optional<std::string> experiment;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool emit_plots = true;
};

/// Exit status of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

/// Runs the experiment and writes results.csv, provenance.txt and (unless disabled) the
/// figure file into the output directory. Errors are reported on `err`; files written
/// by a failed run are removed.
int run(const RunManifest& manifest, std::ostream& err);

/// Writes the results table. Columns: experiment, setup, sweep_value, scheme, metric,
/// mean, ci_low, ci_high, replications.
void write_results_csv(std::ostream& out, const SimConfig& config, const ExperimentResult& result);

/// SINR and spectral-efficiency panels, one series per scheme (dashed for Setup 2).
void write_figure_svg(std::ostream& out, const SimConfig& config, const ExperimentResult& result);

}  // namespace v2v
