// Command-line driver: runs one experiment and writes its tables and figures.
#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "v2v/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"V2V mmWave/sub-THz channel-access simulator"};
  v2v::RunManifest m;
  std::string experiment;
  std::uint64_t seed = 0;
  bool no_plots = false;
  std::string out;

  app.add_option("--config", m.config_path, "YAML scenario file (defaults when omitted)");
  app.add_option("--experiment", experiment, "fig4, fig5 or single (overrides the config)");
  app.add_option("--out", out, "Output directory (default: $V2V_OUT_DIR, else ./results)");
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the config)");
  app.add_option("--jobs", m.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--no-plots", no_plots, "Skip the SVG figure");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? v2v::kExitOk : v2v::kExitConfig;
  }

  if (!experiment.empty()) m.experiment = experiment;
  if (*seed_opt) m.seed = seed;
  m.emit_plots = !no_plots;
  if (!out.empty()) {
    m.output_dir = out;
  } else if (const char* env = std::getenv("V2V_OUT_DIR"); env && *env) {
    m.output_dir = env;
  }
  return v2v::run(m, std::cerr);
}
