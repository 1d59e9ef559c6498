#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "gnls/errors.hpp"
#include "gnls/harness/config.hpp"
#include "gnls/harness/experiments.hpp"

using namespace gnls::harness;

namespace {

int config_error(const std::string& message) {
  const nlohmann::json e = {{"error", {{"type", "config_error"}, {"message", message}, {"exit_code", kExitConfigError}}}};
  std::cerr << e.dump() << '\n';
  return kExitConfigError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear Schrodinger experiments on star graphs"};
  std::string kind_name, config_file;
  Overrides o;
  bool version = false, schema = false;
  app.add_option("kind", kind_name, "transform-check | evolve | final-state | ivp-scatter | failure-scan");
  app.add_option("--config", config_file, "JSON config file");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--edges", o.edges, "number of edges");
  app.add_option("--grid", o.grid, "grid intervals per edge");
  app.add_option("--length", o.length, "edge length");
  app.add_option("--lambda", o.lambda, "nonlinearity sign, +1 or -1");
  app.add_option("--power", o.power, "nonlinearity exponent");
  app.add_option("--alpha", o.alpha, "final-state weight exponent");
  app.add_option("--tmax", o.tmax, "final time (T_max for final-state)");
  app.add_flag("--version", version, "print the version and exit");
  app.add_flag("--describe-schema", schema, "print the config schema as JSON and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return config_error(e.what());
  }
  if (version) {
    std::cout << "graph-nls " << kVersion << " (config schema " << kSchemaVersion << ")\n";
    return kExitPass;
  }
  if (schema) {
    std::cout << describe_schema().dump(2) << '\n';
    return kExitPass;
  }
  if (kind_name.empty()) return config_error("missing experiment kind");
  if (config_file.empty()) return config_error("missing --config <file>");

  ExperimentConfig cfg;
  try {
    cfg = load_config(config_file, parse_kind(kind_name));
    apply_overrides(cfg, o);
  } catch (const gnls::ConfigError& e) {
    return config_error(e.what());
  }
  return execute(cfg, std::cerr);
}
