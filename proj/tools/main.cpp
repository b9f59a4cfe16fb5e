#include <iostream>

#include <CLI11.hpp>

#include "config.hpp"
#include "fdptomo/errors.hpp"
#include "pipeline.hpp"

using namespace fdptomo;
using namespace fdptomo::cli;

int main(int argc, char** argv) {
  CLI::App app{"Quantum state estimation by fitting homodyne data patterns"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> probes;
  app.add_option("-c,--config", config_path, "YAML experiment config (defaults if omitted)");
  app.add_option("-o,--out", out_dir, "output directory (overrides config output_dir)");
  app.add_option("-s,--seed", seed, "master seed override");
  app.add_option("-p,--probes", probes, "probe count override")->check(CLI::PositiveNumber);

  std::vector<std::string> acquire_states;
  std::vector<std::string> fit_inputs;
  std::vector<std::string> mc_inputs;
  std::optional<int> mc_trials;

  auto* calibrate = app.add_subcommand("calibrate", "measure the probe ladder");
  auto* acquire = app.add_subcommand("acquire", "measure unknown states");
  acquire->add_option("states", acquire_states,
                      "vacuum | herald:k | fock:n | phav:alpha | file:path (default: config)");
  auto* fit = app.add_subcommand("fit", "FDP and ML fits of acquired states");
  fit->add_option("inputs", fit_inputs, "state selectors, state_*.json or pattern CSV files");
  auto* mc = app.add_subcommand("mc", "Monte Carlo error propagation");
  mc->add_option("inputs", mc_inputs, "state selectors, state_*.json or pattern CSV files");
  mc->add_option("-n,--trials", mc_trials, "number of trials")->check(CLI::Range(2, 1000000));
  auto* report = app.add_subcommand("report", "consolidated report and threshold check");
  auto* run = app.add_subcommand("run", "calibrate, acquire, fit and report in one go");
  auto* defaults = app.add_subcommand("defaults", "print the default config");
  for (auto* sub : {calibrate, acquire, fit, mc, report, run, defaults}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (defaults->parsed()) {
      std::cout << emit_config(default_config());
      return kExitOk;
    }
    ExperimentConfig config = config_path.empty() ? default_config() : load_config(config_path);
    if (seed) config.seed = *seed;
    if (probes) config.probes.count = *probes;
    if (mc_trials) config.mc.spec.n_trials = *mc_trials;
    config.validate();
    const fs::path out = out_dir.empty() ? fs::path(config.output_dir) : fs::path(out_dir);

    if (calibrate->parsed()) cmd_calibrate(config, out);
    if (acquire->parsed()) cmd_acquire(config, out, acquire_states);
    if (fit->parsed()) cmd_fit(config, out, fit_inputs);
    if (mc->parsed()) cmd_mc(config, out, mc_inputs);
    if (report->parsed()) return cmd_report(config, out);
    if (run->parsed()) {
      cmd_calibrate(config, out);
      cmd_acquire(config, out, {});
      cmd_fit(config, out, {});
      return cmd_report(config, out);
    }
    return kExitOk;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}
