// Command line front end: builds a configuration from defaults, an optional
// file and key=value overrides, then validates it or runs the experiment and
// exports the results. Exit codes: 0 success, 1 run or validation failure,
// 2 usage error.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "twistlab/config.hpp"
#include "twistlab/experiments.hpp"
#include "twistlab/results.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string experiment;
  std::string out;
  std::vector<std::string> sets;
  long long seed = -1;
  int threads = 0;
  bool refine = false;
};

void attach_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("-c,--config", o.config_path, "configuration file (key = value lines)")
      ->check(CLI::ExistingFile);
  cmd->add_option("-e,--experiment", o.experiment,
                  "experiment name; selects the built-in defaults when no file is given");
  cmd->add_option("--set", o.sets, "override a single key, e.g. --set grid.nz=96");
  cmd->add_option("--seed", o.seed, "random seed override");
  cmd->add_option("--threads", o.threads, "worker thread cap");
  cmd->add_flag("--refine", o.refine, "also run the refined resolution where supported");
}

twistlab::ExperimentConfig assemble(const CommonOpts& o) {
  twistlab::ExperimentConfig cfg;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw std::runtime_error("cannot open " + o.config_path);
    cfg = twistlab::parse_config(in);
    if (!o.experiment.empty()) cfg.experiment = o.experiment;
  } else {
    cfg = twistlab::default_config(o.experiment.empty() ? "forward" : o.experiment);
  }
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set needs key=value, got '" + kv + "'");
    twistlab::set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed >= 0) cfg.seed = std::uint64_t(o.seed);
  if (o.threads > 0) cfg.threads = o.threads;
  if (o.refine) cfg.refine = true;
  if (!o.out.empty()) cfg.out = o.out;
  if (cfg.out.empty()) {
    if (const char* env = std::getenv("TWISTLAB_OUT")) cfg.out = env;
  }
  return cfg;
}

int do_validate(const CommonOpts& o) {
  const auto cfg = assemble(o);
  const auto bad = twistlab::validate_config(cfg);
  if (bad.empty()) {
    std::cout << "configuration ok (" << cfg.experiment << ")\n";
    return 0;
  }
  for (const auto& b : bad) std::cerr << "invalid: " << b << "\n";
  return 1;
}

int do_run(const CommonOpts& o) {
  auto cfg = assemble(o);
  if (cfg.out.empty()) cfg.out = "out_" + cfg.experiment;
  const auto bundle = twistlab::run_experiment(cfg);
  const auto manifest = twistlab::export_bundle(bundle, cfg.out);
  for (const auto& [k, v] : bundle.scalars) std::printf("%-22s %.10g\n", k.c_str(), v);
  std::cout << "wrote " << cfg.out << "\n";
  return 0;
}

int do_defaults(const CommonOpts& o) {
  const auto cfg =
      twistlab::default_config(o.experiment.empty() ? "forward" : o.experiment);
  std::cout << twistlab::serialize_config(cfg);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"twisted waveguide laboratory"};
  app.require_subcommand(1);

  CommonOpts run_o, val_o, def_o;
  auto* run_cmd = app.add_subcommand("run", "run an experiment and export results");
  attach_common(run_cmd, run_o);
  run_cmd->add_option("-o,--out", run_o.out,
                      "output directory (falls back to $TWISTLAB_OUT)");

  auto* val_cmd = app.add_subcommand("validate", "check a configuration");
  attach_common(val_cmd, val_o);

  auto* def_cmd = app.add_subcommand("defaults", "print built-in defaults");
  def_cmd->add_option("-e,--experiment", def_o.experiment, "experiment name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed()) return do_run(run_o);
    if (val_cmd->parsed()) return do_validate(val_o);
    if (def_cmd->parsed()) return do_defaults(def_o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
