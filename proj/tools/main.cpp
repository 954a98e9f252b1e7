#include <cstdio>
#include <iostream>

#include <CLI11.hpp>
#include <omp.h>

#include "cli.hpp"
#include "rossbytrap/errors.hpp"

using namespace rossbytrap;

namespace {

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Config: return 2;
    case ErrorCategory::Compute: return 3;
    case ErrorCategory::Io: return 4;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rossby-wave trapping experiments"};
  app.require_subcommand(1);

  std::optional<std::string> config, out, eps_list;
  std::optional<int> threads;
  std::vector<std::string> runs;

  for (const std::string& name : cli::kScenarios) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--out", out, "output directory")->envname("ROSSBYTRAP_OUT");
    sub->add_option("--threads", threads, "OpenMP threads (0: runtime default)")->envname("ROSSBYTRAP_THREADS");
    if (name == "report") {
      sub->add_option("runs", runs, "run directories to compare");
      continue;
    }
    sub->add_option("--config", config, "JSON configuration file")->envname("ROSSBYTRAP_CONFIG");
    sub->add_option("--epsilon-list", eps_list, "comma-separated epsilons, fractions allowed")
        ->envname("ROSSBYTRAP_EPSILON_LIST");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string scenario = app.get_subcommands().front()->get_name();

  try {
    if (threads && *threads < 0) throw ConfigError("--threads must be >= 0");
    if (scenario == "report") {
      if (!out) throw ConfigError("report needs --out");
      if (threads && *threads > 0) omp_set_num_threads(*threads);
      cli::run_report(runs, *out);
      return 0;
    }
    const cli::RunConfig cfg = cli::load_config(config, scenario, {out, eps_list, threads});
    if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
    cli::run_scenario(cfg);
    return 0;
  } catch (const Error& e) {
    std::cerr << "rossbytrap " << scenario << ": " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "rossbytrap " << scenario << ": IoError: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "rossbytrap " << scenario << ": " << e.what() << "\n";
    return 3;
  }
}
