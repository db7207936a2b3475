#include <CLI11.hpp>
#include <cstdio>
#include <string>
#include <vector>

#include "bohmsim/experiment.hpp"
#include "bohmsim/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"bohmsim — trajectory-based quantum transport and noise simulator"};
  app.set_version_flag("--version", bohmsim::version_string);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::string> overrides;
  int workers = 0;

  auto* run = app.add_subcommand("run", "Run an experiment config and write its artifacts");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--override", overrides, "Config override, path.to.key=value (repeatable)");
  run->add_option("--workers", workers,
                  "Parallel realization workers (default: $BOHMSIM_WORKERS or 1)");

  auto* verify = app.add_subcommand("verify", "Validate a config without running it");
  verify->add_option("--config", config_path, "Experiment config (JSON)")->required();
  verify->add_option("--override", overrides, "Config override, path.to.key=value (repeatable)");

  auto* list = app.add_subcommand("list-scenarios", "Print the available scenario names");

  CLI11_PARSE(app, argc, argv);

  if (list->parsed()) {
    for (const auto& name : bohmsim::list_scenarios()) std::printf("%s\n", name.c_str());
    return 0;
  }

  if (verify->parsed()) {
    const auto report = bohmsim::verify_experiment(config_path, overrides);
    for (const auto& issue : report.issues)
      std::fprintf(issue.fatal ? stderr : stdout, "%s: %s\n",
                   issue.fatal ? "error" : "warning", issue.message.c_str());
    if (report.ok()) std::printf("ok\n");
    return report.ok() ? 0 : 2;
  }

  bohmsim::RunOptions options;
  options.config_path = config_path;
  options.out_dir = out_dir;
  options.overrides = overrides;
  options.workers = workers;
  std::string error;
  const int rc = bohmsim::run_experiment(options, &error);
  if (rc != 0) std::fprintf(stderr, "error: %s\n", error.c_str());
  return rc;
}
