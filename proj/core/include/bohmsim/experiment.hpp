#pragma once

#include <string>
#include <vector>

namespace bohmsim {

// Declarative experiment runner: a JSON config names a scenario and its
// parameters; outputs (manifest, CSVs, summary.json) land in out_dir.  All
// randomness flows from the two named seeds, so identical config+seeds give
// byte-identical outputs (timestamps live only in the manifest).

struct RunOptions {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;  // dotted.path=json-value
  int workers = 0;                     // 0: $BOHMSIM_WORKERS, else 1
};

// Validates, runs, writes outputs.  Returns 0 on success; on failure
// returns nonzero and, if error is non-null, stores a diagnostic.  Nothing
// is written unless validation passes.
int run_experiment(const RunOptions& options, std::string* error = nullptr);

struct VerifyIssue {
  bool fatal = false;
  std::string message;
};

struct VerifyReport {
  std::vector<VerifyIssue> issues;
  bool ok() const {
    for (const auto& issue : issues)
      if (issue.fatal) return false;
    return true;
  }
};

// Schema and physics sanity checks (packet support, step-accuracy bound,
// absorber coverage) without running anything.
VerifyReport verify_experiment(const std::string& config_path,
                               const std::vector<std::string>& overrides = {});

std::vector<std::string> list_scenarios();

// Run from an in-memory config (JSON text); returns the summary JSON text.
// Used by tests and by run_experiment itself.
std::string run_scenario_json(const std::string& config_json, const std::string& out_dir,
                              int workers = 1);

}  // namespace bohmsim
