#pragma once

// Internal glue between the experiment runner and the scenario
// implementations; not installed.

#include <filesystem>
#include <functional>
#include <json.hpp>
#include <string>
#include <vector>

#include "bohmsim/experiment.hpp"

namespace bohmsim::detail {

using nlohmann::json;

using ScenarioFn = json (*)(const json& config, const std::filesystem::path& out_dir,
                            int workers);

ScenarioFn find_scenario(const std::string& name);
std::vector<std::string> scenario_names();

// Scenario-specific config validation; appends to the report.
void verify_scenario_config(const json& config, VerifyReport& report);

// Lookup helpers that throw with the JSON path in the message.
const json& require(const json& root, const std::string& dotted_path);
double require_num(const json& root, const std::string& dotted_path);
std::string require_str(const json& root, const std::string& dotted_path);
double num_or(const json& root, const std::string& dotted_path, double fallback);
std::string str_or(const json& root, const std::string& dotted_path,
                   const std::string& fallback);
bool flag_or(const json& root, const std::string& dotted_path, bool fallback);
const json* find(const json& root, const std::string& dotted_path);

// Deterministic worker fan-out: fn(i) for i in [0, count), collected in
// index order by the caller's pre-sized storage.
void parallel_indexed(std::size_t count, int workers,
                      const std::function<void(std::size_t)>& fn);

}  // namespace bohmsim::detail
