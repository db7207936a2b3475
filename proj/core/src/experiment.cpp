#include "bohmsim/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "bohmsim/constants.hpp"
#include "bohmsim/version.hpp"
#include "scenario_impl.hpp"

namespace bohmsim {

namespace detail {

const json* find(const json& root, const std::string& dotted_path) {
  const json* node = &root;
  std::size_t begin = 0;
  while (begin <= dotted_path.size()) {
    const std::size_t dot = dotted_path.find('.', begin);
    const std::string key = dotted_path.substr(begin, dot - begin);
    if (!node->is_object() || !node->contains(key)) return nullptr;
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    begin = dot + 1;
  }
  return node;
}

const json& require(const json& root, const std::string& dotted_path) {
  const json* node = find(root, dotted_path);
  if (node == nullptr)
    throw std::invalid_argument("config: missing required field '" + dotted_path + "'");
  return *node;
}

double require_num(const json& root, const std::string& dotted_path) {
  const json& node = require(root, dotted_path);
  if (!node.is_number())
    throw std::invalid_argument("config: field '" + dotted_path + "' must be a number");
  return node.get<double>();
}

std::string require_str(const json& root, const std::string& dotted_path) {
  const json& node = require(root, dotted_path);
  if (!node.is_string())
    throw std::invalid_argument("config: field '" + dotted_path + "' must be a string");
  return node.get<std::string>();
}

double num_or(const json& root, const std::string& dotted_path, double fallback) {
  const json* node = find(root, dotted_path);
  return (node != nullptr && node->is_number()) ? node->get<double>() : fallback;
}

std::string str_or(const json& root, const std::string& dotted_path,
                   const std::string& fallback) {
  const json* node = find(root, dotted_path);
  return (node != nullptr && node->is_string()) ? node->get<std::string>() : fallback;
}

bool flag_or(const json& root, const std::string& dotted_path, bool fallback) {
  const json* node = find(root, dotted_path);
  return (node != nullptr && node->is_boolean()) ? node->get<bool>() : fallback;
}

void parallel_indexed(std::size_t count, int workers,
                      const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t lanes = std::min<std::size_t>(static_cast<std::size_t>(workers), count);
  std::vector<std::thread> pool;
  pool.reserve(lanes);
  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(lanes);
  for (std::size_t lane = 0; lane < lanes; ++lane) {
    pool.emplace_back([&, lane] {
      try {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
      } catch (const std::exception& e) {
        errors[lane] = e.what();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& err : errors)
    if (!err.empty()) throw std::runtime_error(err);
}

}  // namespace detail

namespace {

using detail::json;

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  json config;
  try {
    config = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config parse error in " + path + ": " + e.what());
  }
  return config;
}

void apply_overrides(json& config, const std::vector<std::string>& overrides) {
  for (const auto& entry : overrides) {
    const std::size_t eq = entry.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::invalid_argument("override must look like path.to.key=value: " + entry);
    const std::string path = entry.substr(0, eq);
    const std::string value = entry.substr(eq + 1);

    json* node = &config;
    std::size_t begin = 0;
    while (true) {
      const std::size_t dot = path.find('.', begin);
      const std::string key = path.substr(begin, dot - begin);
      if (key.empty()) throw std::invalid_argument("override has an empty path segment: " + entry);
      if (dot == std::string::npos) {
        json parsed = json::parse(value, nullptr, false);
        (*node)[key] = parsed.is_discarded() ? json(value) : parsed;
        break;
      }
      node = &(*node)[key];
      begin = dot + 1;
    }
  }
}

std::string config_digest(const json& config) {
  // FNV-1a over the canonical dump plus the code version.
  const std::string text = config.dump() + "|" + version_string;
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return std::string(buf);
}

VerifyReport verify_config(const json& config) {
  VerifyReport report;
  auto fatal = [&](const std::string& msg) { report.issues.push_back({true, msg}); };

  if (!config.is_object()) {
    fatal("config root must be a JSON object");
    return report;
  }
  const json* scenario = detail::find(config, "scenario");
  if (scenario == nullptr || !scenario->is_string()) {
    fatal("missing required field 'scenario'");
    return report;
  }
  if (detail::find_scenario(scenario->get<std::string>()) == nullptr) {
    fatal("unknown scenario '" + scenario->get<std::string>() + "'");
    return report;
  }
  if (detail::find(config, "seeds.alpha") == nullptr ||
      detail::find(config, "seeds.h") == nullptr) {
    fatal("seeds.alpha and seeds.h must be set explicitly (no wall-clock defaults)");
  }
  detail::verify_scenario_config(config, report);
  return report;
}

VerifyReport verify_json(const json& config) { return verify_config(config); }

}  // namespace

VerifyReport verify_experiment(const std::string& config_path,
                               const std::vector<std::string>& overrides) {
  VerifyReport report;
  try {
    json config = load_config_file(config_path);
    apply_overrides(config, overrides);
    return verify_config(config);
  } catch (const std::exception& e) {
    report.issues.push_back({true, e.what()});
  }
  return report;
}

std::vector<std::string> list_scenarios() { return detail::scenario_names(); }

std::string run_scenario_json(const std::string& config_json, const std::string& out_dir,
                              int workers) {
  json config = json::parse(config_json);
  const auto report = verify_json(config);
  if (!report.ok()) {
    std::string joined;
    for (const auto& issue : report.issues)
      if (issue.fatal) joined += issue.message + "; ";
    throw std::invalid_argument("invalid config: " + joined);
  }

  namespace fs = std::filesystem;
  const fs::path out(out_dir);
  fs::create_directories(out);

  const auto scenario_name = config["scenario"].get<std::string>();
  auto* scenario = detail::find_scenario(scenario_name);

  // Manifest first: config echo, digest, version, wall-clock timestamp (the
  // only timestamp anywhere in the outputs).
  {
    json manifest;
    manifest["config"] = config;
    manifest["digest"] = config_digest(config);
    manifest["version"] = version_string;
    const auto now = std::chrono::system_clock::now();
    const auto t = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    manifest["generated_at"] = stamp;
    std::ofstream mf(out / "manifest.json");
    mf << manifest.dump(2) << "\n";
  }

  json summary = scenario(config, out, workers);
  summary["scenario"] = scenario_name;
  summary["digest"] = config_digest(config);

  const std::string text = summary.dump(2) + "\n";
  std::ofstream sf(out / "summary.json");
  sf << text;
  return text;
}

int run_experiment(const RunOptions& options, std::string* error) {
  try {
    json config = load_config_file(options.config_path);
    apply_overrides(config, options.overrides);

    const auto report = verify_config(config);
    if (!report.ok()) {
      if (error != nullptr) {
        std::ostringstream msg;
        for (const auto& issue : report.issues)
          if (issue.fatal) msg << issue.message << "\n";
        *error = msg.str();
      }
      return 2;
    }

    int workers = options.workers;
    if (workers <= 0) {
      if (const char* env = std::getenv("BOHMSIM_WORKERS"))
        workers = std::max(1, std::atoi(env));
      else
        workers = 1;
    }

    run_scenario_json(config.dump(), options.out_dir, workers);
    return 0;
  } catch (const std::exception& e) {
    if (error != nullptr) *error = e.what();
    return 1;
  }
}

}  // namespace bohmsim
