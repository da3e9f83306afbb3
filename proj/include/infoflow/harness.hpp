#pragma once

// Config-to-artifacts driver shared by the CLI and the tests.

#include <algorithm>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "infoflow/config.hpp"
#include "infoflow/experiments.hpp"
#include "infoflow/result_table.hpp"
#include "infoflow/verify.hpp"

namespace infoflow {

inline ResultTable verify_table(const VerifyReport& report) {
  ResultTable t("verify");
  for (const auto& i : report.items) {
    t.add_row({i.name, i.module, std::string(i.passed ? "true" : "false"), i.value, i.limit, i.detail});
  }
  return t;
}

inline ExperimentOutcome run_verify(const Config& cfg) {
  cfg.require_known(detail::kCommonKeys);
  const VerifyReport report = verify_suite();
  ExperimentOutcome out{verify_table(report)};
  out.metadata = detail::base_metadata(cfg, "verify");
  out.metadata["convention"] = "zero_one (pairwise N=3 items); both conventions in expfam_core items";
  out.metadata["noise_floors"] = report.noise_floors;
  out.metadata["items_passed"] =
      std::count_if(report.items.begin(), report.items.end(), [](const VerifyItem& i) { return i.passed; });
  out.metadata["items_total"] = report.items.size();
  for (const auto& i : report.items) out.checks.push_back({i.name, i.passed, i.detail});
  return out;
}

inline ExperimentOutcome run_experiment(const Config& cfg) {
  if (cfg.require_string("experiment") == "verify") return run_verify(cfg);
  return run_non_verify(cfg);
}

struct RunRequest {
  Config config;
  std::optional<std::string> out_dir;     // overrides output.dir
  std::optional<std::string> format;      // overrides output.format
};

/// Runs the configured experiment, writes its artifacts and returns the exit
/// code: 0 on success, 2 for configuration errors, 3 for numerical failures
/// or violated invariants.
inline int run_and_write(const RunRequest& req, std::ostream& log) {
  OutputFormat format{};
  std::filesystem::path dir;
  try {
    format = parse_output_format(req.format.value_or(req.config.get_string("output.format", "csv")));
    dir = req.out_dir.value_or(req.config.get_string("output.dir", "."));
    const std::string name = req.config.require_string("experiment");
    bool known = false;
    for (const auto& n : experiment_names()) known = known || n == name;
    if (!known) throw ConfigError("unknown experiment '" + name + "'");
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    ExperimentOutcome out = run_experiment(req.config);
    nlohmann::ordered_json meta = out.metadata;
    nlohmann::ordered_json checks = nlohmann::ordered_json::array();
    for (const auto& c : out.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    meta["checks"] = std::move(checks);
    meta["status"] = out.ok() ? "ok" : "failed";
    const auto files = write_artifacts(dir, out.table, format, meta);
    log << "wrote " << files.table.string() << " (" << out.table.row_count() << " rows) and "
        << files.metadata.string() << "\n";
    for (const auto& c : out.checks) {
      if (!c.passed) log << "check failed: " << c.name << ": " << c.detail << "\n";
    }
    return out.ok() ? kExitOk : kExitFailure;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    log << "run failed: " << e.what() << "\n";
    // Leave a diagnostic table behind so the failure is visible next to the outputs.
    try {
      const std::string name = req.config.require_string("experiment");
      nlohmann::ordered_json meta = detail::base_metadata(req.config, name);
      meta["status"] = "failed";
      meta["error"] = e.what();
      std::filesystem::create_directories(dir);
      meta["timestamp"] = utc_timestamp();
      write_text_file(dir / (name + ".meta.json"), meta.dump(2) + "\n");
    } catch (...) {
    }
    return kExitFailure;
  }
}

}  // namespace infoflow
