// infoflow run --config <path> [--out <dir>] [--format csv|json]
// infoflow verify [--out <dir>] [--format csv|json]

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "infoflow/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"infoflow: constrained entropy-production experiments"};
  app.set_version_flag("--version", std::string(infoflow::kToolVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string format;
  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("--config", config_path, "config file (key = value lines)")->required();
  run->add_option("--out", out_dir, "output directory (overrides output.dir)");
  run->add_option("--format", format, "csv or json (overrides output.format)");

  std::string verify_out;
  std::string verify_format;
  auto* verify = app.add_subcommand("verify", "run the invariant suite");
  verify->add_option("--out", verify_out, "directory for verify.csv and verify.meta.json");
  verify->add_option("--format", verify_format, "csv or json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : infoflow::kExitConfig;
  }

  if (*run) {
    infoflow::RunRequest req;
    try {
      req.config = infoflow::Config::load(config_path);
    } catch (const infoflow::ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return infoflow::kExitConfig;
    }
    if (!out_dir.empty()) req.out_dir = out_dir;
    if (!format.empty()) req.format = format;
    return infoflow::run_and_write(req, std::cerr);
  }

  // verify: print one line per item, then write the report.
  infoflow::RunRequest req;
  req.config.set("experiment", "verify");
  if (!verify_out.empty()) req.out_dir = verify_out;
  if (!verify_format.empty()) req.format = verify_format;
  std::optional<infoflow::OutputFormat> fmt;
  try {
    fmt = infoflow::parse_output_format(req.format.value_or("csv"));
  } catch (const infoflow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return infoflow::kExitConfig;
  }
  try {
    const infoflow::VerifyReport report = infoflow::verify_suite();
    for (const auto& i : report.items) {
      std::cout << (i.passed ? "PASS " : "FAIL ") << i.module << "/" << i.name << "  value=" << infoflow::format_double(i.value)
                << " limit=" << infoflow::format_double(i.limit) << "  " << i.detail << "\n";
    }
    for (const auto& [k, v] : report.noise_floors.items()) std::cout << "noise floor " << k << " = " << v.dump() << "\n";
    std::cout << (report.ok() ? "verify: all items passed" : "verify: some items failed") << " ("
              << report.seconds << " s)\n";
    if (req.out_dir) {
      infoflow::ExperimentOutcome out{infoflow::verify_table(report)};
      auto meta = infoflow::detail::base_metadata(req.config, "verify");
      meta["noise_floors"] = report.noise_floors;
      meta["status"] = report.ok() ? "ok" : "failed";
      infoflow::write_artifacts(*req.out_dir, out.table, *fmt, meta);
    }
    return report.ok() ? infoflow::kExitOk : infoflow::kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "verify failed to run: " << e.what() << "\n";
    return infoflow::kExitFailure;
  }
}
