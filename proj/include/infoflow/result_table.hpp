#pragma once

// Tabular experiment output with fixed per-experiment schemas, written as CSV
// or JSON with shortest round-trip number formatting, plus a metadata sidecar.

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "infoflow/errors.hpp"

#ifndef INFOFLOW_VERSION
#define INFOFLOW_VERSION "0.0.0"
#endif

namespace infoflow {

inline constexpr std::string_view kToolVersion = INFOFLOW_VERSION;

enum class OutputFormat { csv, json };

inline OutputFormat parse_output_format(std::string_view s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  throw ConfigError("unknown output format '" + std::string(s) + "' (expected csv or json)");
}

inline std::string_view to_string(OutputFormat f) noexcept { return f == OutputFormat::csv ? "csv" : "json"; }

/// Declared column lists, one per experiment.
inline const std::map<std::string, std::vector<std::string>>& schemas() {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"n3-decomposition", {"convention", "beta", "norm_S", "norm_A", "ratio", "residual_Sa", "residual_AgradH"}},
      {"n3-sweep", {"beta", "norm_S", "norm_A", "ratio"}},
      {"n3-trajectories",
       {"tau", "theta_1", "theta_2", "theta_3", "theta_12", "theta_13", "theta_23", "H", "sum_h", "I", "nu", "mode"}},
      {"cw-magnetization", {"beta", "m_abs"}},
      {"cw-scaling", {"n", "beta_over_betac", "dI_dm", "dH_dm", "dSum_dm"}},
      {"oscillator-jacobi",
       {"theta_xx", "theta_pp", "theta_xp", "max_violation", "normalized_violation", "nonzero_triplets"}},
      {"verify", {"item", "module", "passed", "value", "limit", "detail"}},
  };
  return table;
}

inline const std::vector<std::string>& schema_columns(const std::string& name) {
  const auto it = schemas().find(name);
  if (it == schemas().end()) throw ConfigError("no output schema named '" + name + "'");
  return it->second;
}

/// Shortest decimal string that parses back to exactly x. Non-finite values
/// become "nan", "inf" or "-inf".
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) throw Error("format_double failed");
  return std::string(buf.data(), ptr);
}

/// Empty cells (std::monostate) mark undefined values.
using Cell = std::variant<std::monostate, double, std::string>;

class ResultTable {
public:
  explicit ResultTable(std::string schema) : schema_(std::move(schema)), columns_(schema_columns(schema_)) {}

  [[nodiscard]] const std::string& schema() const noexcept { return schema_; }
  [[nodiscard]] const std::vector<std::string>& columns() const noexcept { return columns_; }
  [[nodiscard]] const std::vector<std::vector<Cell>>& rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t row_count() const noexcept { return rows_.size(); }

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns_.size()) {
      throw Error("row for schema '" + schema_ + "' has " + std::to_string(row.size()) + " cells, expected " +
                  std::to_string(columns_.size()));
    }
    rows_.push_back(std::move(row));
  }

  [[nodiscard]] std::size_t column_index(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
      if (columns_[i] == name) return i;
    throw Error("schema '" + schema_ + "' has no column '" + std::string(name) + "'");
  }

  [[nodiscard]] std::string to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (i) out += ',';
      out += columns_[i];
    }
    out += '\n';
    for (const auto& row : rows_) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += csv_cell(row[i]);
      }
      out += '\n';
    }
    return out;
  }

  [[nodiscard]] nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : rows_) {
      nlohmann::ordered_json obj = nlohmann::ordered_json::object();
      for (std::size_t i = 0; i < row.size(); ++i) {
        const Cell& c = row[i];
        if (const auto* d = std::get_if<double>(&c)) {
          obj[columns_[i]] = std::isfinite(*d) ? nlohmann::ordered_json(*d) : nlohmann::ordered_json(nullptr);
        } else if (const auto* s = std::get_if<std::string>(&c)) {
          obj[columns_[i]] = *s;
        } else {
          obj[columns_[i]] = nullptr;
        }
      }
      rows.push_back(std::move(obj));
    }
    nlohmann::ordered_json j;
    j["schema"] = schema_;
    j["columns"] = columns_;
    j["rows"] = std::move(rows);
    return j;
  }

  [[nodiscard]] std::string serialize(OutputFormat format) const {
    return format == OutputFormat::csv ? to_csv() : to_json().dump(2) + "\n";
  }

private:
  static std::string csv_cell(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
    if (const auto* s = std::get_if<std::string>(&c)) {
      if (s->find_first_of(",\"\n") == std::string::npos) return *s;
      std::string q = "\"";
      for (char ch : *s) {
        if (ch == '"') q += '"';
        q += ch;
      }
      return q + "\"";
    }
    return "";
  }

  std::string schema_;
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
};

/// Parses a CSV header line and compares it with the declared schema.
inline bool csv_header_matches(std::string_view csv, const std::string& schema) {
  const auto eol = csv.find('\n');
  const std::string_view header = csv.substr(0, eol);
  std::string expected;
  const auto& cols = schema_columns(schema);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) expected += ',';
    expected += cols[i];
  }
  return header == expected;
}

/// UTC time of the run. It is the only metadata field that differs between
/// runs of the same config.
inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

struct WrittenArtifacts {
  std::filesystem::path table;
  std::filesystem::path metadata;
};

/// Writes <dir>/<schema>.<csv|json> and <dir>/<schema>.meta.json.
inline WrittenArtifacts write_artifacts(const std::filesystem::path& dir, const ResultTable& table,
                                        OutputFormat format, nlohmann::ordered_json metadata) {
  std::filesystem::create_directories(dir);
  WrittenArtifacts out;
  out.table = dir / (table.schema() + (format == OutputFormat::csv ? ".csv" : ".json"));
  out.metadata = dir / (table.schema() + ".meta.json");
  metadata["timestamp"] = utc_timestamp();
  write_text_file(out.table, table.serialize(format));
  write_text_file(out.metadata, metadata.dump(2) + "\n");
  return out;
}

}  // namespace infoflow
