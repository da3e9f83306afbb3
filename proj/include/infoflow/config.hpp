#pragma once

// Flat key = value experiment configuration.
//
//   # comment
//   experiment = n3-sweep
//   model.theta = 0, 0, 0, 0.57735, -0.57735, 0.57735
//
// Keys are dotted names with at most one dot. Values run to the end of the
// line; lists are comma separated, and triples in point lists are separated
// by semicolons.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "infoflow/errors.hpp"

namespace infoflow {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool valid_key(std::string_view key) {
  if (key.empty()) return false;
  int dots = 0;
  char prev = '.';
  for (char c : key) {
    if (c == '.') {
      if (prev == '.') return false;
      ++dots;
    } else if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) {
      return false;
    }
    prev = c;
  }
  return dots <= 1 && prev != '.';
}

}  // namespace detail

class Config {
public:
  static Config parse(std::string_view text, const std::string& source = "<config>") {
    Config cfg;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto end = text.find('\n', start);
      std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
      ++line_no;
      start = end == std::string_view::npos ? text.size() + 1 : end + 1;

      const auto hash = line.find('#');
      if (hash != std::string_view::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      const std::string where = source + ":" + std::to_string(line_no);
      if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
      const std::string key(detail::trim(line.substr(0, eq)));
      const std::string value(detail::trim(line.substr(eq + 1)));
      if (!detail::valid_key(key)) throw ConfigError(where + ": invalid key '" + key + "'");
      if (value.empty()) throw ConfigError(where + ": empty value for '" + key + "'");
      if (!cfg.values_.emplace(key, value).second) throw ConfigError(where + ": duplicate key '" + key + "'");
    }
    return cfg;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
  }

  [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) != 0; }
  [[nodiscard]] const std::map<std::string, std::string>& entries() const noexcept { return values_; }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  /// Throws for any key outside `allowed`.
  void require_known(const std::set<std::string>& allowed) const {
    for (const auto& [key, value] : values_) {
      if (!allowed.count(key)) throw ConfigError("unknown config key '" + key + "'");
    }
  }

  [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  [[nodiscard]] std::string require_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing required key '" + key + "'");
    return it->second;
  }

  [[nodiscard]] double get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : parse_double(it->second, key);
  }

  [[nodiscard]] std::size_t get_size(const std::string& key, std::size_t fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : parse_size(it->second, key);
  }

  [[nodiscard]] std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    for (auto item : detail::split(it->second, ',')) out.push_back(parse_double(item, key));
    return out;
  }

  [[nodiscard]] std::vector<std::size_t> get_sizes(const std::string& key,
                                                   const std::vector<std::size_t>& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<std::size_t> out;
    for (auto item : detail::split(it->second, ',')) out.push_back(parse_size(item, key));
    return out;
  }

  /// Semicolon-separated groups of comma-separated reals, each of length `width`.
  [[nodiscard]] std::vector<std::vector<double>> get_points(const std::string& key, std::size_t width,
                                                            const std::vector<std::vector<double>>& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<std::vector<double>> out;
    for (auto group : detail::split(it->second, ';')) {
      std::vector<double> p;
      for (auto item : detail::split(group, ',')) p.push_back(parse_double(item, key));
      if (p.size() != width) {
        throw ConfigError("key '" + key + "': each point needs " + std::to_string(width) + " values");
      }
      out.push_back(std::move(p));
    }
    return out;
  }

  /// FNV-1a 64 over the canonical "key=value\n" listing (sorted keys).
  [[nodiscard]] std::uint64_t hash() const noexcept {
    std::uint64_t h = 14695981039346656037ULL;
    auto feed = [&](std::string_view s) {
      for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
      }
    };
    for (const auto& [key, value] : values_) {
      feed(key);
      feed("=");
      feed(value);
      feed("\n");
    }
    return h;
  }

  [[nodiscard]] std::string hash_hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::uint64_t h = hash();
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
      out[static_cast<std::size_t>(i)] = digits[h & 0xF];
      h >>= 4;
    }
    return out;
  }

  static double parse_double(std::string_view text, const std::string& key) {
    text = detail::trim(text);
    double value = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || text.empty() || !std::isfinite(value)) {
      throw ConfigError("key '" + key + "': '" + std::string(text) + "' is not a finite number");
    }
    return value;
  }

  static std::size_t parse_size(std::string_view text, const std::string& key) {
    text = detail::trim(text);
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
      throw ConfigError("key '" + key + "': '" + std::string(text) + "' is not a non-negative integer");
    }
    return value;
  }

private:
  std::map<std::string, std::string> values_;
};

}  // namespace infoflow
