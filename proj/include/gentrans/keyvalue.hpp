#pragma once

// A small TOML-like configuration format shared by run manifests and endpoint
// configs.
//
//   # comment (also allowed after a value)
//   key = value
//   [section]          # later keys are stored as "section.key"
//   name = "quoted string with \" and \\ escapes"
//   list = ["a", "b"]  # or bare items: [1, 2, 3]
//
// Bare values run to the end of the line (minus a trailing comment) and are
// trimmed. Keys may contain dots. Redefining a key is an error.

#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gentrans/error.hpp"
#include "gentrans/text.hpp"

namespace gentrans {

class KeyValueDoc {
 public:
  static KeyValueDoc parse(std::string_view content) {
    KeyValueDoc doc;
    std::string section;
    std::size_t line_no = 0;
    for (const auto& raw : text::split_lines(content)) {
      ++line_no;
      auto line = text::trim(strip_comment(raw));
      if (line.empty()) continue;
      if (line.front() == '[' && line.back() == ']') {
        section = std::string(text::trim(line.substr(1, line.size() - 2)));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected key = value");
      }
      auto key = std::string(text::trim(line.substr(0, eq)));
      if (key.empty()) throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": empty key");
      if (!section.empty()) key = section + "." + key;
      if (doc.values_.count(key)) {
        throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
      }
      doc.values_[key] = std::string(text::trim(line.substr(eq + 1)));
    }
    return doc;
  }

  static KeyValueDoc load(const std::string& path) { return parse(text::read_file(path)); }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  /// Keys beginning with `prefix`, with the prefix removed.
  std::map<std::string, std::string> with_prefix(std::string_view prefix) const {
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : values_) {
      if (text::starts_with(k, prefix)) out[k.substr(prefix.size())] = unquote(v);
    }
    return out;
  }

  std::optional<std::string> get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return unquote(it->second);
  }

  std::string require(const std::string& key) const {
    auto v = get(key);
    if (!v) throw Error(ErrorKind::InvalidConfig, "missing key '" + key + "'");
    return *v;
  }

  std::string get_or(const std::string& key, std::string fallback) const {
    auto v = get(key);
    return v ? *v : std::move(fallback);
  }

  int64_t get_int(const std::string& key, int64_t fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    errno = 0;
    char* end = nullptr;
    const long long x = std::strtoll(v->c_str(), &end, 10);
    if (errno != 0 || end == v->c_str() || *end != '\0') {
      throw Error(ErrorKind::InvalidConfig, "key '" + key + "' is not an integer: " + *v);
    }
    return x;
  }

  uint64_t get_uint(const std::string& key, uint64_t fallback) const {
    const auto x = get_int(key, static_cast<int64_t>(fallback));
    if (x < 0) throw Error(ErrorKind::InvalidConfig, "key '" + key + "' must be non-negative");
    return static_cast<uint64_t>(x);
  }

  double get_double(const std::string& key, double fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    char* end = nullptr;
    const double x = std::strtod(v->c_str(), &end);
    if (end == v->c_str() || *end != '\0') {
      throw Error(ErrorKind::InvalidConfig, "key '" + key + "' is not a number: " + *v);
    }
    return x;
  }

  std::vector<std::string> get_list(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return {};
    auto v = text::trim(it->second);
    if (v.size() < 2 || v.front() != '[' || v.back() != ']') {
      throw Error(ErrorKind::InvalidConfig, "key '" + key + "' is not a list");
    }
    std::vector<std::string> out;
    for (auto& item : split_list(v.substr(1, v.size() - 2))) {
      auto t = text::trim(item);
      if (!t.empty()) out.push_back(unquote(std::string(t)));
    }
    return out;
  }

  const std::map<std::string, std::string>& raw() const { return values_; }

 private:
  static std::string_view strip_comment(std::string_view line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '\\' && quoted) {
        ++i;
      } else if (line[i] == '"') {
        quoted = !quoted;
      } else if (line[i] == '#' && !quoted) {
        return line.substr(0, i);
      }
    }
    return line;
  }

  static std::vector<std::string> split_list(std::string_view body) {
    std::vector<std::string> items;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < body.size(); ++i) {
      const char c = body[i];
      if (quoted && c == '\\' && i + 1 < body.size()) {
        cur.push_back(c);
        cur.push_back(body[++i]);
        continue;
      }
      if (c == '"') quoted = !quoted;
      if (c == ',' && !quoted) {
        items.push_back(std::move(cur));
        cur.clear();
        continue;
      }
      cur.push_back(c);
    }
    items.push_back(std::move(cur));
    return items;
  }

  static std::string unquote(const std::string& v) {
    auto t = text::trim(v);
    if (t.size() < 2 || t.front() != '"' || t.back() != '"') return std::string(t);
    std::string out;
    for (std::size_t i = 1; i + 1 < t.size(); ++i) {
      if (t[i] == '\\' && i + 2 < t.size()) {
        const char e = t[++i];
        out.push_back(e == 'n' ? '\n' : e == 't' ? '\t' : e);
      } else {
        out.push_back(t[i]);
      }
    }
    return out;
  }

  std::map<std::string, std::string> values_;
};

}  // namespace gentrans
