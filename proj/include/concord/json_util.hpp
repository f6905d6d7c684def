#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace concord {

using json = nlohmann::json;

/// Read-only view into a JSON document that remembers its JSON pointer, so schema
/// errors can name the offending location ("expected number at /rows").
class JsonCursor {
 public:
  JsonCursor(const json& node, std::string pointer = "") : node_(&node), pointer_(std::move(pointer)) {}

  const json& node() const noexcept { return *node_; }
  const std::string& pointer() const noexcept { return pointer_; }
  std::string where() const { return pointer_.empty() ? "/" : pointer_; }

  bool has(const std::string& key) const;
  JsonCursor at(const std::string& key) const;
  std::optional<JsonCursor> find(const std::string& key) const;
  std::vector<JsonCursor> items() const;

  double as_double() const;
  std::int64_t as_int() const;
  std::size_t as_size() const;
  bool as_bool() const;
  std::string as_string() const;
  std::vector<double> as_doubles() const;
  std::vector<std::string> as_strings() const;

  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;

  [[noreturn]] void fail(const std::string& message) const;

 private:
  const json* node_;
  std::string pointer_;
};

json read_json_file(const std::filesystem::path& path);
/// Writes `doc` with two-space indentation and a trailing newline.
void write_json_file(const std::filesystem::path& path, const json& doc);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);
/// Locale-independent strict decimal parse; returns nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view text);

}  // namespace concord
