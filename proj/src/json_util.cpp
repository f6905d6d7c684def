#include "concord/json_util.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "concord/error.hpp"

namespace concord {

namespace {

std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

}  // namespace

bool JsonCursor::has(const std::string& key) const { return node_->is_object() && node_->contains(key); }

JsonCursor JsonCursor::at(const std::string& key) const {
  if (!node_->is_object()) fail("expected an object");
  auto it = node_->find(key);
  if (it == node_->end()) fail("missing required field '" + key + "'");
  return JsonCursor(*it, pointer_ + "/" + escape_token(key));
}

std::optional<JsonCursor> JsonCursor::find(const std::string& key) const {
  if (!node_->is_object()) fail("expected an object");
  auto it = node_->find(key);
  if (it == node_->end() || it->is_null()) return std::nullopt;
  return JsonCursor(*it, pointer_ + "/" + escape_token(key));
}

std::vector<JsonCursor> JsonCursor::items() const {
  if (!node_->is_array()) fail("expected an array");
  std::vector<JsonCursor> out;
  out.reserve(node_->size());
  for (std::size_t i = 0; i < node_->size(); ++i) out.emplace_back((*node_)[i], pointer_ + "/" + std::to_string(i));
  return out;
}

double JsonCursor::as_double() const {
  if (!node_->is_number()) fail("expected a number");
  const double v = node_->get<double>();
  if (!std::isfinite(v)) fail("expected a finite number");
  return v;
}

std::int64_t JsonCursor::as_int() const {
  if (node_->is_number_integer()) return node_->get<std::int64_t>();
  if (node_->is_number_float()) {
    const double v = node_->get<double>();
    if (std::floor(v) == v && std::abs(v) < 9e15) return static_cast<std::int64_t>(v);
  }
  fail("expected an integer");
}

std::size_t JsonCursor::as_size() const {
  const auto v = as_int();
  if (v < 0) fail("expected a non-negative integer");
  return static_cast<std::size_t>(v);
}

bool JsonCursor::as_bool() const {
  if (!node_->is_boolean()) fail("expected a boolean");
  return node_->get<bool>();
}

std::string JsonCursor::as_string() const {
  if (!node_->is_string()) fail("expected a string");
  return node_->get<std::string>();
}

std::vector<double> JsonCursor::as_doubles() const {
  std::vector<double> out;
  for (const auto& item : items()) out.push_back(item.as_double());
  return out;
}

std::vector<std::string> JsonCursor::as_strings() const {
  std::vector<std::string> out;
  for (const auto& item : items()) out.push_back(item.as_string());
  return out;
}

double JsonCursor::get_double(const std::string& key, double fallback) const {
  auto c = find(key);
  return c ? c->as_double() : fallback;
}

std::int64_t JsonCursor::get_int(const std::string& key, std::int64_t fallback) const {
  auto c = find(key);
  return c ? c->as_int() : fallback;
}

bool JsonCursor::get_bool(const std::string& key, bool fallback) const {
  auto c = find(key);
  return c ? c->as_bool() : fallback;
}

std::string JsonCursor::get_string(const std::string& key, const std::string& fallback) const {
  auto c = find(key);
  return c ? c->as_string() : fallback;
}

void JsonCursor::fail(const std::string& message) const {
  throw ValidationError(message + " at " + where());
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw ValidationError("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return std::to_string(value);
  return std::string(buf, ptr);
}

std::optional<double> parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace concord
