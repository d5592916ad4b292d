#include "dircn/util/keyvalue.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dircn::util {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const char* want) {
  throw std::invalid_argument("invalid value '" + value + "' for " + key + " (expected " + want + ")");
}

template <typename T>
T parse_integer(const std::string& key, const std::string& value, const char* want) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || value.empty()) bad(key, value, want);
  return out;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value, got '" + line + "'");
    }
    auto key = trim(line.substr(0, eq));
    if (key.empty()) throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::move(key), trim(line.substr(eq + 1)));
  }
  return out;
}

std::size_t parse_size(const std::string& key, const std::string& value) {
  return parse_integer<std::size_t>(key, value, "a non-negative integer");
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  return parse_integer<std::uint64_t>(key, value, "a non-negative integer");
}

int parse_int(const std::string& key, const std::string& value) { return parse_integer<int>(key, value, "an integer"); }

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    bad(key, value, "a number");
  }
  if (used != value.size() || !std::isfinite(v)) bad(key, value, "a finite number");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad(key, value, "true or false");
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace dircn::util
