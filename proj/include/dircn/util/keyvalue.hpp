#pragma once

// "key = value" text with '#' comments, one entry per line.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace dircn::util {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// Throws std::invalid_argument naming the offending line.
KeyValues parse_key_values(const std::string& text);

std::size_t parse_size(const std::string& key, const std::string& value);
std::uint64_t parse_u64(const std::string& key, const std::string& value);
int parse_int(const std::string& key, const std::string& value);
double parse_double(const std::string& key, const std::string& value);
bool parse_bool(const std::string& key, const std::string& value);

// Shortest text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace dircn::util
