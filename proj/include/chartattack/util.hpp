#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chartattack::util {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
// Collapses every whitespace run to a single space and trims the ends.
std::string collapse_whitespace(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);

// Parses `s` as a decimal number consuming the entire (trimmed) string.
std::optional<double> parse_number(std::string_view s);

// Canonical number rendering: integral values print without a fractional
// part, everything else with the shortest round-trip representation.
std::string format_number(double v);

std::string sha256_hex(std::string_view data);
std::string base64_encode(std::string_view data);

int64_t now_unix_ms();

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view data);
void append_line(const std::string& path, std::string_view line);

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Exceptions from
// workers are rethrown on the caller after all workers have joined.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace chartattack::util
