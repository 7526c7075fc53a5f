#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace mvrank::csv {

// Round-trippable text form of a double (17 significant digits).
inline std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::vector<std::string_view> split(std::string_view line, char sep = ',');

// Strict parsers: the whole field must be consumed. Errors are ParseError
// tagged with `line_no`.
double parse_double(std::string_view field, std::size_t line_no);
long long parse_int(std::string_view field, std::size_t line_no);

std::ofstream open_for_write(const std::filesystem::path& path);
std::ifstream open_for_read(const std::filesystem::path& path);

}  // namespace mvrank::csv
