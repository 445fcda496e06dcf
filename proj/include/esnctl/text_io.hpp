#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace esnctl {

/// Shortest decimal form with enough digits (17 significant) to round-trip
/// a double exactly.
std::string fmt17(double v);

/// strtod with full-string validation.
double parse_double(const std::string& token);

/// Splits on a delimiter, trimming surrounding whitespace from each field.
std::vector<std::string> split(const std::string& line, char delim);

/// Reads a whole text file; throws std::runtime_error when unreadable.
std::string read_file(const std::string& path);

/// Writes a whole text file; throws std::runtime_error on failure.
void write_file(const std::string& path, const std::string& content);

}  // namespace esnctl
