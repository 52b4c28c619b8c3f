#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace npbandit::csv {

/// Numeric rows of a comma separated file; blank lines are skipped and lines
/// starting with `#` are treated as comments.
std::vector<std::vector<double>> read_numeric(const std::filesystem::path& path, bool skip_header = false);

std::vector<std::string> split(const std::string& line, char sep = ',');

/// Shortest round-trippable representation of a double.
std::string format_double(double value);

}  // namespace npbandit::csv
