#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace bdnas {

/// Shortest round-trip decimal form, '.' separator, independent of locale.
std::string format_double(double v);
/// Strict, locale-independent parse; throws std::invalid_argument.
double parse_double(std::string_view s);
std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace bdnas
