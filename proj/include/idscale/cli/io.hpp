#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "idscale/geometry.hpp"

namespace idscale::cli {

// "p1,p2,..." -> periods; a single value is broadcast to every column.
std::vector<double> parse_period_list(std::string_view text);

// Comma-separated numeric table, one point per row. A first row that does
// not parse as numbers is taken as a header. Blank lines are skipped.
Dataset parse_csv(std::istream& in, const std::optional<std::vector<double>>& periods = {},
                  std::size_t drop_last_columns = 0);
Dataset load_dataset(const std::filesystem::path& path,
                     const std::optional<std::vector<double>>& periods = {},
                     std::size_t drop_last_columns = 0);

// Round-trip precision (%.17g), no header.
void write_csv(std::ostream& out, const Dataset& data);
void write_csv(const std::filesystem::path& path, const Dataset& data);

// FNV-1a over n, D, the metric and the coordinate bytes, as 16 hex digits.
std::string content_hash(const Dataset& data);
std::string file_hash(const std::filesystem::path& path);

}  // namespace idscale::cli
