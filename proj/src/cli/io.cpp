#include "idscale/cli/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "idscale/error.hpp"

namespace idscale::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::optional<double> parse_number(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
  return value;
}

struct Fnv1a {
  std::uint64_t state = 14695981039346656037ull;
  void add(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      state ^= bytes[i];
      state *= 1099511628211ull;
    }
  }
  template <class T>
  void add_value(T value) {
    add(&value, sizeof value);
  }
  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state));
    return buf;
  }
};

}  // namespace

std::vector<double> parse_period_list(std::string_view text) {
  std::vector<double> periods;
  for (auto cell : split(text)) {
    const auto value = parse_number(cell);
    require(value && std::isfinite(*value) && *value > 0.0, ErrorCode::invalid_argument,
            "invalid period '" + std::string(cell) + "'");
    periods.push_back(*value);
  }
  return periods;
}

Dataset parse_csv(std::istream& in, const std::optional<std::vector<double>>& periods,
                  std::size_t drop_last_columns) {
  std::vector<double> coords;
  std::size_t width = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  bool first_content = true;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view content = trim(line);
    if (content.empty()) continue;
    auto cells = split(content);
    if (first_content) {
      first_content = false;
      const bool numeric = std::all_of(cells.begin(), cells.end(),
                                       [](std::string_view c) { return parse_number(c).has_value(); });
      if (!numeric) {
        width = cells.size();  // header fixes the column count
        continue;
      }
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width)
      fail(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": expected " +
                                       std::to_string(width) + " columns, found " +
                                       std::to_string(cells.size()));
    require(width > drop_last_columns, ErrorCode::parse_error,
            "no coordinate columns left after dropping trailing columns");
    for (std::size_t c = 0; c + drop_last_columns < cells.size(); ++c) {
      const auto value = parse_number(cells[c]);
      if (!value)
        fail(ErrorCode::parse_error, "line " + std::to_string(line_no) + ", column " +
                                         std::to_string(c + 1) + ": not a number '" +
                                         std::string(cells[c]) + "'");
      if (!std::isfinite(*value))
        fail(ErrorCode::parse_error, "line " + std::to_string(line_no) + ", column " +
                                         std::to_string(c + 1) + ": non-finite value");
      coords.push_back(*value);
    }
    ++rows;
  }
  require(rows >= 2, ErrorCode::parse_error, "need at least two data rows");
  const std::size_t dim = width - drop_last_columns;
  if (!periods) return Dataset(rows, dim, std::move(coords));
  std::vector<double> p = *periods;
  if (p.size() == 1 && dim > 1) p.assign(dim, p.front());
  require(p.size() == dim, ErrorCode::invalid_argument,
          "got " + std::to_string(p.size()) + " periods for " + std::to_string(dim) + " columns");
  return Dataset(rows, dim, std::move(coords), Periodic{std::move(p)});
}

Dataset load_dataset(const std::filesystem::path& path,
                     const std::optional<std::vector<double>>& periods,
                     std::size_t drop_last_columns) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::invalid_argument, "cannot open '" + path.string() + "'");
  return parse_csv(in, periods, drop_last_columns);
}

void write_csv(std::ostream& out, const Dataset& data) {
  char buf[32];
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto p = data.point(i);
    for (std::size_t c = 0; c < p.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", p[c]);
      if (c) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::invalid_argument, "cannot write '" + path.string() + "'");
  write_csv(out, data);
  require(out.good(), ErrorCode::invalid_argument, "write to '" + path.string() + "' failed");
}

std::string content_hash(const Dataset& data) {
  Fnv1a h;
  h.add_value<std::uint64_t>(data.size());
  h.add_value<std::uint64_t>(data.dim());
  if (const auto* p = std::get_if<Periodic>(&data.metric())) {
    h.add_value<std::uint8_t>(1);
    for (double period : p->periods) h.add_value(period);
  } else {
    h.add_value<std::uint8_t>(0);
  }
  for (double x : data.coords()) h.add_value(x == 0.0 ? 0.0 : x);  // -0 == +0
  return h.hex();
}

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::invalid_argument, "cannot open '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Fnv1a h;
  h.add(bytes.data(), bytes.size());
  return h.hex();
}

}  // namespace idscale::cli
