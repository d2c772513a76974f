#include "flarecast/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "flarecast/error.hpp"

namespace flarecast::csv {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

int Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

int Table::require_column(const std::string& name, const std::string& context) const {
  const int idx = column(name);
  require(idx >= 0, context + ": missing column '" + name + "'");
  return idx;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) fields.push_back(trim(field));
  if (!line.empty() && line.back() == sep) fields.emplace_back();
  return fields;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  Table table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    auto fields = split(stripped);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
    } else {
      require(fields.size() == table.header.size(),
              path.string() + ": row has " + std::to_string(fields.size()) + " fields, header has " +
                  std::to_string(table.header.size()));
      table.rows.push_back(std::move(fields));
    }
  }
  require(have_header, path.string() + ": missing header row");
  return table;
}

double to_double(const std::string& field, const std::string& context) {
  if (field == "inf") return std::numeric_limits<double>::infinity();
  if (field == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  require(ec == std::errc() && ptr == field.data() + field.size(),
          context + ": not a number: '" + field + "'");
  return value;
}

long long to_int(const std::string& field, const std::string& context) {
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  require(ec == std::errc() && ptr == field.data() + field.size(),
          context + ": not an integer: '" + field + "'");
  return value;
}

std::string format(double value, int precision) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  return fmt::format("{:.{}f}", value, precision);
}

}  // namespace flarecast::csv
