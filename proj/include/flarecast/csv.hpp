#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace flarecast::csv {

/// A parsed CSV file with a header row. Fields are comma separated and
/// unquoted; blank lines and lines starting with '#' are skipped.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a column, or -1.
  int column(const std::string& name) const;
  /// Index of a required column; throws a validation error naming the file.
  int require_column(const std::string& name, const std::string& context) const;
};

Table read(const std::filesystem::path& path);

std::vector<std::string> split(const std::string& line, char sep = ',');

double to_double(const std::string& field, const std::string& context);
long long to_int(const std::string& field, const std::string& context);

/// Fixed-precision formatting used by every report so reruns are byte-identical.
/// Infinities render as "inf"/"-inf".
std::string format(double value, int precision = 6);

}  // namespace flarecast::csv
