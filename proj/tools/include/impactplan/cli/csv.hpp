#pragma once

// Fixed 6-decimal CSV output and a small numeric CSV reader.

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace impactplan::cli {

/// "%.6f", with values that round to zero written as 0.000000.
std::string format_fixed6(double v);

class CsvWriter {
 public:
  /// Throws std::runtime_error when path cannot be opened.
  CsvWriter(const std::string& path, const std::vector<std::string>& columns);

  /// Throws std::invalid_argument when the width differs from the header.
  void row(const std::vector<double>& values);
  /// Mixed row: numbers formatted, strings written verbatim.
  void row_text(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  std::size_t width_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Column index by name, or -1.
  int column(const std::string& name) const;
};

/// Header line then numeric rows. Throws std::runtime_error naming the line
/// for unreadable files, ragged rows or non-numeric cells.
CsvTable read_csv(const std::string& path);

}  // namespace impactplan::cli
