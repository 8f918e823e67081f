#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace spinsim::cli {

// 9 significant digits, '.' decimal, no negative zero.
std::string format_number(double value);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add_row(const std::vector<double>& values);
  std::size_t rows() const { return rows_; }
  const std::string& text() const { return text_; }

 private:
  std::size_t columns_;
  std::size_t rows_ = 0;
  std::string text_;
};

// Writes bytes verbatim (binary mode, LF preserved). Empty path or "-" means stdout.
void write_output(const std::string& path, std::string_view content);

}  // namespace spinsim::cli
