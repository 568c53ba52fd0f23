#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace adcps {

// Shortest round-trippable decimal form, locale-independent, so identical
// runs produce identical bytes.
std::string format_double(double v);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void add_row(std::vector<std::string> cells);
  const std::string& str() const { return text_; }
  void write(const std::filesystem::path& path) const;

 private:
  std::size_t columns_;
  std::string text_;
};

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

}  // namespace adcps
