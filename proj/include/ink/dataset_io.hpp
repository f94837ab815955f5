#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "ink/kernel.hpp"

namespace ink {

struct CsvOptions {
  bool has_header = false;
  // Column holding the label; negative values count from the end (-1 = last).
  // nullopt reads every column as a feature and leaves the dataset unlabelled.
  std::optional<int> label_column = -1;
  char delimiter = ',';
};

Dataset parse_csv(std::istream& in, const CsvOptions& options);
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options);

// libsvm sparse rows "<label> <idx>:<value> ..." with 1-based feature indices; densified on load.
Dataset parse_libsvm(std::istream& in);
Dataset load_libsvm(const std::filesystem::path& path);

// Writes features then the label (if any) as the last column; 17 significant digits.
void write_csv(const Dataset& data, std::ostream& out);

}  // namespace ink
