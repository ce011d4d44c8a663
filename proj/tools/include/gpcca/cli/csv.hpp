#pragma once

#include <gpcca/dataset.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace gpcca::cli {

/// Samples-as-rows table read from delimited text. `values` keeps the file
/// orientation (samples x features); missing cells are 0 with mask 0.
struct Table {
  std::string source;
  std::vector<std::string> ids;  ///< empty when the file has no ID column
  std::vector<std::string> columns;
  Matrix values;
  Mask mask;

  Index rows() const noexcept { return values.rows(); }
  Index cols() const noexcept { return values.cols(); }
  bool has_ids() const noexcept { return !ids.empty(); }
};

/// Parses a CSV with a header row. The first column holds sample IDs when its
/// header cell is empty or one of id/sample/sample_id, or when any of its
/// cells is non-numeric. "NA" and empty cells are missing.
Table read_table(const std::filesystem::path& path);

/// Writes a samples-as-rows table; entries with mask 0 are written as NA.
/// Numbers use 17 significant digits.
void write_table(const std::filesystem::path& path, const std::vector<std::string>& ids, const std::string& id_header,
                 const std::vector<std::string>& columns, const Matrix& values, const Mask* mask = nullptr);

/// Shortest round-trip text of a double at 17 significant digits.
std::string format_number(double v);

struct LabelFile {
  std::vector<std::string> ids;
  std::vector<std::int64_t> labels;
};

/// Two columns (sample, label) with a header, or one label column (IDs are
/// then the 1-based row numbers).
LabelFile read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const std::vector<std::string>& ids,
                  const std::vector<Index>& labels);

/// Splits one CSV record, honouring double quotes.
std::vector<std::string> split_record(const std::string& line);

}  // namespace gpcca::cli
