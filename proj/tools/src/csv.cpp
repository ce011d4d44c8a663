#include "gpcca/cli/csv.hpp"

#include <gpcca/error.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <optional>

namespace gpcca::cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool is_missing(const std::string& cell) { return cell.empty() || cell == "NA"; }

std::optional<double> parse_number(const std::string& cell) {
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (first != last && *first == '+') ++first;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::vector<std::string>> read_records(const std::filesystem::path& path, std::vector<int>& line_numbers) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::vector<std::string>> records;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    records.push_back(split_record(line));
    line_numbers.push_back(number);
  }
  return records;
}

}  // namespace

std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  out.push_back(trim(cell));
  return out;
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

Table read_table(const std::filesystem::path& path) {
  std::vector<int> lines;
  auto records = read_records(path, lines);
  const std::string name = path.string();
  if (records.empty()) throw InputError(name + ": empty file");
  const auto& header = records.front();
  const std::size_t width = header.size();
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != width) {
      throw InputError(name + ":" + std::to_string(lines[r]) + ": expected " + std::to_string(width) + " fields, got " +
                       std::to_string(records[r].size()));
    }
  }
  if (records.size() < 2) throw InputError(name + ": no data rows");

  const std::string first = lower(header.front());
  bool id_column = first.empty() || first == "id" || first == "sample" || first == "sample_id";
  for (std::size_t r = 1; r < records.size() && !id_column; ++r) {
    const auto& cell = records[r].front();
    if (!is_missing(cell) && !parse_number(cell)) id_column = true;
  }
  const std::size_t skip = id_column ? 1 : 0;
  if (width <= skip) throw InputError(name + ": no feature columns");

  Table t;
  t.source = name;
  t.columns.assign(header.begin() + static_cast<std::ptrdiff_t>(skip), header.end());
  const auto n = static_cast<Index>(records.size() - 1);
  const auto m = static_cast<Index>(width - skip);
  t.values = Matrix::Zero(n, m);
  t.mask = Mask::Zero(n, m);
  for (Index k = 0; k < n; ++k) {
    const auto& rec = records[static_cast<std::size_t>(k) + 1];
    if (id_column) t.ids.push_back(rec.front());
    for (Index j = 0; j < m; ++j) {
      const auto& cell = rec[static_cast<std::size_t>(j) + skip];
      if (is_missing(cell)) continue;
      const auto v = parse_number(cell);
      if (!v) {
        throw InputError(name + ":" + std::to_string(lines[static_cast<std::size_t>(k) + 1]) + ": column '" +
                         t.columns[static_cast<std::size_t>(j)] + "': cannot parse '" + cell + "'");
      }
      t.values(k, j) = *v;
      t.mask(k, j) = 1;
    }
  }
  if (id_column) {
    auto sorted = t.ids;
    std::sort(sorted.begin(), sorted.end());
    const auto dup = std::adjacent_find(sorted.begin(), sorted.end());
    if (dup != sorted.end()) throw InputError(name + ": duplicate sample ID '" + *dup + "'");
  }
  return t;
}

void write_table(const std::filesystem::path& path, const std::vector<std::string>& ids, const std::string& id_header,
                 const std::vector<std::string>& columns, const Matrix& values, const Mask* mask) {
  if (static_cast<Index>(columns.size()) != values.cols()) throw InputError("column names do not match matrix width");
  if (!ids.empty() && static_cast<Index>(ids.size()) != values.rows()) throw InputError("row IDs do not match matrix height");
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  bool first = true;
  if (!ids.empty()) {
    out << quote_if_needed(id_header);
    first = false;
  }
  for (const auto& c : columns) {
    if (!first) out << ',';
    out << quote_if_needed(c);
    first = false;
  }
  out << '\n';
  for (Index k = 0; k < values.rows(); ++k) {
    first = true;
    if (!ids.empty()) {
      out << quote_if_needed(ids[static_cast<std::size_t>(k)]);
      first = false;
    }
    for (Index j = 0; j < values.cols(); ++j) {
      if (!first) out << ',';
      first = false;
      if (mask && (*mask)(k, j) == 0) {
        out << "NA";
      } else {
        out << format_number(values(k, j));
      }
    }
    out << '\n';
  }
  if (!out) throw InputError("error writing " + path.string());
}

LabelFile read_labels(const std::filesystem::path& path) {
  std::vector<int> lines;
  const auto records = read_records(path, lines);
  const std::string name = path.string();
  if (records.size() < 2) throw InputError(name + ": no label rows");
  const std::size_t width = records.front().size();
  if (width != 1 && width != 2) throw InputError(name + ": expected 1 or 2 columns, got " + std::to_string(width));
  LabelFile out;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != width) {
      throw InputError(name + ":" + std::to_string(lines[r]) + ": expected " + std::to_string(width) + " fields, got " +
                       std::to_string(rec.size()));
    }
    const std::string& cell = rec.back();
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
      throw InputError(name + ":" + std::to_string(lines[r]) + ": label '" + cell + "' is not an integer");
    }
    out.ids.push_back(width == 2 ? rec.front() : std::to_string(r));
    out.labels.push_back(v);
  }
  auto sorted = out.ids;
  std::sort(sorted.begin(), sorted.end());
  const auto dup = std::adjacent_find(sorted.begin(), sorted.end());
  if (dup != sorted.end()) throw InputError(name + ": duplicate sample ID '" + *dup + "'");
  return out;
}

void write_labels(const std::filesystem::path& path, const std::vector<std::string>& ids,
                  const std::vector<Index>& labels) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "sample,label\n";
  for (std::size_t k = 0; k < labels.size(); ++k) {
    out << quote_if_needed(ids.empty() ? std::to_string(k + 1) : ids[k]) << ',' << labels[k] << '\n';
  }
}

}  // namespace gpcca::cli
