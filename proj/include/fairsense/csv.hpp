#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace fairsense {

enum class ColumnKind { kContinuous, kCategorical };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::kCategorical;
};

// Describes a delimited text file: column names and kinds in file order, which
// column holds the label, and the lexical conventions of the file.
struct CsvFormat {
  std::vector<ColumnSpec> columns;
  std::string label_column;
  std::string missing_marker = "?";
  bool has_header = false;
  // Lines starting with this prefix are skipped. Empty disables the check.
  std::string comment_prefix = "|";
  char delimiter = ',';

  // UCI Adult census income: 14 attributes followed by the income label.
  static CsvFormat adult();

  std::size_t column_index(std::string_view name) const;
  std::size_t label_index() const { return column_index(label_column); }
  std::size_t width() const { return columns.size(); }
};

struct RawTable {
  CsvFormat format;
  // Whitespace-trimmed cells, one vector per retained row.
  std::vector<std::vector<std::string>> rows;
  // 1-based line number of each retained row in its source.
  std::vector<std::size_t> lines;
  // Rows dropped for containing the missing marker.
  std::size_t dropped = 0;

  std::size_t size() const { return rows.size(); }
  const std::string& cell(std::size_t row, std::string_view column) const {
    return rows[row][format.column_index(column)];
  }
};

// Splits one line into trimmed cells.
std::vector<std::string> split_line(std::string_view line, char delimiter);

RawTable parse_csv(std::istream& in, const CsvFormat& format);

// {"columns":[{"name","kind"}],"label_column","missing_marker","has_header",
//  "comment_prefix","delimiter"}; omitted lexical keys keep their defaults.
CsvFormat format_from_json(std::string_view text);
std::string format_to_json(const CsvFormat& format);
RawTable load_csv(const std::filesystem::path& path, const CsvFormat& format);

}  // namespace fairsense
