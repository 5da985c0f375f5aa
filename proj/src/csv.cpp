#include "fairsense/csv.hpp"

#include <fstream>
#include <istream>

#include <json.hpp>

#include "fairsense/error.hpp"

namespace fairsense {
namespace {

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace

CsvFormat CsvFormat::adult() {
  CsvFormat f;
  constexpr auto kCont = ColumnKind::kContinuous;
  constexpr auto kCat = ColumnKind::kCategorical;
  f.columns = {
      {"age", kCont},           {"workclass", kCat},      {"fnlwgt", kCont},
      {"education", kCat},      {"education-num", kCont}, {"marital-status", kCat},
      {"occupation", kCat},     {"relationship", kCat},   {"race", kCat},
      {"sex", kCat},            {"capital-gain", kCont},  {"capital-loss", kCont},
      {"hours-per-week", kCont}, {"native-country", kCat}, {"income", kCat},
  };
  f.label_column = "income";
  return f;
}

std::size_t CsvFormat::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown column '" + std::string(name) + "'");
}

std::vector<std::string> split_line(std::string_view line, char delimiter) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delimiter, start);
    const std::string_view cell =
        pos == std::string_view::npos ? line.substr(start) : line.substr(start, pos - start);
    cells.emplace_back(trim(cell));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

RawTable parse_csv(std::istream& in, const CsvFormat& format) {
  if (format.columns.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "csv format declares no columns");
  }
  format.label_index();  // validates the label column name

  RawTable table;
  table.format = format;
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = format.has_header;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(line);
    if (body.empty()) continue;
    if (!format.comment_prefix.empty() && body.starts_with(format.comment_prefix)) continue;

    std::vector<std::string> cells = split_line(body, format.delimiter);
    if (cells.size() != format.width()) {
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ": expected " +
                                         std::to_string(format.width()) + " fields, got " +
                                         std::to_string(cells.size()));
    }
    if (header_pending) {
      header_pending = false;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i] != format.columns[i].name) {
          throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ": header column " +
                                             std::to_string(i + 1) + " is '" + cells[i] +
                                             "', expected '" + format.columns[i].name + "'");
        }
      }
      continue;
    }
    bool missing = false;
    for (const std::string& c : cells) {
      if (c == format.missing_marker || c.empty()) {
        missing = true;
        break;
      }
    }
    if (missing) {
      ++table.dropped;
      continue;
    }
    table.rows.push_back(std::move(cells));
    table.lines.push_back(line_no);
  }
  if (table.rows.empty()) {
    throw Error(ErrorKind::kData, "no data rows");
  }
  return table;
}

CsvFormat format_from_json(std::string_view text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    CsvFormat f;
    for (const auto& c : j.at("columns")) {
      ColumnSpec spec;
      spec.name = c.at("name").get<std::string>();
      const std::string kind = c.value("kind", std::string("categorical"));
      if (kind == "continuous") {
        spec.kind = ColumnKind::kContinuous;
      } else if (kind == "categorical") {
        spec.kind = ColumnKind::kCategorical;
      } else {
        throw Error(ErrorKind::kParse, "column '" + spec.name + "' has unknown kind '" + kind + "'");
      }
      f.columns.push_back(std::move(spec));
    }
    f.label_column = j.at("label_column").get<std::string>();
    f.missing_marker = j.value("missing_marker", f.missing_marker);
    f.has_header = j.value("has_header", f.has_header);
    f.comment_prefix = j.value("comment_prefix", f.comment_prefix);
    const std::string delim = j.value("delimiter", std::string(1, f.delimiter));
    if (delim.size() != 1) throw Error(ErrorKind::kParse, "delimiter must be one character");
    f.delimiter = delim[0];
    f.label_index();
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("format json: ") + e.what());
  }
}

std::string format_to_json(const CsvFormat& format) {
  nlohmann::ordered_json j;
  j["columns"] = nlohmann::ordered_json::array();
  for (const ColumnSpec& c : format.columns) {
    j["columns"].push_back(
        {{"name", c.name},
         {"kind", c.kind == ColumnKind::kContinuous ? "continuous" : "categorical"}});
  }
  j["label_column"] = format.label_column;
  j["missing_marker"] = format.missing_marker;
  j["has_header"] = format.has_header;
  j["comment_prefix"] = format.comment_prefix;
  j["delimiter"] = std::string(1, format.delimiter);
  return j.dump(2);
}

RawTable load_csv(const std::filesystem::path& path, const CsvFormat& format) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::kIo, "cannot read '" + path.string() + "'");
  }
  try {
    return parse_csv(in, format);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace fairsense
