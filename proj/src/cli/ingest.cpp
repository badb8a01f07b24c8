#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mspline/cli.hpp"

namespace mspline::cli {

namespace {

[[noreturn]] void data_error(const std::string& msg) { throw Error(ErrorCode::DataFormat, msg); }

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  std::string out(s.substr(a, b - a));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') quoted = !quoted;
    if (c == delim && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

// Empty optional for an empty field; throws on malformed numbers.
std::optional<double> parse_number(std::string field, char decimal_mark, std::size_t line,
                                   const std::string& column) {
  if (field.empty()) return std::nullopt;
  if (decimal_mark != '.') std::replace(field.begin(), field.end(), decimal_mark, '.');
  double v = 0.0;
  const char* first = field.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
    std::ostringstream os;
    os << "line " << line << ", column '" << column << "': cannot parse '" << field
       << "' as a number";
    data_error(os.str());
  }
  return v;
}

std::size_t resolve_column(const std::string& col, const std::vector<std::string>& header) {
  const auto it = std::find(header.begin(), header.end(), col);
  if (it != header.end()) return static_cast<std::size_t>(it - header.begin());
  if (!col.empty() && std::all_of(col.begin(), col.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    return static_cast<std::size_t>(std::stoul(col));
  }
  throw Error(ErrorCode::Config, "column '" + col + "' not found in header");
}

}  // namespace

void DatasetSpec::validate() const {
  if (x_column == y_column) throw Error(ErrorCode::Config, "x and y columns must differ");
  if (delimiter == decimal_mark) {
    throw Error(ErrorCode::Config, "delimiter and decimal mark must differ");
  }
  if (delimiter == '"' || delimiter == '\n' || delimiter == '\r') {
    throw Error(ErrorCode::Config, "unsupported delimiter");
  }
}

IngestResult ingest(const DatasetSpec& spec) {
  spec.validate();
  std::ifstream in(spec.path, std::ios::binary);
  if (!in) data_error("cannot read '" + spec.path.string() + "'");

  IngestResult out;
  std::vector<std::string> header;
  std::size_t xi = 0, yi = 0;
  bool columns_known = false;
  std::vector<std::pair<double, double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split(line, spec.delimiter);
    if (!columns_known) {
      if (spec.header) {
        header = fields;
        xi = resolve_column(spec.x_column, header);
        yi = resolve_column(spec.y_column, header);
        columns_known = true;
        if (xi == yi) throw Error(ErrorCode::Config, "x and y columns must differ");
        continue;
      }
      xi = resolve_column(spec.x_column, {});
      yi = resolve_column(spec.y_column, {});
      if (xi == yi) throw Error(ErrorCode::Config, "x and y columns must differ");
      columns_known = true;
    }
    ++out.rows_read;
    if (std::max(xi, yi) >= fields.size()) {
      std::ostringstream os;
      os << "line " << lineno << " has " << fields.size() << " fields, need column "
         << std::max(xi, yi);
      data_error(os.str());
    }
    const auto x = parse_number(fields[xi], spec.decimal_mark, lineno, spec.x_column);
    const auto y = parse_number(fields[yi], spec.decimal_mark, lineno, spec.y_column);
    const bool missing = !x || !y || (spec.missing_sentinel && (*x == *spec.missing_sentinel ||
                                                               *y == *spec.missing_sentinel));
    if (missing) {
      ++out.dropped_missing;
      continue;
    }
    rows.emplace_back(*x, *y);
  }
  if (rows.empty()) data_error("no valid rows in '" + spec.path.string() + "'");
  if (out.dropped_missing > 0) {
    out.warnings.push_back("dropped " + std::to_string(out.dropped_missing) +
                           " rows with missing values");
  }

  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < rows.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < rows.size() && rows[j].first == rows[i].first) sum += rows[j++].second;
    xs.push_back(rows[i].first);
    ys.push_back(sum / static_cast<double>(j - i));
    out.duplicates_merged += j - i - 1;
    i = j;
  }
  if (out.duplicates_merged > 0) {
    out.warnings.push_back("averaged y over " + std::to_string(out.duplicates_merged) +
                           " rows with repeated x");
  }
  if (xs.size() < 2) throw Error(ErrorCode::InvalidDesign, "x is constant");

  out.x_offset = xs.front();
  out.x_scale = xs.back() - xs.front();
  std::vector<double> t(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) t[i] = (xs[i] - out.x_offset) / out.x_scale;
  t.front() = 0.0;
  t.back() = 1.0;
  out.data = DesignData(std::move(t), std::move(ys));
  return out;
}

}  // namespace mspline::cli
