#include "ink/dataset_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>

#include "ink/errors.hpp"
#include "ink/report.hpp"

namespace ink {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void fail_at(std::size_t line, const std::string& what) {
  std::ostringstream msg;
  msg << "line " << line << ": " << what;
  throw InputError(msg.str());
}

double parse_number(std::string_view field, std::size_t line) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    fail_at(line, "cannot parse '" + std::string(field) + "' as a number");
  return value;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

}  // namespace

Dataset parse_csv(std::istream& in, const CsvOptions& options) {
  std::vector<Point> points;
  std::vector<double> labels;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool header_pending = options.has_header;

  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    std::vector<double> fields;
    std::size_t start = 0;
    while (true) {
      const auto pos = body.find(options.delimiter, start);
      fields.push_back(parse_number(body.substr(start, pos - start), line_no));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
    if (width == 0) {
      width = fields.size();
    } else if (fields.size() != width) {
      fail_at(line_no, "expected " + std::to_string(width) + " fields, found " +
                           std::to_string(fields.size()));
    }

    std::optional<std::size_t> label_at;
    if (options.label_column) {
      const int c = *options.label_column;
      const long resolved = c < 0 ? static_cast<long>(width) + c : c;
      if (resolved < 0 || resolved >= static_cast<long>(width))
        fail_at(line_no, "label column " + std::to_string(c) + " out of range");
      if (width < 2) fail_at(line_no, "a labelled row needs at least one feature");
      label_at = static_cast<std::size_t>(resolved);
    }
    Point p(static_cast<Eigen::Index>(width - (label_at ? 1 : 0)));
    Eigen::Index k = 0;
    for (std::size_t j = 0; j < width; ++j) {
      if (label_at && j == *label_at) {
        labels.push_back(fields[j]);
      } else {
        p[k++] = fields[j];
      }
    }
    points.push_back(std::move(p));
  }
  if (points.empty()) throw InputError("input contains no data rows");
  if (options.label_column) return Dataset(std::move(points), std::move(labels));
  return Dataset(std::move(points));
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  auto in = open_or_throw(path);
  return parse_csv(in, options);
}

Dataset parse_libsvm(std::istream& in) {
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  std::vector<double> labels;
  std::size_t max_index = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto body = trim(line);
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = trim(body.substr(0, hash));
    if (body.empty()) continue;
    std::istringstream tokens{std::string(body)};
    std::string tok;
    tokens >> tok;
    labels.push_back(parse_number(tok, line_no));
    std::vector<std::pair<std::size_t, double>> entries;
    while (tokens >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) fail_at(line_no, "expected index:value, got '" + tok + "'");
      const std::string_view idx_str(tok.data(), colon);
      std::size_t idx = 0;
      const auto [ptr, ec] = std::from_chars(idx_str.data(), idx_str.data() + idx_str.size(), idx);
      if (ec != std::errc() || ptr != idx_str.data() + idx_str.size() || idx == 0)
        fail_at(line_no, "bad feature index '" + std::string(idx_str) + "'");
      entries.emplace_back(idx, parse_number(std::string_view(tok).substr(colon + 1), line_no));
      max_index = std::max(max_index, idx);
    }
    rows.push_back(std::move(entries));
  }
  if (rows.empty()) throw InputError("input contains no data rows");
  if (max_index == 0) max_index = 1;
  std::vector<Point> points;
  points.reserve(rows.size());
  for (const auto& row : rows) {
    Point p = Point::Zero(static_cast<Eigen::Index>(max_index));
    for (const auto& [idx, v] : row) p[static_cast<Eigen::Index>(idx - 1)] = v;
    points.push_back(std::move(p));
  }
  return Dataset(std::move(points), std::move(labels));
}

Dataset load_libsvm(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_libsvm(in);
}

void write_csv(const Dataset& data, std::ostream& out) {
  for (std::size_t i = 1; i <= data.size(); ++i) {
    const Point& p = data.point(i);
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      if (k > 0) out << ',';
      out << format_real(p[k]);
    }
    if (data.has_labels()) out << ',' << format_real(data.labels()[i - 1]);
    out << '\n';
  }
}

}  // namespace ink
