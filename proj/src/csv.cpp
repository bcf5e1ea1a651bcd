#include "hdlogit/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hdlogit {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim whitespace and a possible trailing CR
    size_t a = field.find_first_not_of(" \t\r");
    size_t b = field.find_last_not_of(" \t\r");
    out.push_back(a == std::string::npos ? "" : field.substr(a, b - a + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

bool parse_number(const std::string& s, double& v) {
  if (s.empty()) return false;
  const char* begin = s.data();
  const char* end = begin + s.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  return ec == std::errc{} && ptr == end;
}

struct RawCsv {
  std::vector<std::string> header;  // empty if no header detected
  std::vector<std::vector<double>> rows;
};

RawCsv read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV file: " + path);
  RawCsv raw;
  std::string line;
  size_t lineno = 0;
  size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> fields = split_line(line);
    if (raw.rows.empty() && raw.header.empty()) {
      // header detection: any non-numeric field in the first line
      bool all_numeric = true;
      double tmp;
      for (const auto& f : fields)
        if (!parse_number(f, tmp)) all_numeric = false;
      if (!all_numeric) {
        raw.header = fields;
        width = fields.size();
        continue;
      }
      width = fields.size();
    }
    if (fields.size() != width)
      throw std::runtime_error(path + ": row " + std::to_string(lineno) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(width));
    std::vector<double> row(fields.size());
    for (size_t c = 0; c < fields.size(); ++c) {
      if (!parse_number(fields[c], row[c]))
        throw std::runtime_error(path + ": missing or non-numeric value at row " +
                                 std::to_string(lineno) + ", column " + std::to_string(c + 1));
    }
    raw.rows.push_back(std::move(row));
  }
  if (raw.rows.empty()) throw std::runtime_error(path + ": no data rows");
  return raw;
}

}  // namespace

Dataset load_dataset_csv(const std::string& path, const std::string& label_col, bool center) {
  const RawCsv raw = read_csv(path);
  const size_t ncol = raw.rows[0].size();

  // resolve the label column: by name against the header, else by index
  size_t label_idx = ncol;  // sentinel
  if (!raw.header.empty()) {
    for (size_t c = 0; c < raw.header.size(); ++c)
      if (raw.header[c] == label_col) label_idx = c;
  }
  if (label_idx == ncol) {
    double v;
    if (parse_number(label_col, v) && v >= 0 && v < static_cast<double>(ncol))
      label_idx = static_cast<size_t>(v);
    else
      throw std::runtime_error(path + ": label column '" + label_col + "' not found");
  }

  Dataset ds;
  const size_t n = raw.rows.size();
  const size_t p = ncol - 1;
  ds.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  ds.y.resize(static_cast<Eigen::Index>(n));
  for (size_t i = 0; i < n; ++i) {
    size_t k = 0;
    for (size_t c = 0; c < ncol; ++c) {
      if (c == label_idx) {
        const double v = raw.rows[i][c];
        if (v == 1.0)
          ds.y(static_cast<Eigen::Index>(i)) = 1.0;
        else if (v == 0.0 || v == -1.0)
          ds.y(static_cast<Eigen::Index>(i)) = -1.0;
        else
          throw std::runtime_error(path + ": label at row " + std::to_string(i + 1) +
                                   " is not 0/1 or -1/+1");
      } else {
        ds.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k++)) = raw.rows[i][c];
      }
    }
  }
  for (size_t c = 0; c < ncol; ++c) {
    if (c == label_idx) continue;
    ds.column_names.push_back(raw.header.empty() ? "x" + std::to_string(c)
                                                 : raw.header[c]);
  }
  ds.label_name = raw.header.empty() ? "y" : raw.header[label_idx];

  if (center) ds.x.rowwise() -= ds.x.colwise().mean();
  return ds;
}

Eigen::MatrixXd load_matrix_csv(const std::string& path) {
  const RawCsv raw = read_csv(path);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(raw.rows.size()),
                    static_cast<Eigen::Index>(raw.rows[0].size()));
  for (size_t i = 0; i < raw.rows.size(); ++i)
    for (size_t j = 0; j < raw.rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = raw.rows[i][j];
  return m;
}

Eigen::VectorXd load_vector_csv(const std::string& path) {
  const Eigen::MatrixXd m = load_matrix_csv(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw std::runtime_error(path + ": expected a single row or column");
}

}  // namespace hdlogit
