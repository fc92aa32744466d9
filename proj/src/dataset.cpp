#include "hetvar/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "hetvar/errors.hpp"

namespace hetvar {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}

double parse_number(const std::string& s, int row, int col) {
  std::string trimmed = s;
  const auto b = trimmed.find_first_not_of(" \t");
  const auto e = trimmed.find_last_not_of(" \t");
  if (b == std::string::npos) {
    throw InvalidInput("missing value at row " + std::to_string(row) +
                       ", column " + std::to_string(col));
  }
  trimmed = trimmed.substr(b, e - b + 1);
  try {
    std::size_t pos = 0;
    const double v = std::stod(trimmed, &pos);
    if (pos != trimmed.size()) throw std::invalid_argument(trimmed);
    if (!std::isfinite(v)) throw std::invalid_argument(trimmed);
    return v;
  } catch (const std::exception&) {
    throw InvalidInput("non-numeric value '" + trimmed + "' at row " +
                       std::to_string(row) + ", column " +
                       std::to_string(col));
  }
}

}  // namespace

Matrix read_csv_matrix(std::istream& in, char delimiter, bool has_header,
                       std::vector<std::string>* header_out) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    const auto fields = split_line(line, delimiter);
    if (has_header && rows.empty() && width == 0) {
      if (header_out) *header_out = fields;
      width = fields.size();
      has_header = false;  // consume once
      continue;
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      throw InvalidInput("ragged row at line " + std::to_string(lineno));
    }
    std::vector<double> row;
    row.reserve(width);
    for (std::size_t c = 0; c < fields.size(); ++c) {
      row.push_back(parse_number(fields[c], lineno, static_cast<int>(c + 1)));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidInput("empty dataset");
  Matrix out(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          rows[r][c];
    }
  }
  return out;
}

Matrix load_dataset(const DatasetSpec& spec) {
  std::ifstream in(spec.path);
  if (!in) throw InvalidInput("cannot open dataset: " + spec.path);
  Matrix all = read_csv_matrix(in, spec.delimiter, spec.has_header);
  Matrix selected;
  if (spec.columns.empty()) {
    selected = all;
  } else {
    selected.resize(all.rows(),
                    static_cast<Eigen::Index>(spec.columns.size()));
    for (std::size_t i = 0; i < spec.columns.size(); ++i) {
      const int c = spec.columns[i];
      if (c < 0 || c >= all.cols()) {
        throw InvalidInput("column index " + std::to_string(c) +
                           " out of range");
      }
      selected.col(static_cast<Eigen::Index>(i)) = all.col(c);
    }
  }
  if (spec.transform == DatasetSpec::Transform::FirstDifference) {
    selected = first_difference(selected);
  }
  return selected;
}

void write_csv_matrix(std::ostream& out, const Matrix& m,
                      const std::vector<std::string>& header) {
  if (!header.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out << ',';
      out << header[i];
    }
    out << '\n';
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_g17(m(r, c));
    }
    out << '\n';
  }
}

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Matrix first_difference(const Matrix& x) {
  if (x.rows() < 2) throw InvalidInput("need at least two rows to difference");
  return x.bottomRows(x.rows() - 1) - x.topRows(x.rows() - 1);
}

}  // namespace hetvar
