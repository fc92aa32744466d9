#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hetvar/matrix.hpp"

namespace hetvar {

struct DatasetSpec {
  std::string path;
  char delimiter = ',';
  bool has_header = false;
  std::vector<int> columns;  // empty selects every column
  enum class Transform { None, FirstDifference } transform = Transform::None;
};

// Reads the selected numeric columns; missing or non-numeric cells are hard
// errors (InvalidInput).
Matrix load_dataset(const DatasetSpec& spec);

Matrix read_csv_matrix(std::istream& in, char delimiter, bool has_header,
                       std::vector<std::string>* header_out = nullptr);

void write_csv_matrix(std::ostream& out, const Matrix& m,
                      const std::vector<std::string>& header);

// 17 significant digits, round-trip safe.
std::string format_g17(double v);

Matrix first_difference(const Matrix& x);

}  // namespace hetvar
