#pragma once

#include <map>
#include <vector>

namespace bye {

// Dense score matrix indexed by (new object, reference object) id lists.
struct ScoreMatrix {
  std::vector<int> new_ids;  // rows
  std::vector<int> ref_ids;  // columns
  std::vector<double> values;  // row-major, new_ids.size() x ref_ids.size()

  ScoreMatrix() = default;
  ScoreMatrix(std::vector<int> rows, std::vector<int> cols);
  double& at(size_t j, size_t i) { return values[j * ref_ids.size() + i]; }
  double at(size_t j, size_t i) const { return values[j * ref_ids.size() + i]; }
  size_t rows() const { return new_ids.size(); }
  size_t cols() const { return ref_ids.size(); }
};

struct Assignment {
  std::map<int, int> mapping;  // new id -> ref id
  double total_score = 0.0;
};

// Elementwise sum; b is reordered to a's id layout first. Mismatched id sets
// raise an error naming the difference.
ScoreMatrix ensemble(const ScoreMatrix& a, const ScoreMatrix& b);

// Score-maximizing bijection on a square matrix; among optimal solutions the
// lexicographically smallest row->column vector is returned.
Assignment hungarian_assign(const ScoreMatrix& scores);

// Optimal total over the max-score assignment (column index per row, -1 free).
double solve_lap_max(const std::vector<double>& values, int n, std::vector<int>* row_to_col);

}  // namespace bye
