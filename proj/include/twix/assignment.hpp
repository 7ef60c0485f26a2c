#pragma once

#include <vector>

namespace twix {

// Score matrix in dense row-major form.
struct ScoreMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;  // rows * cols

  ScoreMatrix() = default;
  ScoreMatrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, fill) {}

  double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
};

struct Matching {
  std::vector<std::pair<int, int>> pairs;  // (row, col), sorted by row
  std::vector<int> unmatched_rows;
  std::vector<int> unmatched_cols;
  double total_score = 0.0;
};

// Optimal assignment over entries with score > threshold (strict): among
// all threshold-feasible partial assignments, maximizes the number of pairs
// first and the total score second. Entries at or below the threshold are
// excluded before optimization, never post-filtered, so the result is
// optimal among feasible assignments; negative scores above the threshold
// are matchable. Throws NumericError on non-finite scores.
Matching match_max(const ScoreMatrix& scores, double threshold);

}  // namespace twix
