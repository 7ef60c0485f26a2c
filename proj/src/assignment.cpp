#include "twix/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "twix/errors.hpp"

namespace twix {

namespace {

// Jonker-Volgenant style shortest augmenting path solver for the square
// min-cost assignment problem over a flat row-major cost matrix.
// Deterministic for a given input: rows are inserted in order and column
// scans run in index order.
std::vector<int> solve_square_min_cost(const std::vector<double>& cost, int n) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<double> minv(n + 1);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = inf;
      const double* row = cost.data() + static_cast<std::size_t>(i0 - 1) * n;
      const double ui = u[i0];
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - ui - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

Matching match_max(const ScoreMatrix& scores, double threshold) {
  const int n = scores.rows;
  const int m = scores.cols;
  for (double s : scores.values) {
    if (std::isnan(s)) throw NumericError("match_max: NaN in score matrix");
  }

  Matching result;
  if (n == 0 || m == 0) {
    for (int i = 0; i < n; ++i) result.unmatched_rows.push_back(i);
    for (int j = 0; j < m; ++j) result.unmatched_cols.push_back(j);
    return result;
  }

  // Every feasible pair gets a uniform bonus larger than any achievable
  // total-score difference, so the optimum takes as many feasible pairs as
  // possible and breaks ties by total score. Infeasible cells cost 0, the
  // value of leaving the pair unmatched; padding the smaller side with
  // zero-cost dummies makes the square problem equivalent to the optimal
  // partial assignment over feasible cells.
  double max_abs = 0.0;
  for (double s : scores.values)
    if (std::isfinite(s) && s > threshold) max_abs = std::max(max_abs, std::abs(s));
  const double bonus = (max_abs + 1.0) * (std::min(n, m) + 1);

  const int size = std::max(n, m);
  std::vector<double> cost(static_cast<std::size_t>(size) * size, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const double s = scores.at(i, j);
      if (std::isfinite(s) && s > threshold)
        cost[static_cast<std::size_t>(i) * size + j] = -(s + bonus);
    }
  }

  const std::vector<int> row_to_col = solve_square_min_cost(cost, size);

  std::vector<char> col_matched(m, 0);
  for (int i = 0; i < n; ++i) {
    const int j = row_to_col[i];
    if (j >= 0 && j < m) {
      const double s = scores.at(i, j);
      if (std::isfinite(s) && s > threshold) {
        result.pairs.emplace_back(i, j);
        result.total_score += s;
        col_matched[j] = 1;
        continue;
      }
    }
    result.unmatched_rows.push_back(i);
  }
  for (int j = 0; j < m; ++j) {
    if (!col_matched[j]) result.unmatched_cols.push_back(j);
  }
  return result;
}

}  // namespace twix
