#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

namespace hfsg {

// Dense row-major weight matrix; NaN marks a pair that may not be matched.
struct WeightMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> w;

  WeightMatrix() = default;
  WeightMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), w(r * c, std::numeric_limits<double>::quiet_NaN()) {}

  double& at(std::size_t r, std::size_t c) { return w[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return w[r * cols + c]; }
  bool allowed(std::size_t r, std::size_t c) const { return !std::isnan(at(r, c)); }
};

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // sorted by row
  std::vector<std::size_t> unmatched_rows;
  std::vector<std::size_t> unmatched_cols;
  double total = 0.0;  // summed in row order
};

// Maximum-weight one-to-one matching over the allowed entries, solved by the
// Kuhn-Munkres method with shortest augmenting paths (O(n^3)). Weights must be
// non-negative: the matrix is squared up with zero-weight dummy entries
// standing in for "leave unmatched", and forbidden pairs are dropped from the
// final assignment.
inline Assignment max_weight_matching(const WeightMatrix& m) {
  Assignment out;
  const std::size_t n = std::max(m.rows, m.cols);
  if (n == 0) return out;

  // cost = -weight; forbidden and dummy cells cost 0.
  auto cost = [&](std::size_t i, std::size_t j) -> double {
    if (i < m.rows && j < m.cols && m.allowed(i, j)) return -m.at(i, j);
    return 0.0;
  };

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<double> minv(n + 1);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
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
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> row_to_col(n, n);
  for (std::size_t j = 1; j <= n; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  std::vector<char> col_used(m.cols, 0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const std::size_t j = row_to_col[i];
    if (j < m.cols && m.allowed(i, j)) {
      out.pairs.emplace_back(i, j);
      out.total += m.at(i, j);
      col_used[j] = 1;
    } else {
      out.unmatched_rows.push_back(i);
    }
  }
  for (std::size_t j = 0; j < m.cols; ++j) {
    if (!col_used[j]) out.unmatched_cols.push_back(j);
  }
  return out;
}

}  // namespace hfsg
