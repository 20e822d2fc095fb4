#include "xsem/assignment.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "xsem/error.h"

namespace xsem {

std::vector<int> AssignmentMax(const std::vector<std::vector<double>>& weights) {
  const int rows = static_cast<int>(weights.size());
  const int cols = rows == 0 ? 0 : static_cast<int>(weights[0].size());
  double top = 0.0;
  for (const auto& row : weights) {
    if (static_cast<int>(row.size()) != cols) {
      throw InputError("assignment matrix rows differ in length");
    }
    for (double w : row) {
      if (!std::isfinite(w) || w < 0.0) {
        throw InputError("assignment weights must be finite and nonnegative");
      }
      top = std::max(top, w);
    }
  }
  std::vector<int> result(rows, -1);
  if (rows == 0 || cols == 0) return result;

  // Square min-cost problem over cost = top - w; padding cells cost `top`.
  const int n = std::max(rows, cols);
  auto cost = [&](int i, int j) {
    return (i < rows && j < cols) ? top - weights[i][j] : top;
  };
  const double inf = std::numeric_limits<double>::infinity();
  // Potentials and matching, 1-based with a virtual column 0.
  std::vector<double> u(n + 1, 0.0);
  std::vector<double> v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0);  // match[col] = row
  std::vector<int> way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
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
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (int j = 1; j <= n; ++j) {
    const int i = match[j] - 1;
    if (i < rows && j - 1 < cols) result[i] = j - 1;
  }
  return result;
}

double AssignmentWeight(const std::vector<std::vector<double>>& weights,
                        const std::vector<int>& rows_to_cols) {
  double total = 0.0;
  for (std::size_t i = 0; i < rows_to_cols.size(); ++i) {
    if (rows_to_cols[i] >= 0) total += weights[i][rows_to_cols[i]];
  }
  return total;
}

}  // namespace xsem
