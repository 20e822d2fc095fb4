#pragma once

#include <vector>

namespace xsem {

// Maximum-weight one-to-one assignment between the rows and the columns of a
// (possibly rectangular) matrix of finite nonnegative weights. Returns, for
// each row, the matched column or -1; min(rows, cols) rows are matched.
// The result is a deterministic function of the matrix.
std::vector<int> AssignmentMax(const std::vector<std::vector<double>>& weights);

double AssignmentWeight(const std::vector<std::vector<double>>& weights,
                        const std::vector<int>& rows_to_cols);

}  // namespace xsem
