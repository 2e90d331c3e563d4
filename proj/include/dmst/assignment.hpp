#pragma once

#include <Eigen/Core>
#include <vector>

namespace dmst {

// Minimum-cost one-to-one assignment (Hungarian algorithm with potentials,
// shortest augmenting path, O(n^2 m)). Works for any finite real costs.
//
// For an r x c matrix the smaller side is matched completely:
//   r <= c: every row gets a column, result[i] = column of row i.
//   r >  c: every column gets a row; unmatched rows have result[i] = -1.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

// Total cost of an assignment, summed in row order (so two equal-cost
// solutions compare bit-identically).
double assignment_cost(const Eigen::MatrixXd& cost, const std::vector<int>& row_to_col);

}  // namespace dmst
