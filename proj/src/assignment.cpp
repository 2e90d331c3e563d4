#include "dmst/assignment.hpp"

#include <limits>

#include "dmst/error.hpp"

namespace dmst {

namespace {

// Rows must not outnumber columns here; solve_assignment handles the
// transpose. Indices are 1-based internally, column 0 is the virtual source.
std::vector<int> hungarian_rows_leq_cols(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> match(m + 1, 0);  // match[j] = row assigned to column j
  std::vector<int> way(m + 1, 0);

  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
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

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j)
    if (match[j] != 0) row_to_col[match[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  const int r = static_cast<int>(cost.rows());
  const int c = static_cast<int>(cost.cols());
  if (r == 0 || c == 0) return std::vector<int>(r, -1);
  if (!cost.allFinite())
    fail(ErrorCode::Internal, "assignment costs must be finite");
  if (r <= c) return hungarian_rows_leq_cols(cost);
  const std::vector<int> col_to_row = hungarian_rows_leq_cols(cost.transpose());
  std::vector<int> row_to_col(r, -1);
  for (int j = 0; j < c; ++j) row_to_col[col_to_row[j]] = j;
  return row_to_col;
}

double assignment_cost(const Eigen::MatrixXd& cost, const std::vector<int>& row_to_col) {
  double total = 0.0;
  for (int i = 0; i < static_cast<int>(row_to_col.size()); ++i)
    if (row_to_col[i] >= 0) total += cost(i, row_to_col[i]);
  return total;
}

}  // namespace dmst
