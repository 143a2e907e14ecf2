#pragma once

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <vector>

namespace sensefuse::assignment {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Assignment {
  std::vector<int> row_to_col;
  double total_cost{0.0};
};

/// Minimizes tr(A^T C) with every row assigned to exactly one column and
/// every column used at most once. Requires rows <= cols; +inf entries are
/// forbidden pairings. Ties are broken toward the lexicographically
/// smallest row->col mapping. Throws InfeasibleError when no assignment
/// with finite cost exists.
Assignment solve(const Eigen::MatrixXd& cost);

/// Exact shortest-augmenting-path backend. Used as an internal cross-check
/// against the auction path in `solve`.
Assignment solve_hungarian(const Eigen::MatrixXd& cost);

/// The k lowest-cost distinct assignments in nondecreasing cost order
/// (fewer if fewer exist); empty when the matrix is infeasible.
std::vector<Assignment> k_best(const Eigen::MatrixXd& cost, int k);

}  // namespace sensefuse::assignment
