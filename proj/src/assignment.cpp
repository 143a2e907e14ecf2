#include "sensefuse/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>

namespace sensefuse::assignment {

namespace {

double sum_entries(const Eigen::MatrixXd& cost, const std::vector<int>& row_to_col) {
  double total = 0.0;
  for (int i = 0; i < static_cast<int>(row_to_col.size()); ++i) {
    total += cost(i, row_to_col[i]);
  }
  return total;
}

// Kuhn's augmenting-path matching on the finite-entry pattern. Returns false
// when some row cannot be matched.
bool has_perfect_row_matching(const Eigen::MatrixXd& cost) {
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  std::vector<int> col_owner(cols, -1);
  std::vector<char> visited(cols, 0);

  std::function<bool(int)> augment = [&](int row) -> bool {
    for (int j = 0; j < cols; ++j) {
      if (visited[j] || !std::isfinite(cost(row, j))) continue;
      visited[j] = 1;
      if (col_owner[j] < 0 || augment(col_owner[j])) {
        col_owner[j] = row;
        return true;
      }
    }
    return false;
  };

  for (int i = 0; i < rows; ++i) {
    std::fill(visited.begin(), visited.end(), 0);
    if (!augment(i)) return false;
  }
  return true;
}

// Forward auction for the asymmetric minimization problem on integer-valued
// costs (stored exactly in doubles). Epsilon scaling: start at max|c|/2 and
// divide by 5 until eps < 1/(rows+1), which guarantees optimality on the
// integer grid. Prices are warm-started across phases.
std::vector<int> auction_int(const Eigen::MatrixXd& cost) {
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  double max_abs = 0.0;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      if (std::isfinite(cost(i, j))) max_abs = std::max(max_abs, std::abs(cost(i, j)));
    }
  }
  const double big_bid = (2.0 * max_abs + 1.0) * (rows + 1);
  const double eps_final = 1.0 / (rows + 1);
  double eps = std::max(1.0, max_abs) / 2.0;

  std::vector<double> price(cols, 0.0);
  std::vector<int> owner(cols, -1);
  std::vector<int> assign(rows, -1);

  while (true) {
    std::fill(owner.begin(), owner.end(), -1);
    std::fill(assign.begin(), assign.end(), -1);
    std::vector<int> pending(rows);
    for (int i = 0; i < rows; ++i) pending[i] = rows - 1 - i;

    while (!pending.empty()) {
      const int i = pending.back();
      pending.pop_back();

      int best_j = -1;
      double best_v = kInf;
      double second_v = kInf;
      for (int j = 0; j < cols; ++j) {
        if (!std::isfinite(cost(i, j))) continue;
        const double v = cost(i, j) + price[j];
        if (v < best_v) {
          second_v = best_v;
          best_v = v;
          best_j = j;
        } else if (v < second_v) {
          second_v = v;
        }
      }
      if (best_j < 0) {
        throw InfeasibleError("auction: row has no finite entry");
      }
      price[best_j] += (std::isfinite(second_v) ? second_v - best_v : big_bid) + eps;
      if (owner[best_j] >= 0) {
        assign[owner[best_j]] = -1;
        pending.push_back(owner[best_j]);
      }
      owner[best_j] = i;
      assign[i] = best_j;
    }
    if (eps < eps_final) break;
    eps /= 5.0;
  }
  return assign;
}

// Exact Jonker-Volgenant style shortest augmenting path; works directly on
// double costs and supports +inf arcs and rectangular rows <= cols. Column
// potentials are returned for reduced-cost queries when requested.
std::vector<int> jv_solve(const Eigen::MatrixXd& cost,
                          std::vector<double>* potentials = nullptr) {
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  std::vector<double> v(cols, 0.0);
  std::vector<int> col_owner(cols, -1);
  std::vector<int> row_to_col(rows, -1);

  for (int r = 0; r < rows; ++r) {
    std::vector<double> dist(cols, kInf);
    std::vector<int> pred(cols, r);
    std::vector<char> done(cols, 0);
    for (int j = 0; j < cols; ++j) {
      if (std::isfinite(cost(r, j))) dist[j] = cost(r, j) - v[j];
    }
    int sink = -1;
    double sink_dist = 0.0;
    while (true) {
      int jmin = -1;
      double dmin = kInf;
      for (int j = 0; j < cols; ++j) {
        if (!done[j] && dist[j] < dmin) {
          dmin = dist[j];
          jmin = j;
        }
      }
      if (jmin < 0) {
        throw InfeasibleError("assignment: no feasible assignment with finite cost");
      }
      done[jmin] = 1;
      if (col_owner[jmin] < 0) {
        sink = jmin;
        sink_dist = dmin;
        break;
      }
      const int i = col_owner[jmin];
      const double base = dmin - (cost(i, jmin) - v[jmin]);
      for (int j = 0; j < cols; ++j) {
        if (done[j] || !std::isfinite(cost(i, j))) continue;
        const double nd = base + cost(i, j) - v[j];
        if (nd < dist[j]) {
          dist[j] = nd;
          pred[j] = i;
        }
      }
    }
    for (int j = 0; j < cols; ++j) {
      if (done[j] && j != sink) v[j] += dist[j] - sink_dist;
    }
    int j = sink;
    while (true) {
      const int i = pred[j];
      col_owner[j] = i;
      std::swap(row_to_col[i], j);
      if (i == r) break;
    }
  }
  if (potentials != nullptr) *potentials = std::move(v);
  return row_to_col;
}

Eigen::MatrixXd scale_to_integers(const Eigen::MatrixXd& cost) {
  double max_abs = 0.0;
  for (int i = 0; i < cost.rows(); ++i) {
    for (int j = 0; j < cost.cols(); ++j) {
      if (std::isfinite(cost(i, j))) max_abs = std::max(max_abs, std::abs(cost(i, j)));
    }
  }
  const double scale = max_abs > 0.0 ? std::ldexp(1.0, 40) / max_abs : 1.0;
  Eigen::MatrixXd out = cost;
  for (int i = 0; i < cost.rows(); ++i) {
    for (int j = 0; j < cost.cols(); ++j) {
      if (std::isfinite(cost(i, j))) out(i, j) = std::nearbyint(cost(i, j) * scale);
    }
  }
  return out;
}

// Exact optimum of the subproblem over the unused rows/columns of the
// integer-grid matrix. Matrices in this artifact are small, so rebuilding a
// dense submatrix per query is fine.
double masked_optimum(const Eigen::MatrixXd& int_cost, int first_row,
                      const std::vector<char>& col_used) {
  std::vector<int> cols;
  for (int j = 0; j < int_cost.cols(); ++j) {
    if (!col_used[j]) cols.push_back(j);
  }
  const int rows = static_cast<int>(int_cost.rows()) - first_row;
  if (rows == 0) return 0.0;
  Eigen::MatrixXd sub(rows, cols.size());
  for (int a = 0; a < rows; ++a) {
    for (size_t b = 0; b < cols.size(); ++b) {
      sub(a, b) = int_cost(first_row + a, cols[b]);
    }
  }
  const std::vector<int> sol = jv_solve(sub);
  double total = 0.0;
  for (int a = 0; a < rows; ++a) total += sub(a, sol[a]);
  return total;
}

// Rewrites an optimal assignment on the integer grid into the
// lexicographically smallest optimal one. Candidate columns are limited to
// zero reduced-cost entries (necessary for membership in any optimal
// assignment), so untied matrices incur no extra solves.
void lexicographic_polish(const Eigen::MatrixXd& int_cost, const std::vector<double>& v,
                          const std::vector<int>& jv_solution,
                          std::vector<int>& row_to_col) {
  const int rows = static_cast<int>(int_cost.rows());
  const int cols = static_cast<int>(int_cost.cols());
  const double optimum = sum_entries(int_cost, jv_solution);
  if (sum_entries(int_cost, row_to_col) != optimum) {
    row_to_col = jv_solution;
  }
  std::vector<char> col_used(cols, 0);
  double fixed_cost = 0.0;

  for (int i = 0; i < rows; ++i) {
    const double u = int_cost(i, jv_solution[i]) - v[jv_solution[i]];
    std::vector<int> candidates;
    for (int j = 0; j < cols; ++j) {
      if (col_used[j] || !std::isfinite(int_cost(i, j))) continue;
      if (int_cost(i, j) - u - v[j] == 0.0) candidates.push_back(j);
    }
    int chosen = -1;
    for (const int j : candidates) {
      if (candidates.size() == 1) {
        chosen = j;
        break;
      }
      col_used[j] = 1;
      bool completes = false;
      try {
        completes =
            fixed_cost + int_cost(i, j) + masked_optimum(int_cost, i + 1, col_used) == optimum;
      } catch (const InfeasibleError&) {
      }
      col_used[j] = 0;
      if (completes) {
        chosen = j;
        break;
      }
    }
    if (chosen < 0) {
      chosen = row_to_col[i];  // duals inconsistent; keep the solver's choice
    }
    row_to_col[i] = chosen;
    col_used[chosen] = 1;
    fixed_cost += int_cost(i, chosen);
  }
}

void validate_shape(const Eigen::MatrixXd& cost) {
  if (cost.rows() == 0) {
    throw std::invalid_argument("assignment: empty cost matrix");
  }
  if (cost.rows() > cost.cols()) {
    throw std::invalid_argument("assignment: requires rows <= cols (pad if needed)");
  }
}

}  // namespace

Assignment solve(const Eigen::MatrixXd& cost) {
  validate_shape(cost);
  if (!has_perfect_row_matching(cost)) {
    throw InfeasibleError("assignment: no feasible assignment with finite cost");
  }
  const Eigen::MatrixXd grid = scale_to_integers(cost);
  std::vector<int> row_to_col = auction_int(grid);
  std::vector<double> potentials;
  const std::vector<int> jv_solution = jv_solve(grid, &potentials);
  lexicographic_polish(grid, potentials, jv_solution, row_to_col);
  return Assignment{row_to_col, sum_entries(cost, row_to_col)};
}

Assignment solve_hungarian(const Eigen::MatrixXd& cost) {
  validate_shape(cost);
  if (!has_perfect_row_matching(cost)) {
    throw InfeasibleError("assignment: no feasible assignment with finite cost");
  }
  const std::vector<int> row_to_col = jv_solve(cost);
  return Assignment{row_to_col, sum_entries(cost, row_to_col)};
}

std::vector<Assignment> k_best(const Eigen::MatrixXd& cost, int k) {
  if (k < 1) {
    throw std::invalid_argument("k_best: k must be >= 1");
  }
  validate_shape(cost);

  struct Node {
    Eigen::MatrixXd cost;
    Assignment solution;
  };
  auto later = [](const Node& a, const Node& b) {
    if (a.solution.total_cost != b.solution.total_cost) {
      return a.solution.total_cost > b.solution.total_cost;
    }
    return a.solution.row_to_col > b.solution.row_to_col;
  };
  std::priority_queue<Node, std::vector<Node>, decltype(later)> queue(later);

  try {
    queue.push(Node{cost, solve(cost)});
  } catch (const InfeasibleError&) {
    return {};
  }

  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  std::vector<Assignment> results;
  while (!queue.empty() && static_cast<int>(results.size()) < k) {
    Node best = queue.top();
    queue.pop();
    results.push_back(best.solution);
    if (static_cast<int>(results.size()) >= k) break;

    // Murty partition around the popped solution: child t forbids pair t and
    // keeps pairs 0..t-1 forced.
    Eigen::MatrixXd constrained = best.cost;
    for (int t = 0; t < rows; ++t) {
      const int fix_col = best.solution.row_to_col[t];
      Eigen::MatrixXd child = constrained;
      child(t, fix_col) = kInf;
      try {
        const std::vector<int> sol = jv_solve(child);
        queue.push(Node{std::move(child), Assignment{sol, sum_entries(cost, sol)}});
      } catch (const InfeasibleError&) {
      }
      for (int j = 0; j < cols; ++j) {
        if (j != fix_col) constrained(t, j) = kInf;
      }
      for (int i = 0; i < rows; ++i) {
        if (i != t) constrained(i, fix_col) = kInf;
      }
    }
  }
  return results;
}

}  // namespace sensefuse::assignment
