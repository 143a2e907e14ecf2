#include "sensefuse/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "sensefuse/assignment.hpp"
#include "sensefuse/geometry.hpp"

namespace sensefuse {

GospaResult gospa(const std::vector<Eigen::Vector3d>& estimates,
                  const std::vector<Eigen::Vector3d>& truth,
                  const GospaParams& params) {
  if (!(params.cutoff > 0.0) || !(params.order >= 1.0) || params.alpha != 2.0) {
    throw std::invalid_argument("gospa: invalid parameters (need c > 0, p >= 1, alpha = 2)");
  }
  const double c = params.cutoff;
  const double p = params.order;
  const double cp = std::pow(c, p);
  const int n = static_cast<int>(estimates.size());
  const int m = static_cast<int>(truth.size());

  GospaResult out;
  double loc_p = 0.0;
  int matched = 0;

  if (n > 0 && m > 0) {
    // Columns: truths then one dummy per estimate. A real match at capped
    // cost ties with the miss+false alternative, so entries are offset by
    // -c^p and the constant is restored afterwards.
    Eigen::MatrixXd cost(n, m + n);
    cost.setConstant(assignment::kInf);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) {
        const double d = (estimates[i] - truth[j]).norm();
        cost(i, j) = std::pow(std::min(d, c), p) - cp;
      }
      cost(i, m + i) = 0.0;
    }
    const assignment::Assignment best = assignment::solve(cost);
    for (int i = 0; i < n; ++i) {
      const int j = best.row_to_col[i];
      if (j >= m) continue;
      const double d = (estimates[i] - truth[j]).norm();
      if (d >= c) continue;  // cap ties count as unassigned
      loc_p += std::pow(d, p);
      ++matched;
    }
  }

  out.missed = m - matched;
  out.false_alarms = n - matched;
  out.localization = std::pow(loc_p, 1.0 / p);
  out.total = std::pow(loc_p + 0.5 * cp * (out.missed + out.false_alarms), 1.0 / p);
  return out;
}

Eigen::VectorXd rmse(const std::vector<Eigen::VectorXd>& errors) {
  if (errors.empty()) {
    throw std::invalid_argument("rmse: empty input");
  }
  const auto dim = errors.front().size();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
  for (const auto& e : errors) {
    if (e.size() != dim) {
      throw std::invalid_argument("rmse: inconsistent error dimensions");
    }
    acc += e.cwiseProduct(e);
  }
  return (acc / static_cast<double>(errors.size())).cwiseSqrt();
}

double heading_error(double a, double b) {
  return wrap_angle(a - b);
}

}  // namespace sensefuse
