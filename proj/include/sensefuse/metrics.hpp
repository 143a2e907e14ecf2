#pragma once

#include <Eigen/Dense>
#include <vector>

namespace sensefuse {

struct GospaParams {
  double cutoff = 20.0;  // c [m]
  double order = 2.0;    // p
  double alpha = 2.0;    // fixed at 2 (per-target decomposition form)
};

struct GospaResult {
  double total = 0.0;         // the metric value
  double localization = 0.0;  // (sum of matched d^p)^(1/p)
  int missed = 0;
  int false_alarms = 0;
};

/// GOSPA distance with alpha = 2: minimum over partial assignments of
/// (sum matched d^p + (c^p/2)(missed + false))^(1/p). Matches beyond the
/// cutoff count as a miss plus a false alarm.
GospaResult gospa(const std::vector<Eigen::Vector3d>& estimates,
                  const std::vector<Eigen::Vector3d>& truth,
                  const GospaParams& params);

/// Component-wise root mean square over a list of error vectors. All vectors
/// must share the same dimension; angle components must be wrapped upstream.
Eigen::VectorXd rmse(const std::vector<Eigen::VectorXd>& errors);

/// Signed heading residual a - b wrapped to (-pi, pi].
double heading_error(double a, double b);

}  // namespace sensefuse
