#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "sensefuse/filters.hpp"
#include "sensefuse/fusion.hpp"
#include "sensefuse/geometry.hpp"
#include "sensefuse/metrics.hpp"

namespace sensefuse {

struct Scenario {
  Eigen::Vector3d bs{0.0, 0.0, 10.0};
  std::vector<Surface> surfaces;        // one VA per surface
  std::vector<Eigen::Vector3d> sps;
  std::vector<UEState> trajectory;
  double fov_sp = 50.0;                 // UE field of view for SP paths [m]

  std::vector<Eigen::Vector3d> vas() const;
  /// Monostatic ground-truth IPs: the BS projections onto the surfaces plus
  /// the SPs themselves.
  std::vector<Eigen::Vector3d> mono_ips() const;
};

struct NoiseModel {
  double sigma_toa = 0.3 / kSpeedOfLight;  // [s]; default 0.3 m of range
  double sigma_angle = 0.5 * 0.017453292519943295;  // [rad]; default 0.5 deg
  bool distance_scaling = false;  // scale sigmas by (path length / ref)^2
  double distance_ref = 10.0;     // [m]
  double mono_scale = 0.5;        // monostatic sigmas relative to bistatic
  double clutter_rate = 2.0;      // expected clutter per scan per modality
  // Clutter support box: ToA uniform in [0, toa_max], azimuths uniform in
  // (-pi, pi], elevations uniform in [-pi/2, pi/2].
  double toa_max_bistatic = 6.0e-7;  // [s]
  double toa_max_mono = 4.0e-7;      // [s]

  Eigen::MatrixXd bistatic_covariance(double path_length_m) const;
  Eigen::MatrixXd mono_covariance(double path_length_m) const;
  double clutter_log_density(Modality modality) const;
};

/// Constant-turn-rate trajectory on the x-y plane, heading tangent to the
/// motion; z and clock bias stay at their starting values.
std::vector<UEState> generate_trajectory(double speed, double turn_rate,
                                         const UEState& start, int steps, double dt);

/// Measurement synthesis for one time step (1-based index into the
/// trajectory). Detections are Bernoulli-thinned at p_D, clutter is Poisson
/// over the support box, and the measurement order is shuffled.
void synthesize(const Scenario& scenario, const NoiseModel& noise, double detection_prob,
                int step, std::uint64_t seed, MeasurementSet* z_bistatic,
                MeasurementSet* z_monostatic);

struct StepRecord {
  int run = 0;
  int step = 0;             // 1-based
  bool fused_run = false;   // fusion enabled in this pass
  GospaResult bistatic_va;
  GospaResult bistatic_sp;
  GospaResult mono_ip;
  GospaResult mono_va;
  GospaResult mono_sp;
  double bistatic_pos_err = 0.0;      // [m]
  double bistatic_heading_err = 0.0;  // [rad], wrapped
  double bistatic_bias_err = 0.0;     // [m] (bias error times c)
  std::optional<double> mono_pos_err;  // [m]; empty before UE designation
};

struct SummaryRow {
  Modality modality{};
  bool fused = false;
  double rmse_pos = 0.0;
  double rmse_heading_deg = 0.0;  // NaN for monostatic
  double rmse_bias = 0.0;         // [m]; NaN for monostatic
  int samples = 0;                // step count entering the position RMSE
};

struct RunReport {
  std::vector<StepRecord> records;
  std::vector<SummaryRow> summary;
};

struct RunConfig;  // defined in config.hpp

RunReport run_experiment(const RunConfig& config);

}  // namespace sensefuse
