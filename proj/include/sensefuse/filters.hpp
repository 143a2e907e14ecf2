#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "sensefuse/geometry.hpp"
#include "sensefuse/rfs.hpp"

namespace sensefuse {

enum class Modality { kBistatic, kMonostatic };

const char* to_string(Modality modality);

/// A scan: channel-parameter vectors with per-measurement covariance.
/// Bistatic vectors are 5-dim [toa, aoa_az, aoa_el, aod_az, aod_el],
/// monostatic 3-dim [toa, az, el].
struct MeasurementSet {
  Modality modality{Modality::kBistatic};
  std::vector<Eigen::VectorXd> values;
  std::vector<Eigen::MatrixXd> covariances;

  int size() const { return static_cast<int>(values.size()); }
};

/// Marginal UE posterior over [x, y, z, heading, clock_bias].
struct UEPosterior {
  Gaussian density;
};

struct FilterParams {
  double detection_prob = 0.9;
  // Log of the assumed clutter spatial density (clutter rate over the
  // measurement-space volume) per modality.
  double clutter_log_density_bistatic = 0.0;
  double clutter_log_density_monostatic = 0.0;
  double gate_prob = 0.999;
  int num_da = 10;  // data-association hypotheses kept per update

  Matrix5d process_noise = Matrix5d::Zero();          // UE state, per step
  Eigen::Matrix3d mono_walk_noise = Eigen::Matrix3d::Zero();  // passive UE

  // Known constant-turn-rate control of the UE transition.
  double speed = 0.0;
  double turn_rate = 0.0;
  double dt = 1.0;

  // Housekeeping.
  double report_threshold = 0.5;
  double hyp_prune_weight = 1e-4;
  double recycle_threshold = 1e-3;
  int max_bernoullis = 50;
  double ppp_prune_weight = 1e-6;
  int max_ppp_components = 200;

  // Per-scan birth intensity, injected during prediction.
  PPPIntensity birth;

  // SP paths are only received inside this range from the UE; 0 disables
  // the gate (detection probability then constant for every model).
  double fov_sp = 50.0;
};

const FilterParams& validate(const FilterParams& params);

struct FilterState {
  Modality modality{Modality::kBistatic};
  Eigen::Vector3d bs{Eigen::Vector3d::Zero()};
  PMBMap map;
  UEPosterior ue;                  // bistatic only
  std::optional<int> ue_track_id;  // monostatic: designated UE Bernoulli
  int next_bernoulli_id = 0;
};

FilterState make_bistatic_filter(const Eigen::Vector3d& bs, const UEPosterior& prior,
                                 const FilterParams& params);
FilterState make_monostatic_filter(const Eigen::Vector3d& bs, const FilterParams& params);

void predict(FilterState& fs, const FilterParams& params);

struct UpdateDiagnostics {
  int num_hypotheses = 0;
  double hypothesis_weight_sum = 0.0;  // after normalization; 1 up to fp error
};

void update(FilterState& fs, const MeasurementSet& z, const FilterParams& params,
            UpdateDiagnostics* diag = nullptr);

struct Estimate {
  std::optional<UEState> ue_state;              // bistatic posterior mean
  std::optional<Eigen::Vector3d> ue_position;   // monostatic designated track
  // Landmarks with existence above the report threshold, labeled by their
  // highest-weight model (VA/SP for bistatic maps, IP for monostatic).
  std::vector<std::pair<LandmarkKind, Eigen::Vector3d>> landmarks;
  // Monostatic only: VA/SP views of fusion-resolved components, expressed in
  // the landmark's own space (VA location recovered from the IP).
  std::vector<std::pair<LandmarkKind, Eigen::Vector3d>> resolved;
};

Estimate estimate(const FilterState& fs, const FilterParams& params);

/// Constant-turn-rate transition of the UE state (exact integrated form;
/// straight line in the zero-turn-rate limit). Heading advances by
/// turn_rate * dt, z and clock bias are unchanged.
Vector5d ue_transition(const Vector5d& s, double speed, double turn_rate, double dt);

/// Jacobian of ue_transition with respect to the state.
Matrix5d ue_transition_jacobian(const Vector5d& s, double speed, double turn_rate,
                                double dt);

}  // namespace sensefuse
