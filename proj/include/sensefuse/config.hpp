#pragma once

#include <string>

#include "sensefuse/filters.hpp"
#include "sensefuse/fusion.hpp"
#include "sensefuse/sim.hpp"

namespace sensefuse {

/// Raised on malformed configuration files; the message carries the file
/// path and, when known, the offending line.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScenarioConfig {
  Eigen::Vector3d bs{0.0, 0.0, 10.0};
  double arena_half_size = 50.0;  // walls at +-this on x and y
  double sp_ring = 25.0;          // SPs at (+-sp_ring, +-sp_ring, sp_height)
  double sp_height = 1.0;
  double ue_radius = 20.0;
  double ue_height = 0.0;
  int steps = 40;
  double dt = 1.0;
  double clock_bias = 1.0e-8;  // [s]
  double fov_sp = 50.0;
};

struct FilterConfig {
  double detection_prob = 0.9;
  double gate_prob = 0.999;
  int num_da = 10;
  double sigma_pos = 0.1;          // process noise, x/y [m per step]
  double sigma_z = 0.01;
  double sigma_heading_deg = 0.5;
  double sigma_bias_m = 0.1;       // clock-bias random walk [m per step]
  double mono_walk_sigma = 3.5;    // passive-UE random walk, x/y [m]
  double mono_walk_sigma_z = 0.1;
  double report_threshold = 0.5;
  double birth_mass = 1.0e-2;      // per scan, spread over the birth mixture
  double recycle_threshold = 1.0e-3;
  double hyp_prune_weight = 1.0e-4;
  int max_bernoullis = 50;
  double prior_sigma_pos = 0.5;    // initial UE prior, x/y [m]
  double prior_sigma_z = 0.1;
  double prior_sigma_heading_deg = 2.0;
  double prior_sigma_bias_m = 0.5;
};

struct FusionConfig {
  bool enabled = true;
  int period = 5;
  double gate = 25.0;
};

struct ExperimentConfig {
  int runs = 100;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  // Also run the matched no-fusion baseline (same seeds) so outputs carry
  // both variants for comparison.
  bool compare_no_fusion = true;
};

struct RunConfig {
  ScenarioConfig scenario;
  NoiseModel noise;
  FilterConfig filter;
  FusionConfig fusion;
  ExperimentConfig experiment;

  Scenario build_scenario() const;
  FilterParams build_filter_params() const;
  FusionParams build_fusion_params() const;
  UEPosterior build_ue_prior() const;
  double ue_speed() const;
  double ue_turn_rate() const;
};

RunConfig load_run_config(const std::string& path);

/// The fully-resolved configuration as pretty-printed JSON (defaults filled
/// in); written next to the run outputs for reproducibility.
std::string resolved_config_json(const RunConfig& config);

}  // namespace sensefuse
