#include "sensefuse/config.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <sstream>

namespace sensefuse {

namespace {

using json = nlohmann::ordered_json;

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

int line_of_byte(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

template <typename T>
void read_field(const json& obj, const char* section, const char* key, T& out,
                const std::string& path) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(path, std::string(section) + "." + key + ": " + e.what());
  }
}

void read_vec3(const json& obj, const char* section, const char* key,
               Eigen::Vector3d& out, const std::string& path) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != 3) {
    fail(path, std::string(section) + "." + key + ": expected an array of 3 numbers");
  }
  for (int i = 0; i < 3; ++i) {
    if (!v[i].is_number()) {
      fail(path, std::string(section) + "." + key + ": expected an array of 3 numbers");
    }
    out(i) = v[i].get<double>();
  }
}

}  // namespace

Scenario RunConfig::build_scenario() const {
  Scenario out;
  out.bs = scenario.bs;
  out.fov_sp = scenario.fov_sp;
  const double a = scenario.arena_half_size;
  out.surfaces = {
      Surface{Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(a, 0, 0)},
      Surface{Eigen::Vector3d(-1, 0, 0), Eigen::Vector3d(-a, 0, 0)},
      Surface{Eigen::Vector3d(0, 1, 0), Eigen::Vector3d(0, a, 0)},
      Surface{Eigen::Vector3d(0, -1, 0), Eigen::Vector3d(0, -a, 0)},
  };
  const double r = scenario.sp_ring;
  out.sps = {
      Eigen::Vector3d(r, r, scenario.sp_height),
      Eigen::Vector3d(-r, r, scenario.sp_height),
      Eigen::Vector3d(-r, -r, scenario.sp_height),
      Eigen::Vector3d(r, -r, scenario.sp_height),
  };
  UEState start;
  start.position = Eigen::Vector3d(scenario.ue_radius, 0.0, scenario.ue_height);
  start.heading = kPi / 2.0;  // tangent, counterclockwise
  start.clock_bias = scenario.clock_bias;
  out.trajectory =
      generate_trajectory(ue_speed(), ue_turn_rate(), start, scenario.steps, scenario.dt);
  return out;
}

double RunConfig::ue_turn_rate() const {
  return 2.0 * kPi / (scenario.steps * scenario.dt);  // one cycle per run
}

double RunConfig::ue_speed() const {
  return scenario.ue_radius * ue_turn_rate();
}

FilterParams RunConfig::build_filter_params() const {
  FilterParams p;
  p.detection_prob = filter.detection_prob;
  p.gate_prob = filter.gate_prob;
  p.num_da = filter.num_da;
  p.clutter_log_density_bistatic = noise.clutter_log_density(Modality::kBistatic);
  p.clutter_log_density_monostatic = noise.clutter_log_density(Modality::kMonostatic);

  Vector5d q;
  const double sb = filter.sigma_bias_m / kSpeedOfLight;
  q << filter.sigma_pos * filter.sigma_pos, filter.sigma_pos * filter.sigma_pos,
      filter.sigma_z * filter.sigma_z,
      (filter.sigma_heading_deg * kDeg) * (filter.sigma_heading_deg * kDeg), sb * sb;
  p.process_noise = q.asDiagonal();

  Eigen::Vector3d w;
  w << filter.mono_walk_sigma * filter.mono_walk_sigma,
      filter.mono_walk_sigma * filter.mono_walk_sigma,
      filter.mono_walk_sigma_z * filter.mono_walk_sigma_z;
  p.mono_walk_noise = w.asDiagonal();

  p.speed = ue_speed();
  p.turn_rate = ue_turn_rate();
  p.dt = scenario.dt;

  p.report_threshold = filter.report_threshold;
  p.hyp_prune_weight = filter.hyp_prune_weight;
  p.recycle_threshold = filter.recycle_threshold;
  p.max_bernoullis = filter.max_bernoullis;
  p.fov_sp = scenario.fov_sp;

  // Birth mixture: eight wide components on a ring inside the arena, one at
  // the center, one broad umbrella over the whole scene (VAs live outside
  // the walls).
  const double ring = scenario.arena_half_size;
  const double z_mid = 0.5 * scenario.bs.z();
  const double mass = filter.birth_mass / 10.0;
  auto component = [&](const Eigen::Vector3d& mean, double sigma_xy, int slot) {
    PPPComponent c;
    c.weight = mass;
    c.density.mean = mean;
    Eigen::Vector3d d(sigma_xy * sigma_xy, sigma_xy * sigma_xy, 20.0 * 20.0);
    c.density.cov = d.asDiagonal();
    c.birth_slot = slot;
    return c;
  };
  for (int k = 0; k < 8; ++k) {
    const double phi = 2.0 * kPi * k / 8.0;
    p.birth.components.push_back(component(
        Eigen::Vector3d(ring * std::cos(phi), ring * std::sin(phi), z_mid), ring, k));
  }
  // Center coverage, offset from the BS vertical (a mean straight under the
  // BS has no azimuth linearization).
  p.birth.components.push_back(
      component(Eigen::Vector3d(0.15 * ring, 0.15 * ring, z_mid), ring, 8));
  p.birth.components.push_back(
      component(Eigen::Vector3d(-0.15 * ring, -0.15 * ring, z_mid), 2.0 * ring, 9));
  return p;
}

FusionParams RunConfig::build_fusion_params() const {
  FusionParams p;
  p.gate = fusion.gate;
  p.period = fusion.period;
  return p;
}

UEPosterior RunConfig::build_ue_prior() const {
  UEPosterior prior;
  UEState start;
  start.position = Eigen::Vector3d(scenario.ue_radius, 0.0, scenario.ue_height);
  start.heading = kPi / 2.0;
  start.clock_bias = scenario.clock_bias;
  prior.density.mean = start.to_vector();
  Vector5d d;
  const double sb = filter.prior_sigma_bias_m / kSpeedOfLight;
  d << filter.prior_sigma_pos * filter.prior_sigma_pos,
      filter.prior_sigma_pos * filter.prior_sigma_pos,
      filter.prior_sigma_z * filter.prior_sigma_z,
      (filter.prior_sigma_heading_deg * kDeg) * (filter.prior_sigma_heading_deg * kDeg),
      sb * sb;
  prior.density.cov = d.asDiagonal();
  return prior;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError(path + ": cannot open config file");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(path, "line " + std::to_string(line_of_byte(text, e.byte)) + ": " + e.what());
  }

  RunConfig cfg;
  if (root.contains("scenario")) {
    const json& s = root.at("scenario");
    read_vec3(s, "scenario", "bs", cfg.scenario.bs, path);
    read_field(s, "scenario", "arena_half_size", cfg.scenario.arena_half_size, path);
    read_field(s, "scenario", "sp_ring", cfg.scenario.sp_ring, path);
    read_field(s, "scenario", "sp_height", cfg.scenario.sp_height, path);
    read_field(s, "scenario", "ue_radius", cfg.scenario.ue_radius, path);
    read_field(s, "scenario", "ue_height", cfg.scenario.ue_height, path);
    read_field(s, "scenario", "steps", cfg.scenario.steps, path);
    read_field(s, "scenario", "dt", cfg.scenario.dt, path);
    read_field(s, "scenario", "clock_bias", cfg.scenario.clock_bias, path);
    read_field(s, "scenario", "fov_sp", cfg.scenario.fov_sp, path);
  }
  if (root.contains("noise")) {
    const json& s = root.at("noise");
    double sigma_toa_m = cfg.noise.sigma_toa * kSpeedOfLight;
    double sigma_angle_deg = cfg.noise.sigma_angle / kDeg;
    read_field(s, "noise", "sigma_toa_m", sigma_toa_m, path);
    read_field(s, "noise", "sigma_angle_deg", sigma_angle_deg, path);
    cfg.noise.sigma_toa = sigma_toa_m / kSpeedOfLight;
    cfg.noise.sigma_angle = sigma_angle_deg * kDeg;
    read_field(s, "noise", "distance_scaling", cfg.noise.distance_scaling, path);
    read_field(s, "noise", "distance_ref_m", cfg.noise.distance_ref, path);
    read_field(s, "noise", "mono_scale", cfg.noise.mono_scale, path);
    read_field(s, "noise", "clutter_rate", cfg.noise.clutter_rate, path);
    read_field(s, "noise", "toa_max_bistatic", cfg.noise.toa_max_bistatic, path);
    read_field(s, "noise", "toa_max_mono", cfg.noise.toa_max_mono, path);
  }
  if (root.contains("filter")) {
    const json& s = root.at("filter");
    read_field(s, "filter", "detection_prob", cfg.filter.detection_prob, path);
    read_field(s, "filter", "gate_prob", cfg.filter.gate_prob, path);
    read_field(s, "filter", "num_da", cfg.filter.num_da, path);
    read_field(s, "filter", "sigma_pos", cfg.filter.sigma_pos, path);
    read_field(s, "filter", "sigma_z", cfg.filter.sigma_z, path);
    read_field(s, "filter", "sigma_heading_deg", cfg.filter.sigma_heading_deg, path);
    read_field(s, "filter", "sigma_bias_m", cfg.filter.sigma_bias_m, path);
    read_field(s, "filter", "mono_walk_sigma", cfg.filter.mono_walk_sigma, path);
    read_field(s, "filter", "mono_walk_sigma_z", cfg.filter.mono_walk_sigma_z, path);
    read_field(s, "filter", "report_threshold", cfg.filter.report_threshold, path);
    read_field(s, "filter", "birth_mass", cfg.filter.birth_mass, path);
    read_field(s, "filter", "recycle_threshold", cfg.filter.recycle_threshold, path);
    read_field(s, "filter", "hyp_prune_weight", cfg.filter.hyp_prune_weight, path);
    read_field(s, "filter", "max_bernoullis", cfg.filter.max_bernoullis, path);
    read_field(s, "filter", "prior_sigma_pos", cfg.filter.prior_sigma_pos, path);
    read_field(s, "filter", "prior_sigma_z", cfg.filter.prior_sigma_z, path);
    read_field(s, "filter", "prior_sigma_heading_deg", cfg.filter.prior_sigma_heading_deg,
               path);
    read_field(s, "filter", "prior_sigma_bias_m", cfg.filter.prior_sigma_bias_m, path);
  }
  if (root.contains("fusion")) {
    const json& s = root.at("fusion");
    read_field(s, "fusion", "enabled", cfg.fusion.enabled, path);
    read_field(s, "fusion", "period", cfg.fusion.period, path);
    read_field(s, "fusion", "gate", cfg.fusion.gate, path);
  }
  if (root.contains("experiment")) {
    const json& s = root.at("experiment");
    read_field(s, "experiment", "runs", cfg.experiment.runs, path);
    read_field(s, "experiment", "seed", cfg.experiment.seed, path);
    read_field(s, "experiment", "output_dir", cfg.experiment.output_dir, path);
    read_field(s, "experiment", "compare_no_fusion", cfg.experiment.compare_no_fusion,
               path);
  }

  if (cfg.scenario.steps < 1) fail(path, "scenario.steps: must be >= 1");
  if (cfg.scenario.fov_sp <= 0.0) fail(path, "scenario.fov_sp: must be > 0");
  if (cfg.experiment.runs < 1) fail(path, "experiment.runs: must be >= 1");
  if (cfg.fusion.period < 1) fail(path, "fusion.period: must be >= 1");
  if (cfg.fusion.gate <= 0.0) fail(path, "fusion.gate: must be > 0");
  if (!(cfg.filter.detection_prob > 0.0 && cfg.filter.detection_prob <= 1.0)) {
    fail(path, "filter.detection_prob: must be in (0, 1]");
  }
  if (cfg.filter.num_da < 1) fail(path, "filter.num_da: must be >= 1");
  return cfg;
}

std::string resolved_config_json(const RunConfig& cfg) {
  json root;
  root["scenario"] = {
      {"bs", {cfg.scenario.bs.x(), cfg.scenario.bs.y(), cfg.scenario.bs.z()}},
      {"arena_half_size", cfg.scenario.arena_half_size},
      {"sp_ring", cfg.scenario.sp_ring},
      {"sp_height", cfg.scenario.sp_height},
      {"ue_radius", cfg.scenario.ue_radius},
      {"ue_height", cfg.scenario.ue_height},
      {"steps", cfg.scenario.steps},
      {"dt", cfg.scenario.dt},
      {"clock_bias", cfg.scenario.clock_bias},
      {"fov_sp", cfg.scenario.fov_sp},
  };
  root["noise"] = {
      {"sigma_toa_m", cfg.noise.sigma_toa * kSpeedOfLight},
      {"sigma_angle_deg", cfg.noise.sigma_angle / kDeg},
      {"distance_scaling", cfg.noise.distance_scaling},
      {"distance_ref_m", cfg.noise.distance_ref},
      {"mono_scale", cfg.noise.mono_scale},
      {"clutter_rate", cfg.noise.clutter_rate},
      {"toa_max_bistatic", cfg.noise.toa_max_bistatic},
      {"toa_max_mono", cfg.noise.toa_max_mono},
  };
  root["filter"] = {
      {"detection_prob", cfg.filter.detection_prob},
      {"gate_prob", cfg.filter.gate_prob},
      {"num_da", cfg.filter.num_da},
      {"sigma_pos", cfg.filter.sigma_pos},
      {"sigma_z", cfg.filter.sigma_z},
      {"sigma_heading_deg", cfg.filter.sigma_heading_deg},
      {"sigma_bias_m", cfg.filter.sigma_bias_m},
      {"mono_walk_sigma", cfg.filter.mono_walk_sigma},
      {"mono_walk_sigma_z", cfg.filter.mono_walk_sigma_z},
      {"report_threshold", cfg.filter.report_threshold},
      {"birth_mass", cfg.filter.birth_mass},
      {"recycle_threshold", cfg.filter.recycle_threshold},
      {"hyp_prune_weight", cfg.filter.hyp_prune_weight},
      {"max_bernoullis", cfg.filter.max_bernoullis},
      {"prior_sigma_pos", cfg.filter.prior_sigma_pos},
      {"prior_sigma_z", cfg.filter.prior_sigma_z},
      {"prior_sigma_heading_deg", cfg.filter.prior_sigma_heading_deg},
      {"prior_sigma_bias_m", cfg.filter.prior_sigma_bias_m},
  };
  root["fusion"] = {
      {"enabled", cfg.fusion.enabled},
      {"period", cfg.fusion.period},
      {"gate", cfg.fusion.gate},
  };
  root["experiment"] = {
      {"runs", cfg.experiment.runs},
      {"seed", cfg.experiment.seed},
      {"output_dir", cfg.experiment.output_dir},
      {"compare_no_fusion", cfg.experiment.compare_no_fusion},
  };
  return root.dump(2) + "\n";
}

}  // namespace sensefuse
