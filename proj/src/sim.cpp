#include "sensefuse/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "sensefuse/config.hpp"

namespace sensefuse {

namespace {

constexpr double kPi = std::numbers::pi;

// splitmix64; decorrelates per-run and per-step streams from a base seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Eigen::VectorXd add_noise(const Eigen::VectorXd& z, const Eigen::MatrixXd& cov,
                          std::mt19937_64& rng) {
  std::normal_distribution<double> unit;
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  Eigen::VectorXd noise(z.size());
  for (int i = 0; i < z.size(); ++i) noise(i) = unit(rng);
  Eigen::VectorXd out = z + llt.matrixL() * noise;
  for (int i = 1; i < out.size(); ++i) out(i) = wrap_angle(out(i));
  return out;
}

// Shuffles measurements and their covariances with one permutation; the
// measurement source order must not leak to the filters.
void shuffle_scan(MeasurementSet& z, std::mt19937_64& rng) {
  std::vector<int> order(z.values.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Eigen::VectorXd> values;
  std::vector<Eigen::MatrixXd> covs;
  values.reserve(order.size());
  covs.reserve(order.size());
  for (const int i : order) {
    values.push_back(std::move(z.values[i]));
    covs.push_back(std::move(z.covariances[i]));
  }
  z.values = std::move(values);
  z.covariances = std::move(covs);
}

}  // namespace

std::vector<Eigen::Vector3d> Scenario::vas() const {
  std::vector<Eigen::Vector3d> out;
  out.reserve(surfaces.size());
  for (const Surface& s : surfaces) out.push_back(reflect_bs(s, bs));
  return out;
}

std::vector<Eigen::Vector3d> Scenario::mono_ips() const {
  std::vector<Eigen::Vector3d> out;
  for (const Surface& s : surfaces) out.push_back(ip_from_va(reflect_bs(s, bs), bs));
  for (const Eigen::Vector3d& sp : sps) out.push_back(sp);
  return out;
}

Eigen::MatrixXd NoiseModel::bistatic_covariance(double path_length_m) const {
  double st = sigma_toa;
  double sa = sigma_angle;
  if (distance_scaling) {
    const double f = (path_length_m / distance_ref) * (path_length_m / distance_ref);
    st *= f;
    sa *= f;
  }
  Eigen::VectorXd d(5);
  d << st * st, sa * sa, sa * sa, sa * sa, sa * sa;
  return d.asDiagonal();
}

Eigen::MatrixXd NoiseModel::mono_covariance(double path_length_m) const {
  double st = sigma_toa * mono_scale;
  double sa = sigma_angle * mono_scale;
  if (distance_scaling) {
    const double f = (path_length_m / distance_ref) * (path_length_m / distance_ref);
    st *= f;
    sa *= f;
  }
  Eigen::VectorXd d(3);
  d << st * st, sa * sa, sa * sa;
  return d.asDiagonal();
}

double NoiseModel::clutter_log_density(Modality modality) const {
  const double toa_max = modality == Modality::kBistatic ? toa_max_bistatic : toa_max_mono;
  const int angle_pairs = modality == Modality::kBistatic ? 2 : 1;
  double volume = toa_max;
  for (int i = 0; i < angle_pairs; ++i) volume *= (2.0 * kPi) * kPi;
  return std::log(clutter_rate / volume);
}

std::vector<UEState> generate_trajectory(double speed, double turn_rate,
                                         const UEState& start, int steps, double dt) {
  if (steps < 1) {
    throw std::invalid_argument("generate_trajectory: steps must be >= 1");
  }
  std::vector<UEState> out;
  out.reserve(steps);
  out.push_back(start);
  for (int k = 1; k < steps; ++k) {
    out.push_back(
        UEState::from_vector(ue_transition(out.back().to_vector(), speed, turn_rate, dt)));
  }
  return out;
}

void synthesize(const Scenario& scenario, const NoiseModel& noise, double detection_prob,
                int step, std::uint64_t seed, MeasurementSet* z_bistatic,
                MeasurementSet* z_monostatic) {
  if (step < 1 || step > static_cast<int>(scenario.trajectory.size())) {
    throw std::invalid_argument("synthesize: step outside the trajectory");
  }
  const UEState& ue = scenario.trajectory[step - 1];
  std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(step)));
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_real_distribution<double> u_az(-kPi, kPi);
  std::uniform_real_distribution<double> u_el(-kPi / 2.0, kPi / 2.0);

  // Bistatic scan: LoS, VAs always, SPs inside the field of view.
  if (z_bistatic != nullptr) {
    z_bistatic->modality = Modality::kBistatic;
    z_bistatic->values.clear();
    z_bistatic->covariances.clear();

    std::vector<Landmark> visible;
    visible.push_back(Landmark{LandmarkKind::kBS, scenario.bs});
    for (const Eigen::Vector3d& va : scenario.vas()) {
      visible.push_back(Landmark{LandmarkKind::kVA, va});
    }
    for (const Eigen::Vector3d& sp : scenario.sps) {
      if ((sp - ue.position).norm() <= scenario.fov_sp) {
        visible.push_back(Landmark{LandmarkKind::kSP, sp});
      }
    }
    for (const Landmark& lm : visible) {
      if (coin(rng) > detection_prob) continue;
      const BistaticMeasurement z = h_bistatic(lm, ue, scenario.bs);
      const double path = (z.toa - ue.clock_bias) * kSpeedOfLight;
      const Eigen::MatrixXd R = noise.bistatic_covariance(path);
      z_bistatic->values.push_back(add_noise(z.to_vector(), R, rng));
      z_bistatic->covariances.push_back(R);
    }
    std::poisson_distribution<int> n_clutter(noise.clutter_rate);
    const int nc = n_clutter(rng);
    for (int i = 0; i < nc; ++i) {
      Eigen::VectorXd z(5);
      z << coin(rng) * noise.toa_max_bistatic, u_az(rng), u_el(rng), u_az(rng), u_el(rng);
      z_bistatic->values.push_back(z);
      z_bistatic->covariances.push_back(noise.bistatic_covariance(noise.distance_ref));
    }
    shuffle_scan(*z_bistatic, rng);
  }

  // Monostatic scan: all IPs plus the passive UE, always visible.
  if (z_monostatic != nullptr) {
    z_monostatic->modality = Modality::kMonostatic;
    z_monostatic->values.clear();
    z_monostatic->covariances.clear();

    std::vector<Eigen::Vector3d> sources = scenario.mono_ips();
    sources.push_back(ue.position);
    for (const Eigen::Vector3d& ip : sources) {
      if (coin(rng) > detection_prob) continue;
      const MonostaticMeasurement z = h_monostatic(ip, scenario.bs);
      const double path = z.toa * kSpeedOfLight;
      const Eigen::MatrixXd R = noise.mono_covariance(path);
      z_monostatic->values.push_back(add_noise(z.to_vector(), R, rng));
      z_monostatic->covariances.push_back(R);
    }
    std::poisson_distribution<int> n_clutter(noise.clutter_rate);
    const int nc = n_clutter(rng);
    for (int i = 0; i < nc; ++i) {
      Eigen::VectorXd z(3);
      z << coin(rng) * noise.toa_max_mono, u_az(rng), u_el(rng);
      z_monostatic->values.push_back(z);
      z_monostatic->covariances.push_back(noise.mono_covariance(noise.distance_ref));
    }
    shuffle_scan(*z_monostatic, rng);
  }
}

namespace {

std::vector<Eigen::Vector3d> select_kind(
    const std::vector<std::pair<LandmarkKind, Eigen::Vector3d>>& labeled,
    LandmarkKind kind) {
  std::vector<Eigen::Vector3d> out;
  for (const auto& [k, loc] : labeled) {
    if (k == kind) out.push_back(loc);
  }
  return out;
}

}  // namespace

RunReport run_experiment(const RunConfig& config) {
  RunReport report;
  const Scenario scenario = config.build_scenario();
  const FilterParams params = config.build_filter_params();
  const FusionParams fusion_params = config.build_fusion_params();
  const GospaParams gospa_params;  // c = 20 m, p = 2, alpha = 2
  const int steps = static_cast<int>(scenario.trajectory.size());

  const std::vector<Eigen::Vector3d> truth_va = scenario.vas();
  const std::vector<Eigen::Vector3d>& truth_sp = scenario.sps;
  const std::vector<Eigen::Vector3d> truth_ip = scenario.mono_ips();

  std::vector<bool> variants;
  if (config.fusion.enabled) {
    variants.push_back(true);
    if (config.experiment.compare_no_fusion) variants.push_back(false);
  } else {
    variants.push_back(false);
  }

  struct ErrorAccumulator {
    std::vector<double> pos, heading, bias;
  };
  // Indexed by [fused][modality].
  ErrorAccumulator acc[2][2];

  for (const bool fused : variants) {
    for (int run = 0; run < config.experiment.runs; ++run) {
      const std::uint64_t run_seed =
          config.experiment.seed ^ static_cast<std::uint64_t>(run);

      FilterState fs_b =
          make_bistatic_filter(scenario.bs, config.build_ue_prior(), params);
      FilterState fs_m = make_monostatic_filter(scenario.bs, params);

      for (int step = 1; step <= steps; ++step) {
        MeasurementSet z_b, z_m;
        synthesize(scenario, config.noise, config.filter.detection_prob, step, run_seed,
                   &z_b, &z_m);
        if (step > 1) {
          predict(fs_b, params);
          predict(fs_m, params);
        }
        update(fs_b, z_b, params);
        update(fs_m, z_m, params);
        if (fused && fusion_params.period > 0 && step % fusion_params.period == 0) {
          std::tie(fs_b, fs_m) = fuse_maps(fs_b, fs_m, fusion_params);
        }

        const Estimate est_b = estimate(fs_b, params);
        const Estimate est_m = estimate(fs_m, params);
        const UEState& truth_ue = scenario.trajectory[step - 1];

        StepRecord rec;
        rec.run = run;
        rec.step = step;
        rec.fused_run = fused;
        rec.bistatic_va =
            gospa(select_kind(est_b.landmarks, LandmarkKind::kVA), truth_va, gospa_params);
        rec.bistatic_sp =
            gospa(select_kind(est_b.landmarks, LandmarkKind::kSP), truth_sp, gospa_params);
        rec.mono_ip =
            gospa(select_kind(est_m.landmarks, LandmarkKind::kIP), truth_ip, gospa_params);
        rec.mono_va =
            gospa(select_kind(est_m.resolved, LandmarkKind::kVA), truth_va, gospa_params);
        rec.mono_sp =
            gospa(select_kind(est_m.resolved, LandmarkKind::kSP), truth_sp, gospa_params);

        rec.bistatic_pos_err = (est_b.ue_state->position - truth_ue.position).norm();
        rec.bistatic_heading_err =
            heading_error(est_b.ue_state->heading, truth_ue.heading);
        rec.bistatic_bias_err =
            (est_b.ue_state->clock_bias - truth_ue.clock_bias) * kSpeedOfLight;
        if (est_m.ue_position.has_value()) {
          rec.mono_pos_err = (*est_m.ue_position - truth_ue.position).norm();
        }

        auto& acc_b = acc[fused ? 1 : 0][0];
        acc_b.pos.push_back(rec.bistatic_pos_err);
        acc_b.heading.push_back(rec.bistatic_heading_err);
        acc_b.bias.push_back(rec.bistatic_bias_err);
        if (rec.mono_pos_err.has_value()) {
          acc[fused ? 1 : 0][1].pos.push_back(*rec.mono_pos_err);
        }
        report.records.push_back(std::move(rec));
      }
    }
  }

  auto rms = [](const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (const double x : v) s += x * x;
    return std::sqrt(s / static_cast<double>(v.size()));
  };
  for (const bool fused : variants) {
    const ErrorAccumulator& ab = acc[fused ? 1 : 0][0];
    SummaryRow row_b;
    row_b.modality = Modality::kBistatic;
    row_b.fused = fused;
    row_b.rmse_pos = rms(ab.pos);
    row_b.rmse_heading_deg = rms(ab.heading) * 180.0 / kPi;
    row_b.rmse_bias = rms(ab.bias);
    row_b.samples = static_cast<int>(ab.pos.size());
    report.summary.push_back(row_b);

    const ErrorAccumulator& am = acc[fused ? 1 : 0][1];
    SummaryRow row_m;
    row_m.modality = Modality::kMonostatic;
    row_m.fused = fused;
    row_m.rmse_pos = rms(am.pos);
    row_m.rmse_heading_deg = std::numeric_limits<double>::quiet_NaN();
    row_m.rmse_bias = std::numeric_limits<double>::quiet_NaN();
    row_m.samples = static_cast<int>(am.pos.size());
    report.summary.push_back(row_m);
  }
  return report;
}

}  // namespace sensefuse
