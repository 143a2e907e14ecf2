#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numbers>
#include <set>

#include "sensefuse/config.hpp"
#include "sensefuse/report.hpp"
#include "sensefuse/sim.hpp"

using namespace sensefuse;

namespace {

constexpr double kPi = std::numbers::pi;

RunConfig small_config() {
  RunConfig cfg;
  cfg.experiment.runs = 2;
  cfg.experiment.seed = 11;
  cfg.scenario.steps = 12;
  return cfg;
}

}  // namespace

TEST_CASE("generate_trajectory: straight line when the turn rate is zero") {
  UEState start{Eigen::Vector3d(1, 1, 0), 0.25, 1e-8};
  const auto traj = generate_trajectory(2.0, 0.0, start, 6, 1.0);
  REQUIRE(traj.size() == 6);
  const double length = (traj.back().position - traj.front().position).norm();
  CHECK(length == doctest::Approx(2.0 * 5.0).epsilon(1e-12));
  CHECK(traj.back().heading == doctest::Approx(0.25));
  CHECK(traj.back().clock_bias == doctest::Approx(1e-8));
}

TEST_CASE("generate_trajectory: one full cycle returns to the start") {
  UEState start{Eigen::Vector3d(20, 0, 0), kPi / 2, 0.0};
  const double turn_rate = 2.0 * kPi / 40.0;
  const double speed = 20.0 * turn_rate;
  const auto traj = generate_trajectory(speed, turn_rate, start, 41, 1.0);
  CHECK((traj[40].position - traj[0].position).norm() < 1e-9);
  // Constant radius around the center.
  for (const UEState& s : traj) {
    CHECK(std::abs(s.position.head<2>().norm() - 20.0) < 1e-9);
    CHECK(s.position.z() == doctest::Approx(0.0));
  }
}

TEST_CASE("scenario ground truth is self-consistent") {
  const RunConfig cfg;
  const Scenario scenario = cfg.build_scenario();
  REQUIRE(scenario.surfaces.size() == 4);
  REQUIRE(scenario.sps.size() == 4);
  REQUIRE(scenario.trajectory.size() == 40);

  const auto vas = scenario.vas();
  for (size_t i = 0; i < scenario.surfaces.size(); ++i) {
    CHECK((vas[i] - reflect_bs(scenario.surfaces[i], scenario.bs)).norm() == 0.0);
  }
  // Monostatic IPs: projections of the BS onto the walls plus the SPs.
  const auto ips = scenario.mono_ips();
  REQUIRE(ips.size() == 8);
  for (size_t i = 0; i < 4; ++i) {
    CHECK((ips[i] - ip_from_va(vas[i], scenario.bs)).norm() < 1e-12);
  }
}

TEST_CASE("synthesize: counting with p_D = 1 and no clutter") {
  RunConfig cfg;
  cfg.noise.clutter_rate = 1e-12;  // Poisson(0) almost surely
  const Scenario scenario = cfg.build_scenario();

  MeasurementSet zb, zm;
  synthesize(scenario, cfg.noise, 1.0, 1, 99, &zb, &zm);
  // |z_m| = 8 IPs + the UE.
  CHECK(zm.size() == 9);
  // |z_b| = LoS + 4 VAs + SPs inside the field of view.
  int sp_in_fov = 0;
  const Eigen::Vector3d ue = scenario.trajectory[0].position;
  for (const auto& sp : scenario.sps) {
    if ((sp - ue).norm() <= scenario.fov_sp) ++sp_in_fov;
  }
  CHECK(zb.size() == 1 + 4 + sp_in_fov);
  CHECK(sp_in_fov >= 1);
}

TEST_CASE("synthesize: clutter count is Poisson with the configured rate") {
  RunConfig cfg;
  cfg.filter.detection_prob = 0.9;
  cfg.noise.clutter_rate = 2.0;
  const Scenario scenario = cfg.build_scenario();
  double total = 0.0;
  const int scans = 10000;
  for (int i = 0; i < scans; ++i) {
    MeasurementSet zm;
    synthesize(scenario, cfg.noise, 1e-12, 1, 1000 + i, nullptr, &zm);
    total += zm.size();  // detection probability ~0: everything is clutter
  }
  const double mean = total / scans;
  // 3 sigma of the scan-averaged Poisson mean.
  CHECK(std::abs(mean - 2.0) < 3.0 * std::sqrt(2.0 / scans));
}

TEST_CASE("synthesize: seed-fixed synthesis is bit-reproducible") {
  const RunConfig cfg;
  const Scenario scenario = cfg.build_scenario();
  MeasurementSet a_b, a_m, b_b, b_m;
  synthesize(scenario, cfg.noise, 0.9, 7, 1234, &a_b, &a_m);
  synthesize(scenario, cfg.noise, 0.9, 7, 1234, &b_b, &b_m);
  REQUIRE(a_b.size() == b_b.size());
  REQUIRE(a_m.size() == b_m.size());
  for (int i = 0; i < a_b.size(); ++i) {
    CHECK((a_b.values[i] - b_b.values[i]).norm() == 0.0);
  }
  for (int i = 0; i < a_m.size(); ++i) {
    CHECK((a_m.values[i] - b_m.values[i]).norm() == 0.0);
  }
  MeasurementSet c_b;
  synthesize(scenario, cfg.noise, 0.9, 7, 1235, &c_b, nullptr);
  bool different = c_b.size() != a_b.size();
  for (int i = 0; !different && i < std::min(c_b.size(), a_b.size()); ++i) {
    different = (c_b.values[i] - a_b.values[i]).norm() > 0.0;
  }
  CHECK(different);
}

TEST_CASE("run_experiment: deterministic replay and fusion-prefix identity") {
  RunConfig cfg = small_config();
  const RunReport a = run_experiment(cfg);
  const RunReport b = run_experiment(cfg);
  REQUIRE(a.records.size() == b.records.size());
  for (size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].bistatic_va.total == b.records[i].bistatic_va.total);
    CHECK(a.records[i].mono_ip.total == b.records[i].mono_ip.total);
    CHECK(a.records[i].bistatic_pos_err == b.records[i].bistatic_pos_err);
  }

  // Before the first fusion step the two passes are bitwise identical.
  for (const StepRecord& rec : a.records) {
    if (!rec.fused_run || rec.step >= cfg.fusion.period) continue;
    bool found = false;
    for (const StepRecord& other : a.records) {
      if (!other.fused_run && other.run == rec.run && other.step == rec.step) {
        CHECK(rec.bistatic_va.total == other.bistatic_va.total);
        CHECK(rec.bistatic_sp.total == other.bistatic_sp.total);
        CHECK(rec.mono_ip.total == other.mono_ip.total);
        CHECK(rec.bistatic_pos_err == other.bistatic_pos_err);
        found = true;
      }
    }
    CHECK(found);
  }
}

TEST_CASE("run_experiment: monostatic VA/SP GOSPA is flat without fusion") {
  RunConfig cfg = small_config();
  cfg.fusion.enabled = false;
  const RunReport report = run_experiment(cfg);
  REQUIRE(!report.records.empty());
  for (const StepRecord& rec : report.records) {
    CHECK(rec.mono_va.total == doctest::Approx(28.2842712474619).epsilon(1e-12));
    CHECK(rec.mono_sp.total == doctest::Approx(28.2842712474619).epsilon(1e-12));
  }
}

TEST_CASE("report: CSV shapes and float formatting") {
  RunConfig cfg = small_config();
  cfg.experiment.runs = 1;
  cfg.scenario.steps = 6;
  const RunReport report = run_experiment(cfg);
  const std::string gospa = gospa_csv(report);
  const std::string ue = ue_csv(report);
  const std::string summary = summary_csv(report);
  CHECK(gospa.rfind("run,step,modality,target_class,fused,gospa,loc,missed,false\n", 0) ==
        0);
  CHECK(ue.rfind("run,step,modality,fused,err_pos_m,err_heading_deg,err_bias_m\n", 0) ==
        0);
  CHECK(summary.rfind("modality,fused,rmse_pos_m,rmse_heading_deg,rmse_bias_m,samples\n",
                      0) == 0);
  // 5 gospa rows and 2 ue rows per record, plus headers.
  const auto count_lines = [](const std::string& s) {
    return std::count(s.begin(), s.end(), '\n');
  };
  CHECK(count_lines(gospa) == 1 + 5 * static_cast<long>(report.records.size()));
  CHECK(count_lines(ue) == 1 + 2 * static_cast<long>(report.records.size()));
  CHECK(count_lines(summary) == 1 + static_cast<long>(report.summary.size()));
}

TEST_CASE("report threshold trades missed against false landmarks") {
  RunConfig lo = small_config();
  lo.experiment.runs = 1;
  lo.scenario.steps = 10;
  lo.fusion.enabled = false;
  RunConfig hi = lo;
  lo.filter.report_threshold = 0.2;
  hi.filter.report_threshold = 0.95;
  const RunReport rl = run_experiment(lo);
  const RunReport rh = run_experiment(hi);
  long missed_lo = 0, missed_hi = 0, false_lo = 0, false_hi = 0;
  for (size_t i = 0; i < rl.records.size(); ++i) {
    missed_lo += rl.records[i].mono_ip.missed;
    false_lo += rl.records[i].mono_ip.false_alarms;
    missed_hi += rh.records[i].mono_ip.missed;
    false_hi += rh.records[i].mono_ip.false_alarms;
  }
  CHECK(missed_lo <= missed_hi);
  CHECK(false_lo >= false_hi);
}
