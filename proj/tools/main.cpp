// sensefuse: integrated monostatic/bistatic sensing simulator.
#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "oracles.hpp"
#include "sensefuse/assignment.hpp"
#include "sensefuse/config.hpp"
#include "sensefuse/fusion.hpp"
#include "sensefuse/report.hpp"
#include "sensefuse/snapshot.hpp"

namespace {

using namespace sensefuse;

int cmd_run(const std::string& config_path, const std::optional<std::uint64_t>& seed,
            const std::optional<int>& runs, const std::optional<std::string>& output_dir,
            bool no_fusion) {
  RunConfig config;
  try {
    config = load_run_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (seed.has_value()) config.experiment.seed = *seed;
  if (runs.has_value()) config.experiment.runs = *runs;
  if (output_dir.has_value()) config.experiment.output_dir = *output_dir;
  if (no_fusion) {
    config.fusion.enabled = false;
    config.experiment.compare_no_fusion = false;
  }

  const RunReport report = run_experiment(config);
  write_run_outputs(config, report, config.experiment.output_dir);

  for (const SummaryRow& row : report.summary) {
    std::cout << to_string(row.modality) << (row.fused ? " (fused)" : " (no fusion)")
              << ": RMSE pos " << row.rmse_pos << " m";
    if (row.modality == Modality::kBistatic) {
      std::cout << ", heading " << row.rmse_heading_deg << " deg, bias " << row.rmse_bias
                << " m";
    }
    std::cout << "\n";
  }
  std::cout << "outputs written to " << config.experiment.output_dir << "\n";
  return 0;
}

int cmd_fuse(const std::string& b_path, const std::string& m_path,
             const std::string& out_path) {
  try {
    const FilterState fs_b = load_snapshot(b_path);
    const FilterState fs_m = load_snapshot(m_path);
    const auto [fused_b, fused_m] = fuse_maps(fs_b, fs_m, FusionParams{});
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
      std::cerr << "error: cannot write " << out_path << "\n";
      return 1;
    }
    out << fused_snapshot_to_json(fused_b, fused_m);
  } catch (const SnapshotError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

bool report_check(const char* name, bool ok) {
  std::cout << (ok ? "PASS" : "FAIL") << " " << name << "\n";
  return ok;
}

int oracle_assignment() {
  std::mt19937_64 rng(424242);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  bool ok = true;
  int infeasible = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int rows = 2 + trial % 6;  // up to 7
    const int cols = rows + trial % 3;
    Eigen::MatrixXd c(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        c(i, j) = (trial % 5 == 0 && coin(rng) < 0.2) ? assignment::kInf : u(rng);
      }
    }
    const auto brute = oracle::brute_force_assignment(c);
    if (brute.row_to_col.empty()) {
      ++infeasible;
      bool threw = false;
      try {
        assignment::solve(c);
      } catch (const assignment::InfeasibleError&) {
        threw = true;
      }
      ok = ok && threw;
      continue;
    }
    const auto got = assignment::solve(c);
    ok = ok && got.total_cost == brute.total_cost && got.row_to_col == brute.row_to_col;

    const auto kb = assignment::k_best(c, 10);
    const auto kb_brute = oracle::brute_force_k_best(c, 10);
    ok = ok && kb.size() == kb_brute.size();
    for (size_t i = 0; ok && i < kb.size(); ++i) {
      ok = kb[i].total_cost == kb_brute[i].total_cost;
    }
  }
  bool all = report_check("assignment: 1000 random matrices vs enumeration", ok);
  return all ? 0 : 1;
}

int oracle_gospa() {
  std::mt19937_64 rng(212121);
  std::uniform_real_distribution<double> u(-25.0, 25.0);
  GospaParams params;
  bool ok = true;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Eigen::Vector3d> est, truth;
    for (int i = 0; i < trial % 7; ++i) est.emplace_back(u(rng), u(rng), u(rng));
    for (int i = 0; i < (trial / 7) % 7; ++i) truth.emplace_back(u(rng), u(rng), u(rng));
    const double expected = oracle::brute_force_gospa(est, truth, params);
    const double got = gospa(est, truth, params).total;
    ok = ok && std::abs(got - expected) < 1e-9;
  }
  return report_check("gospa: 500 random sets vs partial-matching enumeration", ok) ? 0
                                                                                    : 1;
}

int oracle_gci() {
  std::mt19937_64 rng(131313);
  std::uniform_real_distribution<double> um(-2.0, 2.0);
  std::uniform_real_distribution<double> uv(0.4, 3.0);
  std::uniform_real_distribution<double> ur(0.05, 0.95);
  bool ok_c = true, ok_r = true, ok_idem = true;

  for (int trial = 0; trial < 25; ++trial) {
    Gaussian fa, fb;
    fa.mean = Eigen::VectorXd::Constant(1, um(rng));
    fb.mean = Eigen::VectorXd::Constant(1, um(rng));
    fa.cov = Eigen::MatrixXd::Constant(1, 1, uv(rng));
    fb.cov = Eigen::MatrixXd::Constant(1, 1, uv(rng));
    const double rb = ur(rng);
    const double rm = ur(rng);
    const double alpha = rb / (rb + rm);
    const double beta = rm / (rb + rm);

    // Closed-form C against quadrature.
    const auto [sa, ga] = gaussian_power(fa, alpha);
    const auto [sb, gb] = gaussian_power(fb, beta);
    const auto [sp, prod] = gaussian_product(ga, gb);
    const double c_closed = sa * sb * sp;
    const double c_quad = oracle::gci_constant_quadrature(fa, fb, alpha, beta);
    ok_c = ok_c && std::abs(c_closed - c_quad) < 1e-6 * std::max(1.0, c_quad);

    // Fused Bernoulli parameters against quadrature.
    const auto [r_fused, f_fused] = fuse_bernoullis(rb, fa, rm, fb);
    const double detected = c_quad * std::pow(rb, alpha) * std::pow(rm, beta);
    const double empty = std::pow(1.0 - rb, alpha) * std::pow(1.0 - rm, beta);
    const double r_quad = detected / (detected + empty);
    ok_r = ok_r && std::abs(r_fused - r_quad) < 1e-6;
    const Gaussian moments = oracle::gci_moments_quadrature(fa, fb, alpha, beta);
    ok_r = ok_r && (f_fused.mean - moments.mean).norm() < 1e-6 &&
           (f_fused.cov - moments.cov).norm() < 1e-6;

    // Idempotence of fusing identical Bernoullis.
    const auto [r_same, f_same] = fuse_bernoullis(rb, fa, rb, fa);
    ok_idem = ok_idem && std::abs(r_same - rb) < 1e-12 &&
              (f_same.mean - fa.mean).norm() < 1e-12 &&
              (f_same.cov - fa.cov).norm() < 1e-12;
  }
  bool all = report_check("gci: closed-form C and fused moments vs quadrature", ok_c);
  all = report_check("gci: fused existence vs quadrature", ok_r) && all;
  all = report_check("gci: idempotence on identical Bernoullis", ok_idem) && all;
  return all ? 0 : 1;
}

int oracle_jacobians() {
  std::mt19937_64 rng(616161);
  std::uniform_real_distribution<double> u(-25.0, 25.0);
  std::uniform_real_distribution<double> uh(-3.1, 3.1);
  const double h = 1e-6;
  bool ok = true;
  int checked = 0;
  while (checked < 100) {
    const Eigen::Vector3d bs(0, 0, 10);
    Landmark lm;
    const int pick = checked % 3;
    UEState s;
    s.position = Eigen::Vector3d(u(rng), u(rng), 0.0);
    s.heading = uh(rng);
    s.clock_bias = 1e-8;
    if (pick == 0) {
      lm = Landmark{LandmarkKind::kBS, bs};
    } else if (pick == 1) {
      lm = Landmark{LandmarkKind::kSP, Eigen::Vector3d(u(rng), u(rng), 1.0)};
    } else {
      lm = Landmark{LandmarkKind::kVA,
                    Eigen::Vector3d(u(rng) + 80.0, u(rng), 10.0)};
    }
    Eigen::Matrix<double, 5, 8> analytic, fd;
    try {
      analytic = jac_h_bistatic(lm, s, bs);
      for (int c = 0; c < 8; ++c) {
        Landmark lp = lm, ln = lm;
        Vector5d vp = s.to_vector(), vn = s.to_vector();
        if (c < 3) {
          lp.location(c) += h;
          ln.location(c) -= h;
        } else {
          vp(c - 3) += h;
          vn(c - 3) -= h;
        }
        const Vector5d zp =
            h_bistatic(lp, UEState::from_vector(vp), bs).to_vector();
        const Vector5d zn =
            h_bistatic(ln, UEState::from_vector(vn), bs).to_vector();
        for (int r = 0; r < 5; ++r) {
          double diff = zp(r) - zn(r);
          if (r > 0) diff = wrap_angle(diff);
          fd(r, c) = diff / (2.0 * h);
        }
      }
    } catch (const std::domain_error&) {
      continue;
    }
    for (int r = 0; r < 5; ++r) {
      const double row_scale = fd.row(r).cwiseAbs().maxCoeff();
      for (int c = 0; c < 8; ++c) {
        const double tol = 1e-5 * std::max(std::abs(fd(r, c)), 1e-2 * row_scale);
        ok = ok && std::abs(analytic(r, c) - fd(r, c)) <= tol;
      }
    }
    ++checked;
  }
  return report_check("jacobians: analytic vs central finite differences", ok) ? 0 : 1;
}

int cmd_oracle(const std::string& suite) {
  if (suite == "assignment") return oracle_assignment();
  if (suite == "gospa") return oracle_gospa();
  if (suite == "gci") return oracle_gci();
  if (suite == "jacobians") return oracle_jacobians();
  if (suite == "all") {
    int rc = 0;
    rc |= oracle_assignment();
    rc |= oracle_gospa();
    rc |= oracle_gci();
    rc |= oracle_jacobians();
    return rc;
  }
  std::cerr << "error: unknown oracle suite '" << suite
            << "' (expected assignment, gospa, gci, jacobians or all)\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"integrated monostatic/bistatic sensing simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::optional<std::string> output_dir;
  bool no_fusion = false;
  if (const char* env = std::getenv("SENSEFUSE_OUTPUT_DIR")) {
    output_dir = std::string(env);
  }

  CLI::App* run = app.add_subcommand("run", "run a Monte-Carlo experiment");
  run->add_option("config", config_path, "configuration file (JSON)")->required();
  run->add_option("--seed", seed, "override experiment.seed");
  run->add_option("--runs", runs, "override experiment.runs");
  run->add_option("--output-dir", output_dir, "override experiment.output_dir");
  run->add_flag("--no-fusion", no_fusion, "disable fusion (and the comparison pass)");

  std::string fuse_b, fuse_m, fuse_out;
  CLI::App* fuse = app.add_subcommand("fuse", "fuse two serialized map snapshots");
  fuse->add_option("bistatic", fuse_b, "bistatic snapshot path")->required();
  fuse->add_option("monostatic", fuse_m, "monostatic snapshot path")->required();
  fuse->add_option("out", fuse_out, "output path for the fused snapshot")->required();

  std::string suite;
  CLI::App* oracle_cmd = app.add_subcommand("oracle", "run a brute-force oracle suite");
  oracle_cmd->add_option("suite", suite, "assignment | gospa | gci | jacobians | all")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      if (!std::filesystem::exists(config_path)) {
        std::cerr << "error: config file not found: " << config_path << "\n";
        return 2;
      }
      return cmd_run(config_path, seed, runs, output_dir, no_fusion);
    }
    if (fuse->parsed()) return cmd_fuse(fuse_b, fuse_m, fuse_out);
    if (oracle_cmd->parsed()) return cmd_oracle(suite);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
