#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numbers>
#include <random>

#include "oracles.hpp"
#include "sensefuse/metrics.hpp"

using namespace sensefuse;

namespace {

std::vector<Eigen::Vector3d> random_points(std::mt19937_64& rng, int n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < n; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  return pts;
}

}  // namespace

TEST_CASE("gospa missed-only values match the closed form") {
  GospaParams params;  // c = 20, p = 2
  std::vector<Eigen::Vector3d> truth4(4, Eigen::Vector3d::Zero());
  for (int i = 0; i < 4; ++i) truth4[i] = Eigen::Vector3d(10.0 * i, 0, 0);
  const GospaResult g4 = gospa({}, truth4, params);
  CHECK(g4.total == doctest::Approx(28.2842712474619).epsilon(1e-12));
  CHECK(g4.missed == 4);
  CHECK(g4.false_alarms == 0);
  CHECK(g4.localization == doctest::Approx(0.0));

  std::vector<Eigen::Vector3d> truth8(8, Eigen::Vector3d::Zero());
  for (int i = 0; i < 8; ++i) truth8[i] = Eigen::Vector3d(5.0 * i, 3.0, 0);
  CHECK(gospa({}, truth8, params).total == doctest::Approx(40.0).epsilon(1e-12));
}

TEST_CASE("gospa of a perfect estimate set is zero") {
  std::mt19937_64 rng(5);
  const auto pts = random_points(rng, 5, 30.0);
  const GospaResult g = gospa(pts, pts, GospaParams{});
  CHECK(g.total == doctest::Approx(0.0));
  CHECK(g.missed == 0);
  CHECK(g.false_alarms == 0);
}

TEST_CASE("gospa equals brute-force partial matching on random sets") {
  std::mt19937_64 rng(17);
  GospaParams params;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = trial % 7;
    const int m = (trial / 7) % 7;
    const auto est = random_points(rng, n, 25.0);
    const auto truth = random_points(rng, m, 25.0);
    const double expected = oracle::brute_force_gospa(est, truth, params);
    const double got = gospa(est, truth, params).total;
    CHECK(std::abs(got - expected) < 1e-9);
  }
}

TEST_CASE("gospa symmetry and triangle inequality spot checks") {
  std::mt19937_64 rng(23);
  GospaParams params;
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_points(rng, 1 + trial % 4, 25.0);
    const auto b = random_points(rng, 1 + (trial / 4) % 4, 25.0);
    const auto c = random_points(rng, 1 + (trial / 16) % 4, 25.0);
    const double ab = gospa(a, b, params).total;
    const double ba = gospa(b, a, params).total;
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
    const double ac = gospa(a, c, params).total;
    const double cb = gospa(c, b, params).total;
    CHECK(ab <= ac + cb + 1e-9);
  }
}

TEST_CASE("matching a missed truth within the cutoff never increases gospa") {
  GospaParams params;
  std::vector<Eigen::Vector3d> truth = {{0, 0, 0}, {30, 0, 0}};
  std::vector<Eigen::Vector3d> est = {{30.5, 0, 0}};
  const double before = gospa(est, truth, params).total;
  est.push_back(Eigen::Vector3d(2.0, 0, 0));  // adds a match 2 m from the first truth
  const double after = gospa(est, truth, params).total;
  CHECK(after < before);
}

TEST_CASE("gospa rejects invalid parameters") {
  GospaParams bad;
  bad.cutoff = -1.0;
  CHECK_THROWS_AS(gospa({}, {}, bad), std::invalid_argument);
  GospaParams bad_alpha;
  bad_alpha.alpha = 1.0;
  CHECK_THROWS_AS(gospa({}, {}, bad_alpha), std::invalid_argument);
}

TEST_CASE("rmse basics") {
  SUBCASE("constant error") {
    std::vector<Eigen::VectorXd> errors(10, Eigen::VectorXd::Constant(2, -0.5));
    const Eigen::VectorXd r = rmse(errors);
    CHECK(r(0) == doctest::Approx(0.5));
    CHECK(r(1) == doctest::Approx(0.5));
  }
  SUBCASE("symmetric errors") {
    std::vector<Eigen::VectorXd> errors = {Eigen::VectorXd::Constant(1, 2.0),
                                           Eigen::VectorXd::Constant(1, -2.0)};
    CHECK(rmse(errors)(0) == doctest::Approx(2.0));
  }
  SUBCASE("empty input") {
    CHECK_THROWS_AS(rmse({}), std::invalid_argument);
  }
}

TEST_CASE("heading error wraps across the discontinuity") {
  const double deg = std::numbers::pi / 180.0;
  CHECK(heading_error(359.0 * deg, 0.0) == doctest::Approx(-1.0 * deg));
  CHECK(std::abs(heading_error(359.0 * deg, 0.0)) == doctest::Approx(1.0 * deg));
  CHECK(heading_error(0.5, 0.2) == doctest::Approx(0.3));
}
