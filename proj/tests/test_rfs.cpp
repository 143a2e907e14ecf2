#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "sensefuse/rfs.hpp"

using namespace sensefuse;

namespace {

Gaussian gaussian1(double mean, double var) {
  Gaussian g;
  g.mean = Eigen::VectorXd::Constant(1, mean);
  g.cov = Eigen::MatrixXd::Constant(1, 1, var);
  return g;
}

}  // namespace

TEST_CASE("gaussian_power identity exponent") {
  std::mt19937_64 rng(3);
  Gaussian g;
  g.mean = Eigen::Vector3d(1, 2, 3);
  g.cov = oracle::random_spd(3, rng);
  const auto [scale, powered] = gaussian_power(g, 1.0);
  CHECK(scale == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((powered.mean - g.mean).norm() == doctest::Approx(0.0));
  CHECK((powered.cov - g.cov).norm() == doctest::Approx(0.0));
}

TEST_CASE("gaussian_power rejects invalid exponents") {
  const Gaussian g = gaussian1(0.0, 1.0);
  CHECK_THROWS_AS(gaussian_power(g, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_power(g, -0.5), std::invalid_argument);
}

TEST_CASE("gaussian_power scale matches quadrature for a = 1/2") {
  const Gaussian g = gaussian1(0.0, 1.0);
  const auto [scale, powered] = gaussian_power(g, 0.5);
  const double integral = oracle::integrate_1d(
      [&](double x) {
        Eigen::VectorXd v(1);
        v << x;
        return std::pow(g.density(v), 0.5);
      },
      -40.0, 40.0, 20000);
  // integral of N^(1/2) equals scale (the powered Gaussian integrates to 1).
  CHECK(scale == doctest::Approx(integral).epsilon(1e-9));
}

TEST_CASE("gaussian_power covariance is P/a") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Gaussian g;
    g.mean = Eigen::Vector2d(0.5, -1.0);
    g.cov = oracle::random_spd(2, rng);
    const double a = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
    const auto [scale, powered] = gaussian_power(g, a);
    CHECK(scale > 0.0);
    CHECK(std::isfinite(scale));
    CHECK((powered.cov - g.cov / a).norm() < 1e-12 * g.cov.norm() / a);
  }
}

TEST_CASE("gaussian_product closed forms") {
  SUBCASE("identical Gaussians halve the covariance") {
    std::mt19937_64 rng(9);
    Gaussian g;
    g.mean = Eigen::Vector2d(1.0, 2.0);
    g.cov = oracle::random_spd(2, rng);
    const auto [scale, prod] = gaussian_product(g, g);
    CHECK((prod.mean - g.mean).norm() < 1e-12);
    CHECK((prod.cov - 0.5 * g.cov).norm() < 1e-12 * g.cov.norm());
  }
  SUBCASE("zero-mean unit product scale") {
    Gaussian g;
    g.mean = Eigen::Vector2d::Zero();
    g.cov = Eigen::Matrix2d::Identity();
    const auto [scale, prod] = gaussian_product(g, g);
    Gaussian wide;
    wide.mean = Eigen::Vector2d::Zero();
    wide.cov = 2.0 * Eigen::Matrix2d::Identity();
    CHECK(scale == doctest::Approx(wide.density(Eigen::Vector2d::Zero())).epsilon(1e-12));
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(gaussian_product(gaussian1(0, 1), Gaussian{Eigen::Vector2d::Zero(),
                                                               Eigen::Matrix2d::Identity()}),
                    std::invalid_argument);
  }
  SUBCASE("scale equals the numeric integral of the product in 2-d") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 5; ++trial) {
      Gaussian a, b;
      a.mean = Eigen::Vector2d(0.4, -0.2);
      b.mean = Eigen::Vector2d(-0.9, 0.7);
      a.cov = oracle::random_spd(2, rng);
      b.cov = oracle::random_spd(2, rng);
      const auto [scale, prod] = gaussian_product(a, b);
      const double integral = oracle::integrate_2d(
          [&](double x, double y) {
            Eigen::Vector2d v(x, y);
            return a.density(v) * b.density(v);
          },
          -30.0, 30.0, 600);
      CHECK(scale == doctest::Approx(integral).epsilon(1e-6));
    }
  }
}

TEST_CASE("mixture_moment_match") {
  SUBCASE("single component is returned unchanged") {
    const Gaussian g = gaussian1(2.0, 3.0);
    const Gaussian mm = mixture_moment_match({{1.0, g}});
    CHECK(mm.mean(0) == doctest::Approx(2.0));
    CHECK(mm.cov(0, 0) == doctest::Approx(3.0));
  }
  SUBCASE("two equal components at +-1 give mean 0 variance 2") {
    const Gaussian mm =
        mixture_moment_match({{0.5, gaussian1(-1.0, 1.0)}, {0.5, gaussian1(1.0, 1.0)}});
    CHECK(mm.mean(0) == doctest::Approx(0.0));
    CHECK(mm.cov(0, 0) == doctest::Approx(2.0));
  }
  SUBCASE("empty list and bad weights are rejected") {
    CHECK_THROWS_AS(mixture_moment_match({}), std::invalid_argument);
    CHECK_THROWS_AS(mixture_moment_match({{0.4, gaussian1(0, 1)}}), std::invalid_argument);
  }
  SUBCASE("matches Monte-Carlo moments of the mixture within 1%") {
    std::mt19937_64 rng(21);
    std::vector<std::pair<double, Gaussian>> comps;
    Gaussian a{Eigen::Vector2d(1.0, -2.0), oracle::random_spd(2, rng)};
    Gaussian b{Eigen::Vector2d(-1.5, 0.5), oracle::random_spd(2, rng)};
    Gaussian c{Eigen::Vector2d(0.2, 2.5), oracle::random_spd(2, rng)};
    comps = {{0.5, a}, {0.3, b}, {0.2, c}};
    const Gaussian mm = mixture_moment_match(comps);
    const Gaussian sampled = oracle::sample_mixture_moments(comps, 1000000, 99);
    CHECK((mm.mean - sampled.mean).norm() < 0.01 * (1.0 + mm.mean.norm()));
    CHECK((mm.cov - sampled.cov).norm() < 0.01 * mm.cov.norm());
  }
}

TEST_CASE("hypothesis pruning keeps weights normalized") {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> uw(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Bernoulli b;
    b.existence = 0.7;
    double sum = 0.0;
    const int n = 2 + trial % 3;
    for (int i = 0; i < n; ++i) {
      ModelHypothesis h;
      h.kind = i % 2 == 0 ? LandmarkKind::kVA : LandmarkKind::kSP;
      h.weight = (i == 0 ? 1e-5 * uw(rng) : uw(rng) + 1e-3);
      h.density = gaussian1(i, 1.0);
      sum += h.weight;
      b.hypotheses.push_back(h);
    }
    for (auto& h : b.hypotheses) h.weight /= sum;
    b.prune_hypotheses(1e-4);
    double after = 0.0;
    for (const auto& h : b.hypotheses) after += h.weight;
    CHECK(after == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(!b.hypotheses.empty());
  }
}

TEST_CASE("gaussian log_density agrees with the direct formula in 1-d") {
  const Gaussian g = gaussian1(1.0, 4.0);
  Eigen::VectorXd x(1);
  x << 2.0;
  const double expected =
      -0.5 * (std::log(2.0 * std::numbers::pi * 4.0) + (2.0 - 1.0) * (2.0 - 1.0) / 4.0);
  CHECK(g.log_density(x) == doctest::Approx(expected).epsilon(1e-12));
}
