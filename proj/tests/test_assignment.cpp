#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "oracles.hpp"
#include "sensefuse/assignment.hpp"

using namespace sensefuse;
using assignment::kInf;

namespace {

Eigen::MatrixXd random_cost(std::mt19937_64& rng, int rows, int cols,
                            double inf_fraction = 0.0) {
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  Eigen::MatrixXd c(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      c(i, j) = coin(rng) < inf_fraction ? kInf : u(rng);
    }
  }
  return c;
}

}  // namespace

TEST_CASE("2x2 diagonal preference") {
  Eigen::MatrixXd c(2, 2);
  c << 1, 2, 2, 1;
  const auto a = assignment::solve(c);
  CHECK(a.row_to_col == std::vector<int>{0, 1});
  CHECK(a.total_cost == doctest::Approx(2.0));
}

TEST_CASE("single finite entry per row forces the assignment") {
  Eigen::MatrixXd c(3, 4);
  c.setConstant(kInf);
  c(0, 2) = 5.0;
  c(1, 0) = 1.0;
  c(2, 3) = -2.0;
  const auto a = assignment::solve(c);
  CHECK(a.row_to_col == std::vector<int>{2, 0, 3});
  CHECK(a.total_cost == doctest::Approx(4.0));
}

TEST_CASE("infeasible matrices are reported") {
  Eigen::MatrixXd c(2, 2);
  c.setConstant(kInf);
  c(0, 0) = 1.0;
  c(1, 0) = 2.0;  // both rows need column 0
  CHECK_THROWS_AS(assignment::solve(c), assignment::InfeasibleError);
  CHECK(assignment::k_best(c, 3).empty());
}

TEST_CASE("rows must not exceed columns") {
  Eigen::MatrixXd c(3, 2);
  c.setZero();
  CHECK_THROWS_AS(assignment::solve(c), std::invalid_argument);
}

TEST_CASE("matches exhaustive enumeration on random 7x9 matrices") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::MatrixXd c = random_cost(rng, 7, 9, trial % 4 == 0 ? 0.2 : 0.0);
    const auto brute = oracle::brute_force_assignment(c);
    if (brute.row_to_col.empty()) {
      CHECK_THROWS_AS(assignment::solve(c), assignment::InfeasibleError);
      continue;
    }
    const auto a = assignment::solve(c);
    const auto h = assignment::solve_hungarian(c);
    CHECK(a.total_cost == brute.total_cost);
    CHECK(h.total_cost == brute.total_cost);
    CHECK(a.row_to_col == brute.row_to_col);  // lexicographic tie-break
  }
}

TEST_CASE("auction and Hungarian backends agree") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = 2 + trial % 9;
    const int cols = rows + trial % 5;
    const Eigen::MatrixXd c = random_cost(rng, rows, cols, 0.1);
    try {
      const auto a = assignment::solve(c);
      const auto h = assignment::solve_hungarian(c);
      CHECK(a.total_cost == doctest::Approx(h.total_cost).epsilon(1e-12));
    } catch (const assignment::InfeasibleError&) {
      CHECK_THROWS_AS(assignment::solve_hungarian(c), assignment::InfeasibleError);
    }
  }
}

TEST_CASE("lexicographic tie-breaking on a fully tied matrix") {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(3, 5);
  const auto a = assignment::solve(c);
  CHECK(a.row_to_col == std::vector<int>{0, 1, 2});

  Eigen::MatrixXd c2(2, 3);
  c2 << 0, 0, 5, 5, 0, 0;
  // Optimal cost 0 attained by {0,1}, {0,2} and {1,2}; smallest is {0,1}.
  const auto a2 = assignment::solve(c2);
  CHECK(a2.total_cost == doctest::Approx(0.0));
  CHECK(a2.row_to_col == std::vector<int>{0, 1});
}

TEST_CASE("adding a row constant shifts the cost, not the argmin") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd c = random_cost(rng, 5, 7);
    Eigen::MatrixXd shifted = c;
    const double delta = 3.75;
    shifted.row(2).array() += delta;
    const auto a = assignment::solve(c);
    const auto b = assignment::solve(shifted);
    CHECK(a.row_to_col == b.row_to_col);
    CHECK(b.total_cost == doctest::Approx(a.total_cost + delta).epsilon(1e-12));
  }
}

TEST_CASE("k_best basics") {
  Eigen::MatrixXd c(2, 2);
  c << 1, 2, 2, 1;

  SUBCASE("k = 1 reproduces solve") {
    const auto list = assignment::k_best(c, 1);
    const auto single = assignment::solve(c);
    REQUIRE(list.size() == 1);
    CHECK(list[0].row_to_col == single.row_to_col);
    CHECK(list[0].total_cost == single.total_cost);
  }
  SUBCASE("only two assignments exist in 2x2") {
    const auto list = assignment::k_best(c, 5);
    REQUIRE(list.size() == 2);
    CHECK(list[0].total_cost == doctest::Approx(2.0));
    CHECK(list[1].total_cost == doctest::Approx(4.0));
  }
}

TEST_CASE("k_best matches sorted enumeration on random 5x7 matrices") {
  std::mt19937_64 rng(202);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::MatrixXd c = random_cost(rng, 5, 7, trial % 3 == 0 ? 0.15 : 0.0);
    const auto brute = oracle::brute_force_k_best(c, 10);
    const auto list = assignment::k_best(c, 10);
    REQUIRE(list.size() == brute.size());
    for (size_t i = 0; i < list.size(); ++i) {
      CHECK(list[i].total_cost == brute[i].total_cost);
    }
    // Costs nondecreasing, assignments pairwise distinct.
    for (size_t i = 0; i + 1 < list.size(); ++i) {
      CHECK(list[i].total_cost <= list[i + 1].total_cost);
      for (size_t j = i + 1; j < list.size(); ++j) {
        CHECK(list[i].row_to_col != list[j].row_to_col);
      }
    }
  }
}

TEST_CASE("solver is deterministic") {
  std::mt19937_64 rng(303);
  const Eigen::MatrixXd c = random_cost(rng, 6, 9, 0.1);
  const auto a = assignment::solve(c);
  const auto b = assignment::solve(c);
  CHECK(a.row_to_col == b.row_to_col);
  const auto k1 = assignment::k_best(c, 8);
  const auto k2 = assignment::k_best(c, 8);
  REQUIRE(k1.size() == k2.size());
  for (size_t i = 0; i < k1.size(); ++i) {
    CHECK(k1[i].row_to_col == k2[i].row_to_col);
  }
}
