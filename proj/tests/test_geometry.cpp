#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "sensefuse/geometry.hpp"

using namespace sensefuse;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Vector3d random_vec(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return Eigen::Vector3d(u(rng), u(rng), u(rng));
}

}  // namespace

TEST_CASE("wrap_angle maps into (-pi, pi]") {
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(3.0 * kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(0.0) == doctest::Approx(0.0));
  CHECK(wrap_angle(2.0 * kPi + 0.25) == doctest::Approx(0.25));
  CHECK(wrap_angle(-2.5 * kPi) == doctest::Approx(-0.5 * kPi));
}

TEST_CASE("reflect_bs axis-aligned mirrors") {
  Surface s1{Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(5, 0, 0)};
  CHECK((reflect_bs(s1, Eigen::Vector3d::Zero()) - Eigen::Vector3d(10, 0, 0)).norm() ==
        doctest::Approx(0.0));

  Surface s2{Eigen::Vector3d(0, 1, 0), Eigen::Vector3d(0, -3, 0)};
  CHECK((reflect_bs(s2, Eigen::Vector3d(1, 2, 7)) - Eigen::Vector3d(1, -8, 7)).norm() ==
        doctest::Approx(0.0));
}

TEST_CASE("reflect_bs rejects non-unit normals") {
  Surface bad{Eigen::Vector3d(1, 1, 0), Eigen::Vector3d::Zero()};
  CHECK_THROWS_AS(reflect_bs(bad, Eigen::Vector3d::Zero()), std::invalid_argument);
}

TEST_CASE("reflect_bs is an involution") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    Surface s;
    s.normal = random_vec(rng, 1.0).normalized();
    s.point = random_vec(rng, 20.0);
    const Eigen::Vector3d bs = random_vec(rng, 20.0);
    const Eigen::Vector3d twice = reflect_bs(s, reflect_bs(s, bs));
    CHECK((twice - bs).norm() < 1e-12 * (1.0 + bs.norm()));
  }
}

TEST_CASE("va_from_ip and ip_from_va are mutually inverse") {
  const Eigen::Vector3d bs(0, 0, 0);
  CHECK((va_from_ip(Eigen::Vector3d(5, 0, 0), bs) - Eigen::Vector3d(10, 0, 0)).norm() ==
        doctest::Approx(0.0));
  CHECK((ip_from_va(Eigen::Vector3d(10, 0, 0), bs) - Eigen::Vector3d(5, 0, 0)).norm() ==
        doctest::Approx(0.0));
  // Degenerate coincident point.
  const Eigen::Vector3d one(1, 1, 1);
  CHECK((va_from_ip(one, one) - one).norm() == doctest::Approx(0.0));

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Vector3d ip = random_vec(rng, 30.0);
    const Eigen::Vector3d b = random_vec(rng, 30.0);
    CHECK((ip_from_va(va_from_ip(ip, b), b) - ip).norm() < 1e-12 * (1.0 + ip.norm()));
  }
}

TEST_CASE("ip_on_surface_from_va") {
  const Eigen::Vector3d bs(0, 0, 0);
  const Eigen::Vector3d va(10, 0, 0);

  SUBCASE("ray parallel to the mirror plane") {
    CHECK_THROWS_AS(ip_on_surface_from_va(va, Eigen::Vector3d(10, 8, 0), bs),
                    std::domain_error);
  }
  SUBCASE("symmetric path crosses the plane at the midpoint height") {
    const Eigen::Vector3d ip = ip_on_surface_from_va(va, Eigen::Vector3d(0, 8, 0), bs);
    CHECK((ip - Eigen::Vector3d(5, 4, 0)).norm() == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("mirror path-length identity on random geometry") {
    std::mt19937_64 rng(13);
    int checked = 0;
    while (checked < 100) {
      const Eigen::Vector3d b = random_vec(rng, 20.0);
      const Eigen::Vector3d v = random_vec(rng, 40.0);
      const Eigen::Vector3d ue = random_vec(rng, 40.0);
      if ((v - b).norm() < 1.0 || (ue - v).norm() < 1.0) continue;
      Eigen::Vector3d ip;
      try {
        ip = ip_on_surface_from_va(v, ue, b);
      } catch (const std::domain_error&) {
        continue;
      }
      const double mirror_len = (b - ip).norm() + (ip - ue).norm();
      const double direct_len = (v - ue).norm();
      // The identity holds with signed segments; restrict to the physical
      // configuration where the IP lies between VA and UE.
      if ((ip - v).dot(ue - v) < 0.0 || (ip - ue).dot(v - ue) < 0.0) continue;
      CHECK(std::abs(mirror_len - direct_len) < 1e-9 * direct_len);
      ++checked;
    }
  }
}

TEST_CASE("h_bistatic LoS path") {
  Landmark bs_lm{LandmarkKind::kBS, Eigen::Vector3d::Zero()};
  UEState s;
  s.position = Eigen::Vector3d(30, 0, 0);
  s.heading = 0.0;
  s.clock_bias = 1e-8;
  const BistaticMeasurement z = h_bistatic(bs_lm, s, Eigen::Vector3d::Zero());
  CHECK(z.toa == doctest::Approx(30.0 / kSpeedOfLight + 1e-8).epsilon(1e-12));
  CHECK(z.toa == doctest::Approx(1.1007e-7).epsilon(1e-4));
  CHECK(z.aod_az == doctest::Approx(0.0));
  CHECK(z.aoa_az == doctest::Approx(kPi));
}

TEST_CASE("h_bistatic SP collinear case") {
  Landmark sp{LandmarkKind::kSP, Eigen::Vector3d(10, 0, 0)};
  UEState s;
  s.position = Eigen::Vector3d(20, 0, 0);
  const BistaticMeasurement z = h_bistatic(sp, s, Eigen::Vector3d::Zero());
  CHECK(z.toa == doctest::Approx(20.0 / kSpeedOfLight).epsilon(1e-12));
  CHECK(z.aod_az == doctest::Approx(0.0));
  CHECK(z.aoa_az == doctest::Approx(kPi));
  CHECK(z.aoa_el == doctest::Approx(0.0));
  CHECK(z.aod_el == doctest::Approx(0.0));
}

TEST_CASE("h_bistatic VA path matches the mirror identity") {
  std::mt19937_64 rng(17);
  int checked = 0;
  while (checked < 50) {
    const Eigen::Vector3d bs = random_vec(rng, 10.0);
    const Eigen::Vector3d va = random_vec(rng, 50.0);
    UEState s;
    s.position = random_vec(rng, 30.0);
    s.heading = std::uniform_real_distribution<double>(-kPi, kPi)(rng);
    s.clock_bias = 2e-8;
    if ((va - bs).norm() < 5.0 || (s.position - va).norm() < 5.0) continue;
    Eigen::Vector3d ip;
    try {
      ip = ip_on_surface_from_va(va, s.position, bs);
    } catch (const std::domain_error&) {
      continue;
    }
    // Physical reflections have the IP between the VA and the UE.
    if ((ip - va).dot(s.position - va) < 0.0) continue;
    if ((ip - s.position).dot(va - s.position) < 0.0) continue;
    const BistaticMeasurement z = h_bistatic({LandmarkKind::kVA, va}, s, bs);
    const double expected =
        ((bs - ip).norm() + (ip - s.position).norm()) / kSpeedOfLight + s.clock_bias;
    CHECK(z.toa == doctest::Approx(expected).epsilon(1e-9));
    ++checked;
  }
}

TEST_CASE("h_monostatic examples") {
  const Eigen::Vector3d bs = Eigen::Vector3d::Zero();
  const MonostaticMeasurement z1 = h_monostatic(Eigen::Vector3d(15, 0, 0), bs);
  CHECK(z1.toa == doctest::Approx(30.0 / kSpeedOfLight).epsilon(1e-12));
  CHECK(z1.toa == doctest::Approx(1.0007e-7).epsilon(1e-4));
  CHECK(z1.aoa_az == doctest::Approx(0.0));
  CHECK(z1.aoa_el == doctest::Approx(0.0));

  CHECK(h_monostatic(Eigen::Vector3d(0, 0, 10), bs).aoa_el == doctest::Approx(kPi / 2));
  CHECK(h_monostatic(Eigen::Vector3d(-5, 0, 0), bs).aoa_az == doctest::Approx(kPi));
  CHECK_THROWS_AS(h_monostatic(bs, bs), std::domain_error);
}

TEST_CASE("heading rotation shifts only the AoA azimuth") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    Landmark lm{trial % 2 == 0 ? LandmarkKind::kVA : LandmarkKind::kSP,
                random_vec(rng, 40.0) + Eigen::Vector3d(60, 0, 0)};
    const Eigen::Vector3d bs(0, 0, 10);
    UEState s;
    s.position = random_vec(rng, 15.0);
    s.heading = 0.3;
    s.clock_bias = 1e-8;
    const double delta = std::uniform_real_distribution<double>(-2.0, 2.0)(rng);

    const BistaticMeasurement z0 = h_bistatic(lm, s, bs);
    UEState rotated = s;
    rotated.heading = wrap_angle(s.heading + delta);
    const BistaticMeasurement z1 = h_bistatic(lm, rotated, bs);

    CHECK(wrap_angle(z1.aoa_az - z0.aoa_az + delta) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(z1.aoa_el == doctest::Approx(z0.aoa_el));
    CHECK(z1.toa == doctest::Approx(z0.toa));
    CHECK(z1.aod_az == doctest::Approx(z0.aod_az));
    CHECK(z1.aod_el == doctest::Approx(z0.aod_el));
  }
}

TEST_CASE("clock bias shifts every bistatic ToA and nothing else") {
  const Eigen::Vector3d bs(0, 0, 10);
  UEState s;
  s.position = Eigen::Vector3d(20, 5, 0);
  s.heading = 0.7;
  s.clock_bias = 1e-8;
  UEState shifted = s;
  const double db = 3.5e-9;
  shifted.clock_bias += db;
  for (const Landmark lm : {Landmark{LandmarkKind::kBS, bs},
                            Landmark{LandmarkKind::kSP, Eigen::Vector3d(25, 25, 1)},
                            Landmark{LandmarkKind::kVA, Eigen::Vector3d(100, 0, 10)}}) {
    const BistaticMeasurement z0 = h_bistatic(lm, s, bs);
    const BistaticMeasurement z1 = h_bistatic(lm, shifted, bs);
    CHECK(z1.toa - z0.toa == doctest::Approx(db).epsilon(1e-12));
    CHECK(z1.aoa_az == doctest::Approx(z0.aoa_az));
    CHECK(z1.aod_az == doctest::Approx(z0.aod_az));
  }
}

namespace {

// Central finite differences of h over [landmark; ue state], step 1e-6.
Eigen::Matrix<double, 5, 8> fd_jac_bistatic(const Landmark& lm, const UEState& s,
                                            const Eigen::Vector3d& bs) {
  const double h = 1e-6;
  Eigen::Matrix<double, 5, 8> jac;
  for (int c = 0; c < 8; ++c) {
    Landmark lp = lm, lmn = lm;
    Vector5d sp = s.to_vector(), sn = s.to_vector();
    if (c < 3) {
      lp.location(c) += h;
      lmn.location(c) -= h;
    } else {
      sp(c - 3) += h;
      sn(c - 3) -= h;
    }
    UEState up = UEState{sp.head<3>(), sp(3), sp(4)};
    UEState un = UEState{sn.head<3>(), sn(3), sn(4)};
    const Vector5d zp = h_bistatic(lp, up, bs).to_vector();
    const Vector5d zn = h_bistatic(lmn, un, bs).to_vector();
    for (int r = 0; r < 5; ++r) {
      double diff = zp(r) - zn(r);
      if (r > 0) diff = wrap_angle(diff);
      jac(r, c) = diff / (2.0 * h);
    }
  }
  return jac;
}

// Relative 1e-5 per entry, floored at 1% of the row scale: entries far below
// their row's magnitude sit inside central-difference rounding noise.
bool jac_close(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& fd) {
  for (int r = 0; r < analytic.rows(); ++r) {
    const double row_scale = fd.row(r).cwiseAbs().maxCoeff();
    for (int c = 0; c < analytic.cols(); ++c) {
      const double tol = 1e-5 * std::max(std::abs(fd(r, c)), 1e-2 * row_scale);
      if (std::abs(analytic(r, c) - fd(r, c)) > tol) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("jac_h_bistatic structural entries") {
  const Eigen::Vector3d bs(0, 0, 10);
  UEState s;
  s.position = Eigen::Vector3d(18, -4, 0);
  s.heading = 0.4;
  s.clock_bias = 1e-8;
  for (const Landmark lm : {Landmark{LandmarkKind::kBS, bs},
                            Landmark{LandmarkKind::kSP, Eigen::Vector3d(25, 25, 1)},
                            Landmark{LandmarkKind::kVA, Eigen::Vector3d(100, 0, 10)}}) {
    const auto jac = jac_h_bistatic(lm, s, bs);
    CHECK(jac(0, 7) == doctest::Approx(1.0));  // dtoa/dbias
    CHECK(jac(1, 6) == doctest::Approx(-1.0));  // daoa_az/dheading
  }
}

TEST_CASE("jac_h_monostatic gradient of the scaled norm") {
  const Eigen::Vector3d bs(0, 0, 0);
  const Eigen::Vector3d ip(3, -4, 12);
  const auto jac = jac_h_monostatic(ip, bs);
  const Eigen::RowVector3d expected = 2.0 * ip.transpose() / (ip.norm() * kSpeedOfLight);
  CHECK((jac.row(0) - expected).norm() < 1e-15);
}

TEST_CASE("bistatic Jacobian matches central finite differences") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> uh(-kPi, kPi);
  int checked = 0;
  while (checked < 100) {
    const int kind_pick = checked % 3;
    const Eigen::Vector3d bs(0, 0, 10);
    Landmark lm;
    UEState s;
    s.position = random_vec(rng, 25.0);
    s.heading = uh(rng);
    s.clock_bias = 1e-8;
    if (kind_pick == 0) {
      lm = Landmark{LandmarkKind::kBS, bs};
    } else if (kind_pick == 1) {
      lm = Landmark{LandmarkKind::kSP, random_vec(rng, 40.0)};
    } else {
      lm = Landmark{LandmarkKind::kVA, random_vec(rng, 60.0) + Eigen::Vector3d(80, 0, 0)};
    }
    Eigen::Matrix<double, 5, 8> analytic;
    Eigen::Matrix<double, 5, 8> fd;
    try {
      analytic = jac_h_bistatic(lm, s, bs);
      fd = fd_jac_bistatic(lm, s, bs);
    } catch (const std::domain_error&) {
      continue;
    }
    CHECK(jac_close(analytic, fd));
    ++checked;
  }
}

TEST_CASE("monostatic Jacobian matches central finite differences") {
  std::mt19937_64 rng(37);
  const double h = 1e-6;
  int checked = 0;
  while (checked < 100) {
    const Eigen::Vector3d bs = random_vec(rng, 5.0);
    const Eigen::Vector3d ip = random_vec(rng, 50.0);
    if ((ip - bs).norm() < 2.0 || (ip - bs).head<2>().norm() < 1.0) continue;
    const Eigen::Matrix3d analytic = jac_h_monostatic(ip, bs);
    Eigen::Matrix3d fd;
    for (int c = 0; c < 3; ++c) {
      Eigen::Vector3d p = ip, n = ip;
      p(c) += h;
      n(c) -= h;
      const Eigen::Vector3d zp = h_monostatic(p, bs).to_vector();
      const Eigen::Vector3d zn = h_monostatic(n, bs).to_vector();
      for (int r = 0; r < 3; ++r) {
        double diff = zp(r) - zn(r);
        if (r > 0) diff = wrap_angle(diff);
        fd(r, c) = diff / (2.0 * h);
      }
    }
    CHECK(jac_close(analytic, fd));
    ++checked;
  }
}
