#include "sensefuse/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sensefuse {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDegenerateTol = 1e-12;

Eigen::Vector3d require_nonzero(const Eigen::Vector3d& d, const char* what) {
  if (d.norm() < kDegenerateTol) {
    throw std::domain_error(std::string("degenerate geometry: ") + what);
  }
  return d;
}

// Rows d(az)/d(d), d(el)/d(d) for the global az/el of direction d.
Eigen::Matrix<double, 2, 3> jac_direction_angles(const Eigen::Vector3d& d) {
  const double rho2 = d.x() * d.x() + d.y() * d.y();
  const double r2 = rho2 + d.z() * d.z();
  if (rho2 < kDegenerateTol * kDegenerateTol) {
    throw std::domain_error("degenerate geometry: direction parallel to z axis");
  }
  const double rho = std::sqrt(rho2);
  Eigen::Matrix<double, 2, 3> jac;
  jac.row(0) << -d.y() / rho2, d.x() / rho2, 0.0;
  jac.row(1) << -d.z() * d.x() / (rho * r2), -d.z() * d.y() / (rho * r2), rho / r2;
  return jac;
}

}  // namespace

double wrap_angle(double theta) {
  double w = std::fmod(theta + kPi, 2.0 * kPi);
  if (w <= 0.0) w += 2.0 * kPi;
  return w - kPi;
}

const char* to_string(LandmarkKind kind) {
  switch (kind) {
    case LandmarkKind::kBS: return "BS";
    case LandmarkKind::kVA: return "VA";
    case LandmarkKind::kSP: return "SP";
    case LandmarkKind::kIP: return "IP";
    case LandmarkKind::kUETrack: return "UE_TRACK";
  }
  return "?";
}

Vector5d UEState::to_vector() const {
  Vector5d v;
  v << position.x(), position.y(), position.z(), heading, clock_bias;
  return v;
}

UEState UEState::from_vector(const Vector5d& v) {
  UEState s;
  s.position = v.head<3>();
  s.heading = wrap_angle(v(3));
  s.clock_bias = v(4);
  return s;
}

Vector5d BistaticMeasurement::to_vector() const {
  Vector5d v;
  v << toa, aoa_az, aoa_el, aod_az, aod_el;
  return v;
}

BistaticMeasurement BistaticMeasurement::from_vector(const Vector5d& v) {
  return BistaticMeasurement{v(0), v(1), v(2), v(3), v(4)};
}

Eigen::Vector3d MonostaticMeasurement::to_vector() const {
  return Eigen::Vector3d(toa, aoa_az, aoa_el);
}

MonostaticMeasurement MonostaticMeasurement::from_vector(const Eigen::Vector3d& v) {
  return MonostaticMeasurement{v(0), v(1), v(2)};
}

Eigen::Vector3d reflect_bs(const Surface& surface, const Eigen::Vector3d& bs) {
  const Eigen::Vector3d& nu = surface.normal;
  if (std::abs(nu.norm() - 1.0) > 1e-12) {
    throw std::invalid_argument("reflect_bs: surface normal must be unit length");
  }
  return bs - 2.0 * nu.dot(bs) * nu + 2.0 * surface.point.dot(nu) * nu;
}

Eigen::Vector3d va_from_ip(const Eigen::Vector3d& ip, const Eigen::Vector3d& bs) {
  return 2.0 * ip - bs;
}

Eigen::Vector3d ip_from_va(const Eigen::Vector3d& va, const Eigen::Vector3d& bs) {
  return 0.5 * (va + bs);
}

Eigen::Vector3d ip_on_surface_from_va(const Eigen::Vector3d& va,
                                      const Eigen::Vector3d& ue_pos,
                                      const Eigen::Vector3d& bs) {
  const Eigen::Vector3d g = require_nonzero(va - bs, "VA coincides with BS");
  const Eigen::Vector3d e = require_nonzero(ue_pos - va, "UE coincides with VA");
  // Plane {x : ||x-bs|| = ||x-va||} has normal g and passes through (va+bs)/2.
  const double denom = g.dot(e);
  if (std::abs(denom) < kDegenerateTol * g.norm() * e.norm()) {
    throw std::domain_error("ip_on_surface_from_va: ray parallel to mirror plane");
  }
  const double t = -0.5 * g.squaredNorm() / denom;
  return va + t * e;
}

Eigen::Vector2d direction_angles(const Eigen::Vector3d& d) {
  const double r = require_nonzero(d, "zero-length direction").norm();
  const double z = std::clamp(d.z() / r, -1.0, 1.0);
  return Eigen::Vector2d(std::atan2(d.y(), d.x()), std::asin(z));
}

BistaticMeasurement h_bistatic(const Landmark& landmark, const UEState& s,
                               const Eigen::Vector3d& bs) {
  BistaticMeasurement z;
  const Eigen::Vector3d& ue = s.position;
  Eigen::Vector3d aoa_dir;  // global direction UE -> path source point
  Eigen::Vector3d aod_dir;  // global direction BS -> departure point

  switch (landmark.kind) {
    case LandmarkKind::kBS: {
      // LoS path; the landmark location is the BS itself.
      const Eigen::Vector3d& x_bs = landmark.location;
      z.toa = (ue - x_bs).norm() / kSpeedOfLight + s.clock_bias;
      aod_dir = ue - x_bs;
      aoa_dir = x_bs - ue;
      break;
    }
    case LandmarkKind::kSP: {
      const Eigen::Vector3d& sp = landmark.location;
      z.toa = ((ue - sp).norm() + (bs - sp).norm()) / kSpeedOfLight + s.clock_bias;
      aod_dir = sp - bs;
      aoa_dir = sp - ue;
      break;
    }
    case LandmarkKind::kVA: {
      const Eigen::Vector3d& va = landmark.location;
      z.toa = (ue - va).norm() / kSpeedOfLight + s.clock_bias;
      aod_dir = ip_on_surface_from_va(va, ue, bs) - bs;
      aoa_dir = va - ue;
      break;
    }
    default:
      throw std::invalid_argument("h_bistatic: landmark kind must be BS, VA or SP");
  }

  const Eigen::Vector2d aod = direction_angles(aod_dir);
  const Eigen::Vector2d aoa_global = direction_angles(aoa_dir);
  z.aod_az = aod(0);
  z.aod_el = aod(1);
  // UE frame: global azimuth rotated by the heading; elevation unchanged.
  z.aoa_az = wrap_angle(aoa_global(0) - s.heading);
  z.aoa_el = aoa_global(1);
  return z;
}

MonostaticMeasurement h_monostatic(const Eigen::Vector3d& ip,
                                   const Eigen::Vector3d& bs) {
  const Eigen::Vector3d d = require_nonzero(ip - bs, "IP coincides with BS");
  MonostaticMeasurement z;
  z.toa = 2.0 * d.norm() / kSpeedOfLight;
  const Eigen::Vector2d ang = direction_angles(d);
  z.aoa_az = ang(0);
  z.aoa_el = ang(1);
  return z;
}

Eigen::Matrix<double, 5, 8> jac_h_bistatic(const Landmark& landmark,
                                           const UEState& s,
                                           const Eigen::Vector3d& bs) {
  Eigen::Matrix<double, 5, 8> jac = Eigen::Matrix<double, 5, 8>::Zero();
  const Eigen::Vector3d& ue = s.position;
  const Eigen::Vector3d& lm = landmark.location;

  // ToA row and path endpoints per kind.
  Eigen::Vector3d aoa_dir;                      // source - ue
  Eigen::Matrix3d daoa_dlm = Eigen::Matrix3d::Identity();
  switch (landmark.kind) {
    case LandmarkKind::kBS: {
      const Eigen::Vector3d d = require_nonzero(ue - lm, "UE coincides with BS");
      const Eigen::RowVector3d grad = d.transpose() / (d.norm() * kSpeedOfLight);
      jac.block<1, 3>(0, 0) = -grad;
      jac.block<1, 3>(0, 3) = grad;
      aoa_dir = lm - ue;
      break;
    }
    case LandmarkKind::kSP: {
      const Eigen::Vector3d du = require_nonzero(ue - lm, "UE coincides with SP");
      const Eigen::Vector3d db = require_nonzero(bs - lm, "BS coincides with SP");
      jac.block<1, 3>(0, 0) =
          -(du.transpose() / du.norm() + db.transpose() / db.norm()) / kSpeedOfLight;
      jac.block<1, 3>(0, 3) = du.transpose() / (du.norm() * kSpeedOfLight);
      aoa_dir = lm - ue;
      break;
    }
    case LandmarkKind::kVA: {
      const Eigen::Vector3d d = require_nonzero(ue - lm, "UE coincides with VA");
      const Eigen::RowVector3d grad = d.transpose() / (d.norm() * kSpeedOfLight);
      jac.block<1, 3>(0, 0) = -grad;
      jac.block<1, 3>(0, 3) = grad;
      aoa_dir = lm - ue;
      break;
    }
    default:
      throw std::invalid_argument("jac_h_bistatic: landmark kind must be BS, VA or SP");
  }
  jac(0, 7) = 1.0;  // clock bias enters the ToA additively

  // AoA rows: global angles of (source - ue), azimuth offset by -heading.
  const Eigen::Matrix<double, 2, 3> jaoa = jac_direction_angles(aoa_dir);
  jac.block<2, 3>(1, 0) = jaoa * daoa_dlm;
  jac.block<2, 3>(1, 3) = -jaoa;
  jac(1, 6) = -1.0;

  // AoD rows: global angles of (departure point - bs).
  switch (landmark.kind) {
    case LandmarkKind::kBS: {
      const Eigen::Matrix<double, 2, 3> jaod = jac_direction_angles(ue - lm);
      jac.block<2, 3>(3, 0) = -jaod;
      jac.block<2, 3>(3, 3) = jaod;
      break;
    }
    case LandmarkKind::kSP: {
      jac.block<2, 3>(3, 0) = jac_direction_angles(lm - bs);
      break;
    }
    case LandmarkKind::kVA: {
      // x_ip = va + t e with e = ue - va, g = va - bs, t = -|g|^2 / (2 g.e).
      const Eigen::Vector3d g = lm - bs;
      const Eigen::Vector3d e = ue - lm;
      const double sge = g.dot(e);
      const double g2 = g.squaredNorm();
      const double t = -0.5 * g2 / sge;
      const Eigen::Vector3d ip = lm + t * e;
      const Eigen::Vector3d dt_dva = -g / sge + 0.5 * g2 * (e - g) / (sge * sge);
      const Eigen::Vector3d dt_due = 0.5 * g2 * g / (sge * sge);
      const Eigen::Matrix3d dip_dva =
          (1.0 - t) * Eigen::Matrix3d::Identity() + e * dt_dva.transpose();
      const Eigen::Matrix3d dip_due =
          t * Eigen::Matrix3d::Identity() + e * dt_due.transpose();
      const Eigen::Matrix<double, 2, 3> jaod = jac_direction_angles(ip - bs);
      jac.block<2, 3>(3, 0) = jaod * dip_dva;
      jac.block<2, 3>(3, 3) = jaod * dip_due;
      break;
    }
    default:
      break;
  }
  return jac;
}

Eigen::Matrix3d jac_h_monostatic(const Eigen::Vector3d& ip,
                                 const Eigen::Vector3d& bs) {
  const Eigen::Vector3d d = require_nonzero(ip - bs, "IP coincides with BS");
  Eigen::Matrix3d jac;
  jac.row(0) = 2.0 * d.transpose() / (d.norm() * kSpeedOfLight);
  jac.bottomRows<2>() = jac_direction_angles(d);
  return jac;
}

}  // namespace sensefuse
