#pragma once

#include <Eigen/Dense>

namespace sensefuse {

using Vector5d = Eigen::Matrix<double, 5, 1>;
using Matrix5d = Eigen::Matrix<double, 5, 5>;

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s, exact

/// Wraps an angle to (-pi, pi].
double wrap_angle(double theta);

enum class LandmarkKind { kBS, kVA, kSP, kIP, kUETrack };

const char* to_string(LandmarkKind kind);

/// Kinematic + clock state of the user: position [m], heading [rad]
/// (counterclockwise about z), clock bias [s] relative to the BS.
struct UEState {
  Eigen::Vector3d position{Eigen::Vector3d::Zero()};
  double heading{0.0};
  double clock_bias{0.0};

  Vector5d to_vector() const;
  static UEState from_vector(const Vector5d& v);
};

struct Landmark {
  LandmarkKind kind{LandmarkKind::kSP};
  Eigen::Vector3d location{Eigen::Vector3d::Zero()};
};

/// Reflecting surface: unit normal and an arbitrary point on the plane.
struct Surface {
  Eigen::Vector3d normal{Eigen::Vector3d::UnitX()};
  Eigen::Vector3d point{Eigen::Vector3d::Zero()};
};

/// Channel parameters of one bistatic path. AoA is expressed in the UE
/// frame, AoD in the global BS frame. Vector order [toa, aoa_az, aoa_el,
/// aod_az, aod_el].
struct BistaticMeasurement {
  double toa{0.0};
  double aoa_az{0.0};
  double aoa_el{0.0};
  double aod_az{0.0};
  double aod_el{0.0};

  Vector5d to_vector() const;
  static BistaticMeasurement from_vector(const Vector5d& v);
};

/// Channel parameters of one monostatic path: round-trip ToA plus the
/// global-frame angle of arrival at the BS. Vector order [toa, az, el].
struct MonostaticMeasurement {
  double toa{0.0};
  double aoa_az{0.0};
  double aoa_el{0.0};

  Eigen::Vector3d to_vector() const;
  static MonostaticMeasurement from_vector(const Eigen::Vector3d& v);
};

/// Mirror image of the BS across the surface. Requires a unit normal.
Eigen::Vector3d reflect_bs(const Surface& surface, const Eigen::Vector3d& bs);

Eigen::Vector3d va_from_ip(const Eigen::Vector3d& ip, const Eigen::Vector3d& bs);
Eigen::Vector3d ip_from_va(const Eigen::Vector3d& va, const Eigen::Vector3d& bs);

/// Intersection of the segment VA -> UE with the mirror plane implied by
/// (VA, BS). Throws if the ray is parallel to the plane.
Eigen::Vector3d ip_on_surface_from_va(const Eigen::Vector3d& va,
                                      const Eigen::Vector3d& ue_pos,
                                      const Eigen::Vector3d& bs);

/// Azimuth/elevation of a direction vector: az = atan2(y,x) in (-pi,pi],
/// el = asin(z/r) in [-pi/2, pi/2].
Eigen::Vector2d direction_angles(const Eigen::Vector3d& d);

BistaticMeasurement h_bistatic(const Landmark& landmark, const UEState& s,
                               const Eigen::Vector3d& bs);

MonostaticMeasurement h_monostatic(const Eigen::Vector3d& ip,
                                   const Eigen::Vector3d& bs);

/// Jacobian of h_bistatic with respect to [landmark location; UE state],
/// i.e. columns [lx ly lz | x y z heading bias], rows in measurement order.
Eigen::Matrix<double, 5, 8> jac_h_bistatic(const Landmark& landmark,
                                           const UEState& s,
                                           const Eigen::Vector3d& bs);

/// Jacobian of h_monostatic with respect to the IP location.
Eigen::Matrix3d jac_h_monostatic(const Eigen::Vector3d& ip,
                                 const Eigen::Vector3d& bs);

}  // namespace sensefuse
