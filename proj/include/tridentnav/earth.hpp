#pragma once

// Earth constants, the gravity model with its analytic Jacobian, and
// geodetic <-> ECEF conversions.  Everything the mechanization and the
// error-state matrices need to know about the planet lives here.

#include <Eigen/Dense>
#include <cmath>

#include "tridentnav/errors.hpp"

namespace tridentnav {

using Eigen::Matrix3d;
using Eigen::Vector3d;

struct EarthModel {
  double mu = 3.986004418e14;        // gravitational parameter, m^3/s^2
  double omega_ie = 7.292115e-5;     // rotation rate, rad/s
  double a = 6378137.0;              // semi-major axis, m
  double f = 1.0 / 298.257223563;    // flattening
  double j2 = 1.08262668e-3;         // oblateness coefficient
  bool use_j2 = false;               // central field by default

  // Earth rate resolved in ECEF: the spin axis is +z.
  Vector3d omega_vec() const { return {0.0, 0.0, omega_ie}; }

  void validate() const {
    if (!(mu > 0.0) || !(omega_ie > 0.0) || !(a > 0.0) || !(f > 0.0 && f < 1.0) || !(j2 > 0.0)) {
      throw SpecError("EarthModel: constants must be strictly positive with f < 1");
    }
  }
};

struct GeodeticCoord {
  double lat = 0.0;  // rad, |lat| <= pi/2
  double lon = 0.0;  // rad, (-pi, pi]
  double h = 0.0;    // m above the ellipsoid
};

namespace detail {
inline void check_radius(const Vector3d& p_e) {
  if (!(p_e.norm() > 1e6)) {
    throw ContractViolation("gravity model: position too close to geocenter");
  }
}
}  // namespace detail

// Gravitational acceleration (mass attraction only): central field
// -(mu/r^3) p, plus the J2 oblateness term when enabled.
inline Vector3d gravitation(const EarthModel& em, const Vector3d& p_e) {
  detail::check_radius(p_e);
  const double r = p_e.norm();
  Vector3d g = -(em.mu / (r * r * r)) * p_e;
  if (em.use_j2) {
    const double k = -1.5 * em.j2 * em.mu * em.a * em.a;  // common J2 factor
    const double r2 = r * r;
    const double s = p_e.z() * p_e.z() / r2;  // sin^2(geocentric latitude)
    const double u = 1.0 / (r2 * r2 * r);     // 1/r^5
    g += k * u * Vector3d((1.0 - 5.0 * s) * p_e.x(),
                          (1.0 - 5.0 * s) * p_e.y(),
                          (3.0 - 5.0 * s) * p_e.z());
  }
  return g;
}

// Effective (plumb-bob) gravity: mass attraction minus the centripetal
// acceleration of the rotating frame.
inline Vector3d effective_gravity(const EarthModel& em, const Vector3d& p_e) {
  const Vector3d w = em.omega_vec();
  return gravitation(em, p_e) - w.cross(w.cross(p_e));
}

// Analytic Jacobian of effective_gravity.  Symmetric: the field is the
// gradient of a scalar potential (including the centrifugal part).
inline Matrix3d gravity_jacobian(const EarthModel& em, const Vector3d& p_e) {
  detail::check_radius(p_e);
  const double r = p_e.norm();
  const double r2 = r * r;
  const double r3 = r2 * r;
  const double r5 = r3 * r2;
  Matrix3d jac = -(em.mu / r3) * Matrix3d::Identity() +
                 (3.0 * em.mu / r5) * (p_e * p_e.transpose());
  if (em.use_j2) {
    const double k = -1.5 * em.j2 * em.mu * em.a * em.a;
    const double z = p_e.z();
    const double s = z * z / r2;
    const double u = 1.0 / (r5);
    const Vector3d w((1.0 - 5.0 * s) * p_e.x(), (1.0 - 5.0 * s) * p_e.y(),
                     (3.0 - 5.0 * s) * z);
    // d(z^2/r^2)/dp as a row vector.
    const Eigen::RowVector3d ds =
        (2.0 * z / r2) * Eigen::RowVector3d::UnitZ() - (2.0 * z * z / (r2 * r2)) * p_e.transpose();
    Matrix3d dw = Vector3d(1.0 - 5.0 * s, 1.0 - 5.0 * s, 3.0 - 5.0 * s).asDiagonal();
    dw -= 5.0 * p_e * ds;
    jac += k * (u * dw - (5.0 / (r5 * r2)) * w * p_e.transpose());
  }
  // Centrifugal part: -(w x)(w x) has the constant Jacobian -(w x)^2.
  const double w2 = em.omega_ie * em.omega_ie;
  jac += Vector3d(w2, w2, 0.0).asDiagonal().toDenseMatrix();
  return jac;
}

inline Vector3d geodetic_to_ecef(const EarthModel& em, const GeodeticCoord& g) {
  const double e2 = em.f * (2.0 - em.f);
  const double sl = std::sin(g.lat), cl = std::cos(g.lat);
  const double n = em.a / std::sqrt(1.0 - e2 * sl * sl);  // prime vertical radius
  return {(n + g.h) * cl * std::cos(g.lon),
          (n + g.h) * cl * std::sin(g.lon),
          (n * (1.0 - e2) + g.h) * sl};
}

// Iterative inverse of geodetic_to_ecef; converges well below 1e-8 m for any
// point above the deep interior.
inline GeodeticCoord ecef_to_geodetic(const EarthModel& em, const Vector3d& p_e) {
  const double e2 = em.f * (2.0 - em.f);
  const double rho = std::hypot(p_e.x(), p_e.y());
  GeodeticCoord g;
  g.lon = (rho > 0.0) ? std::atan2(p_e.y(), p_e.x()) : 0.0;
  if (rho < 1e-9) {  // on the spin axis
    g.lat = (p_e.z() >= 0.0) ? M_PI / 2 : -M_PI / 2;
    g.h = std::abs(p_e.z()) - em.a * (1.0 - em.f);
    return g;
  }
  g.lat = std::atan2(p_e.z(), rho * (1.0 - e2));
  double n = em.a;
  for (int it = 0; it < 12; ++it) {
    const double sl = std::sin(g.lat);
    n = em.a / std::sqrt(1.0 - e2 * sl * sl);
    const double cl = std::cos(g.lat);
    // Height from whichever axis is better conditioned at this latitude.
    g.h = (std::abs(cl) > std::abs(sl)) ? rho / cl - n
                                        : p_e.z() / sl - n * (1.0 - e2);
    g.lat = std::atan2(p_e.z(), rho * (1.0 - e2 * n / (n + g.h)));
  }
  return g;
}

// Rotation from the local north-east-down frame at g into ECEF (columns are
// the NED axes resolved in ECEF).
inline Matrix3d ned_to_ecef_rotation(const GeodeticCoord& g) {
  const double sl = std::sin(g.lat), cl = std::cos(g.lat);
  const double so = std::sin(g.lon), co = std::cos(g.lon);
  Matrix3d c;
  c.col(0) = Vector3d(-sl * co, -sl * so, cl);   // north
  c.col(1) = Vector3d(-so, co, 0.0);             // east
  c.col(2) = Vector3d(-cl * co, -cl * so, -sl);  // down
  return c;
}

}  // namespace tridentnav
