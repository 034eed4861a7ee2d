#pragma once

// Shared helpers for the test suites: deterministic random draws and small
// comparison utilities.

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "tridentnav/quaternion.hpp"

namespace tn_test {

using Eigen::Vector3d;
using tridentnav::Quaternion;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  // Portable 53-bit uniform; avoids distribution implementation differences.
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

inline Vector3d random_vec(std::mt19937_64& rng, double scale) {
  return {uniform(rng, -scale, scale), uniform(rng, -scale, scale), uniform(rng, -scale, scale)};
}

inline Quaternion random_unit_quat(std::mt19937_64& rng) {
  // Uniform on the half-angle ball of radius just under pi gives a generic
  // attitude away from the log branch cut.
  Vector3d v = random_vec(rng, 1.0);
  if (v.norm() < 1e-12) v = Vector3d(0.3, 0.0, 0.0);
  v *= uniform(rng, 0.0, M_PI - 0.05) / v.norm();
  return tridentnav::quat_exp(v * 0.5);
}

inline double quat_dist(const Quaternion& a, const Quaternion& b) {
  return std::sqrt((a.w - b.w) * (a.w - b.w) + (a.x - b.x) * (a.x - b.x) +
                   (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
}

// Geodesic angle between two attitudes, in radians.
inline double attitude_angle(const Quaternion& a, const Quaternion& b) {
  const Quaternion d = tridentnav::quat_mul(tridentnav::quat_conj(a), b);
  return 2.0 * tridentnav::quat_log_vec(tridentnav::quat_normalize(d)).norm();
}

#define EXPECT_QUAT_NEAR(a, b, tol) EXPECT_LE(tn_test::quat_dist((a), (b)), (tol))
#define EXPECT_VEC3_NEAR(a, b, tol)                \
  do {                                             \
    const Eigen::Vector3d va = (a), vb = (b);      \
    EXPECT_LE((va - vb).norm(), (tol))             \
        << "lhs: " << va.transpose()               \
        << "\nrhs: " << vb.transpose();            \
  } while (0)

}  // namespace tn_test
