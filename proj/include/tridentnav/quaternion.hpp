#pragma once

// Hamilton quaternions with scalar-first (w, x, y, z) storage, plus the
// exp/log pair and adjoint action used by the dual- and trident-quaternion
// layers on top.

#include <Eigen/Dense>
#include <cmath>

#include "tridentnav/errors.hpp"

namespace tridentnav {

using Eigen::Matrix3d;
using Eigen::Vector3d;

// Cross-product matrix: skew(a) * b == a x b.
inline Matrix3d skew(const Vector3d& a) {
  Matrix3d s;
  s << 0.0, -a.z(), a.y(),
       a.z(), 0.0, -a.x(),
       -a.y(), a.x(), 0.0;
  return s;
}

struct Quaternion {
  double w{1.0};
  double x{0.0};
  double y{0.0};
  double z{0.0};

  Quaternion() = default;
  Quaternion(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}
  Quaternion(double scalar, const Vector3d& v) : w(scalar), x(v.x()), y(v.y()), z(v.z()) {}

  static Quaternion identity() { return {1.0, 0.0, 0.0, 0.0}; }
  // Pure-imaginary quaternion (0, v); the container for rates and positions.
  static Quaternion pure(const Vector3d& v) { return {0.0, v}; }

  Vector3d vec() const { return {x, y, z}; }

  Quaternion operator+(const Quaternion& o) const { return {w + o.w, x + o.x, y + o.y, z + o.z}; }
  Quaternion operator-(const Quaternion& o) const { return {w - o.w, x - o.x, y - o.y, z - o.z}; }
  Quaternion operator*(double s) const { return {w * s, x * s, y * s, z * s}; }
};

inline Quaternion operator*(double s, const Quaternion& q) { return q * s; }

// Hamilton product p.q.
inline Quaternion quat_mul(const Quaternion& p, const Quaternion& q) {
  return {p.w * q.w - p.x * q.x - p.y * q.y - p.z * q.z,
          p.w * q.x + p.x * q.w + p.y * q.z - p.z * q.y,
          p.w * q.y - p.x * q.z + p.y * q.w + p.z * q.x,
          p.w * q.z + p.x * q.y - p.y * q.x + p.z * q.w};
}

inline Quaternion operator*(const Quaternion& p, const Quaternion& q) { return quat_mul(p, q); }

inline Quaternion quat_conj(const Quaternion& q) { return {q.w, -q.x, -q.y, -q.z}; }

inline double quat_squared_norm(const Quaternion& q) {
  return q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z;
}

inline double quat_norm(const Quaternion& q) { return std::sqrt(quat_squared_norm(q)); }

inline Quaternion quat_inv(const Quaternion& q) {
  const double n2 = quat_squared_norm(q);
  if (n2 <= 0.0) {
    throw ContractViolation("quat_inv: zero quaternion has no inverse");
  }
  return quat_conj(q) * (1.0 / n2);
}

inline Quaternion quat_normalize(const Quaternion& q) {
  const double n = quat_norm(q);
  if (n <= 0.0 || !std::isfinite(n)) {
    throw NumericalError("quat_normalize: cannot normalize zero or non-finite quaternion");
  }
  return q * (1.0 / n);
}

// exp(v) = cos|v| + (sin|v|/|v|) v.  The argument carries the half-angle:
// exp((theta/2) n) rotates by theta about n when used through the adjoint.
inline Quaternion quat_exp(const Vector3d& v) {
  const double a = v.norm();
  double sinc;  // sin(a)/a
  if (a < 1e-6) {
    const double a2 = a * a;
    sinc = 1.0 - a2 / 6.0 + a2 * a2 / 120.0;
  } else {
    sinc = std::sin(a) / a;
  }
  return {std::cos(a), v * sinc};
}

// ln(q) = (ln|q|, phi * n) with phi = atan2(|vec|, w) in [0, pi].  The branch
// with rotation angle in [0, pi] is returned; at the antipode (w < 0,
// vec = 0) the axis is ill-defined and +x is chosen.
inline Quaternion quat_log(const Quaternion& q) {
  const double n = quat_norm(q);
  if (n <= 0.0) {
    throw ContractViolation("quat_log: zero quaternion has no logarithm");
  }
  const Vector3d v = q.vec();
  const double vn = v.norm();
  const double lw = std::log(n);
  if (vn == 0.0) {
    return q.w > 0.0 ? Quaternion{lw, 0.0, 0.0, 0.0}
                     : Quaternion{lw, M_PI, 0.0, 0.0};
  }
  double coeff;  // phi / |vec|
  if (vn < 1e-6 * std::abs(q.w) && q.w > 0.0) {
    const double t2 = (vn / q.w) * (vn / q.w);
    coeff = (1.0 - t2 / 3.0 + t2 * t2 / 5.0) / q.w;
  } else {
    coeff = std::atan2(vn, q.w) / vn;
  }
  return {lw, v * coeff};
}

// Imaginary part of the log of a unit quaternion; the half-angle vector.
inline Vector3d quat_log_vec(const Quaternion& q) { return quat_log(q).vec(); }

// Direction-cosine matrix C = I + 2 q0 (qv x) + 2 (qv x)^2.  For an attitude
// quaternion q_b^e this is C_b^e, mapping body vectors into ECEF.
inline Matrix3d quat_to_rotmat(const Quaternion& q) {
  if (std::abs(quat_norm(q) - 1.0) > 1e-6) {
    throw ContractViolation("quat_to_rotmat: quaternion norm deviates from 1 beyond 1e-6");
  }
  const Matrix3d vx = skew(q.vec());
  return Matrix3d::Identity() + 2.0 * q.w * vx + 2.0 * vx * vx;
}

// Adjoint action Ad_q(v) = q.v.q* on a pure-imaginary quaternion.
inline Quaternion quat_adjoint(const Quaternion& q, const Quaternion& v) {
  if (std::abs(v.w) > 1e-9) {
    throw ContractViolation("quat_adjoint: argument must be pure-imaginary");
  }
  return quat_mul(quat_mul(q, v), quat_conj(q));
}

// Convenience form of the adjoint for plain 3-vectors.
inline Vector3d quat_rotate(const Quaternion& q, const Vector3d& v) {
  return quat_adjoint(q, Quaternion::pure(v)).vec();
}

}  // namespace tridentnav
