#pragma once

// Dual quaternions q = P + eps D with eps^2 = 0.  Kept mainly as the
// two-slot reference algebra the trident layer is checked against; the
// navigation state itself uses the trident form.

#include <Eigen/Dense>

#include "tridentnav/quaternion.hpp"

namespace tridentnav {

struct DualQuaternion {
  Quaternion p;  // principal part
  Quaternion d;  // dual part

  static DualQuaternion identity() { return {Quaternion::identity(), {0.0, 0.0, 0.0, 0.0}}; }
};

// (Pa + eps Da)(Pb + eps Db) = Pa Pb + eps (Pa Db + Da Pb).
inline DualQuaternion dq_mul(const DualQuaternion& a, const DualQuaternion& b) {
  return {quat_mul(a.p, b.p), quat_mul(a.p, b.d) + quat_mul(a.d, b.p)};
}

inline DualQuaternion dq_conj(const DualQuaternion& a) {
  return {quat_conj(a.p), quat_conj(a.d)};
}

// Packs attitude + position as q + eps (1/2) p_bar q.
inline DualQuaternion dq_from_pose(const Quaternion& q, const Vector3d& p) {
  return {q, quat_mul(Quaternion::pure(p), q) * 0.5};
}

// Recovers the position: p_bar = 2 D P*.
inline Vector3d dq_position(const DualQuaternion& a) {
  return (quat_mul(a.d, quat_conj(a.p)) * 2.0).vec();
}

// Unit dual quaternion: P unit and Re(P* D) = 0.
inline bool dq_is_unit(const DualQuaternion& a, double tol = 1e-9) {
  const double re = quat_mul(quat_conj(a.p), a.d).w;
  return std::abs(quat_norm(a.p) - 1.0) <= tol && std::abs(2.0 * re) <= tol;
}

// Pose kinematics: Pdot = 1/2 P w_bar, 2 Ddot = D w_bar + v_bar P, with the
// body rate w and the velocity v resolved in the reference frame.
inline DualQuaternion dq_ode_rhs(const DualQuaternion& a, const Vector3d& w, const Vector3d& v) {
  const Quaternion wq = Quaternion::pure(w);
  const Quaternion vq = Quaternion::pure(v);
  return {quat_mul(a.p, wq) * 0.5, (quat_mul(a.d, wq) + quat_mul(vq, a.p)) * 0.5};
}

}  // namespace tridentnav
