#pragma once

// Trident quaternions q = P + eps1 D1 + eps2 D2 with two nilpotent units
// (eps1^2 = eps2^2 = eps1 eps2 = 0).  A unit trident packs the whole
// navigation state -- attitude, velocity, and position -- into one algebraic
// object whose kinematics are a single quaternion-like ODE.

#include <Eigen/Dense>

#include "tridentnav/errors.hpp"
#include "tridentnav/quaternion.hpp"

namespace tridentnav {

struct TridentQuaternion {
  Quaternion p;   // principal part (attitude)
  Quaternion d1;  // primary imaginary part (velocity slot)
  Quaternion d2;  // secondary imaginary part (position slot)

  static TridentQuaternion identity() {
    return {Quaternion::identity(), {0, 0, 0, 0}, {0, 0, 0, 0}};
  }

  TridentQuaternion operator+(const TridentQuaternion& o) const {
    return {p + o.p, d1 + o.d1, d2 + o.d2};
  }
  TridentQuaternion operator*(double s) const { return {p * s, d1 * s, d2 * s}; }
};

inline TridentQuaternion operator*(double s, const TridentQuaternion& t) { return t * s; }

// A trident quaternion with all three parts pure-imaginary; the container
// for generalized rates.  w is an angular rate (rad/s); a1 and a2 carry the
// slot-dependent forcing terms (specific force, gravity, velocity).
struct TridentRate {
  Vector3d w{Vector3d::Zero()};
  Vector3d a1{Vector3d::Zero()};
  Vector3d a2{Vector3d::Zero()};

  TridentQuaternion as_trident() const {
    return {Quaternion::pure(w), Quaternion::pure(a1), Quaternion::pure(a2)};
  }
};

// Nilpotent product: P = Pa Pb, Di = Pa Di_b + Di_a Pb.
inline TridentQuaternion tq_mul(const TridentQuaternion& a, const TridentQuaternion& b) {
  return {quat_mul(a.p, b.p),
          quat_mul(a.p, b.d1) + quat_mul(a.d1, b.p),
          quat_mul(a.p, b.d2) + quat_mul(a.d2, b.p)};
}

inline TridentQuaternion tq_conj(const TridentQuaternion& a) {
  return {quat_conj(a.p), quat_conj(a.d1), quat_conj(a.d2)};
}

// Builds the unit trident q + eps1 (1/2) v_bar q + eps2 (1/2) p_bar q from
// attitude q_b^e, ECEF velocity v (m/s) and ECEF position p (m).
inline TridentQuaternion tq_from_nav(const Quaternion& q, const Vector3d& v, const Vector3d& p) {
  if (std::abs(quat_norm(q) - 1.0) > 1e-6) {
    throw ContractViolation("tq_from_nav: attitude quaternion must be unit");
  }
  return {q,
          quat_mul(Quaternion::pure(v), q) * 0.5,
          quat_mul(Quaternion::pure(p), q) * 0.5};
}

// Recovers (q, v, p): q = P, v_bar = 2 D1 P*, p_bar = 2 D2 P*.  The real
// parts of the recovered vectors must vanish for a unit trident.
inline void tq_extract(const TridentQuaternion& t, Quaternion& q, Vector3d& v, Vector3d& p) {
  const Quaternion pc = quat_conj(t.p);
  const Quaternion vq = quat_mul(t.d1, pc) * 2.0;
  const Quaternion pq = quat_mul(t.d2, pc) * 2.0;
  const double scale = std::max(1.0, std::max(quat_norm(vq), quat_norm(pq)));
  if (std::abs(quat_norm(t.p) - 1.0) > 1e-6 || std::abs(vq.w) > 1e-6 * scale ||
      std::abs(pq.w) > 1e-6 * scale) {
    throw NumericalError("tq_extract: trident quaternion lost its unit structure; normalize");
  }
  q = t.p;
  v = vq.vec();
  p = pq.vec();
}

// Unit-structure repair expressed as a delta: the normalized principal part
// plus the additive corrections that restore the two epsilon slots.
struct TridentRepair {
  Quaternion p;         // t.p scaled to unit norm
  Quaternion d1_delta;  // add to t.d1
  Quaternion d2_delta;  // add to t.d2
};

// Computes the structure repair without applying it.  The D slots are
// repaired by a defect correction, D -> D + delta, rather than a full
// rebuild (1/2) v_bar P.  Both are algebraically identical, but the
// correction form perturbs D by only ~1 ulp per call when the input is
// already near-unit, so per-step renormalization inside an integrator does
// not random-walk the epsilon slots (whose components carry position-sized
// magnitudes).  It is also self-stabilizing: a correction driven by rounding
// in one call cancels the measured defect in the next.  Exposing the delta
// lets a long-running integrator feed it through compensated accumulation.
inline TridentRepair tq_normalize_delta(const TridentQuaternion& t) {
  const double n = quat_norm(t.p);
  if (n <= 0.0 || !std::isfinite(n)) {
    throw NumericalError("tq_normalize: principal part has zero or non-finite norm");
  }
  TridentRepair r;
  r.p = t.p * (1.0 / n);
  const Quaternion pc = quat_conj(r.p);
  // Exact arithmetic: with A := 2 D conj(p'), the repaired slot is
  //   D' = (1/2) vec(A/n) p' = D * (|p'|^2 / n) - (A.w / (2n)) p',
  // and |p'|^2/n = 1 up to rounding, so the delta is the sum of two tiny
  // terms instead of a re-rounding of the whole product chain.
  const double s_minus_1 = (quat_squared_norm(r.p) - n) / n;
  const auto repair = [&](const Quaternion& d) {
    const Quaternion a = quat_mul(d, pc) * 2.0;
    return d * s_minus_1 + r.p * (-a.w / (2.0 * n));
  };
  r.d1_delta = repair(t.d1);
  r.d2_delta = repair(t.d2);
  return r;
}

// Restores the unit structure: renormalizes P and re-projects D1, D2 so the
// recovered v_bar, p_bar are pure-imaginary.  Idempotent.
inline TridentQuaternion tq_normalize(const TridentQuaternion& t) {
  const TridentRepair r = tq_normalize_delta(t);
  return {r.p, t.d1 + r.d1_delta, t.d2 + r.d2_delta};
}

// Scale-free recovery of (q, v, p): the trident kinematics are homogeneous
// of degree one in (P, D1, D2), so a trajectory may be propagated without
// renormalization and read out projectively, v_bar = 2 D1 P* / |P|^2 (and
// likewise for position), with q = P/|P|.  Only the pure-imaginary structure
// of the recovered vectors is checked here, not the principal norm.
inline void tq_extract_projective(const TridentQuaternion& t, Quaternion& q, Vector3d& v,
                                  Vector3d& p) {
  const double n2 = quat_squared_norm(t.p);
  if (n2 <= 0.0 || !std::isfinite(n2)) {
    throw NumericalError("tq_extract_projective: degenerate principal part");
  }
  const Quaternion pc = quat_conj(t.p);
  const Quaternion vq = quat_mul(t.d1, pc) * (2.0 / n2);
  const Quaternion pq = quat_mul(t.d2, pc) * (2.0 / n2);
  const double scale = std::max(1.0, std::max(quat_norm(vq), quat_norm(pq)));
  if (std::abs(vq.w) > 1e-6 * scale || std::abs(pq.w) > 1e-6 * scale) {
    throw NumericalError(
        "tq_extract_projective: trident quaternion lost its unit structure; normalize");
  }
  q = quat_normalize(t.p);
  v = vq.vec();
  p = pq.vec();
}

// Generalized pose kinematics with rates expressed in the moving frame and
// the forcing terms a (acceleration) and v (velocity) in the reference
// frame:  Pdot = 1/2 P w_bar,  2 D1dot = D1 w_bar + a_bar P,
// 2 D2dot = D2 w_bar + v_bar P.
inline TridentQuaternion tq_ode_rhs(const TridentQuaternion& t, const Vector3d& w,
                                    const Vector3d& a, const Vector3d& v) {
  const Quaternion wq = Quaternion::pure(w);
  return {quat_mul(t.p, wq) * 0.5,
          (quat_mul(t.d1, wq) + quat_mul(Quaternion::pure(a), t.p)) * 0.5,
          (quat_mul(t.d2, wq) + quat_mul(Quaternion::pure(v), t.p)) * 0.5};
}

}  // namespace tridentnav
