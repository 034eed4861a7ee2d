#pragma once

// Strapdown inertial mechanization in the ECEF frame, in two interchangeable
// forms:
//
//  * classical: separate attitude / velocity / position equations
//        q_dot = 1/2 q w_ib^b - 1/2 w_ie^e q
//        v_dot = C(q) f^b - 2 w_ie x v - w_ie x (w_ie x p) + g_tilde(p)
//        p_dot = v
//  * trident: one quaternion-valued equation on the trident group,
//        T_dot = 1/2 T * W_ib - 1/2 W_ie * T
//    whose epsilon slots carry velocity and position along with attitude.
//
// Both forms are integrated with fixed-step RK4 under a zero-order hold on
// the IMU rates. The attitude (principal) part of both forms is evaluated
// with an identical expression tree, so the two integrators produce
// bit-identical attitude histories; velocity and position agree to rounding.

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "tridentnav/earth.hpp"
#include "tridentnav/errors.hpp"
#include "tridentnav/nav_types.hpp"
#include "tridentnav/quaternion.hpp"
#include "tridentnav/trident_quaternion.hpp"

namespace tridentnav {

enum class MechForm { kClassical, kTrident };

// Health counters filled in by propagate_log. A step interval outside
// +/-50% of the nominal IMU period is counted (not rejected); intervals
// outside (0, 0.1] s are hard errors.
struct PropagationStats {
  std::size_t steps = 0;
  std::size_t dt_gate_count = 0;  // samples whose spacing strays >50% off nominal
  double min_dt = std::numeric_limits<double>::infinity();
  double max_dt = 0.0;
};

namespace detail {

constexpr double kMaxStepSeconds = 0.1;

inline void check_step_interval(double dt) {
  if (!(dt > 0.0) || dt > kMaxStepSeconds) {
    throw ContractViolation("integration step must lie in (0, 0.1] s, got " +
                            std::to_string(dt));
  }
}

// C(q) x for a not-necessarily-unit q (projective rotation). RK4 stage
// states carry slightly non-unit quaternions, so the plain unit-quaternion
// rotation is not applicable mid-step.
inline Vector3d rotate_projective(const Quaternion& q, const Vector3d& x) {
  const double n2 = quat_squared_norm(q);
  if (n2 <= 0.0 || !std::isfinite(n2)) {
    throw NumericalError("degenerate attitude quaternion in rotation");
  }
  return quat_mul(quat_mul(q, Quaternion::pure(x)), quat_conj(q)).vec() / n2;
}

// Neumaier compensated add: hi tracks the ordinary floating-point sum, lo
// the exact residue of every add. Folding hi + lo at readout recovers the
// sum to full precision. Position-sized state (~1e6..1e7 m) advanced by
// millimetre-sized increments loses ~1 ulp (~1e-9 m) per step to rounding,
// and under slowly varying dynamics those roundings are step-correlated, so
// a 24000-step replay can drift several micrometres without compensation.
inline void comp_add(double& hi, double& lo, double x) {
  const double t = hi + x;
  lo += (std::abs(hi) >= std::abs(x)) ? (hi - t) + x : (x - t) + hi;
  hi = t;
}

inline void comp_add(Vector3d& hi, Vector3d& lo, const Vector3d& x) {
  for (int i = 0; i < 3; ++i) comp_add(hi[i], lo[i], x[i]);
}

inline void comp_add(Quaternion& hi, Quaternion& lo, const Quaternion& x) {
  comp_add(hi.w, lo.w, x.w);
  comp_add(hi.x, lo.x, x.x);
  comp_add(hi.y, lo.y, x.y);
  comp_add(hi.z, lo.z, x.z);
}

}  // namespace detail

// Removes the current bias estimates from a raw IMU sample, yielding the
// corrected angular rate and specific force used for propagation.
inline std::pair<Vector3d, Vector3d> correct_imu(const ImuSample& s, const NavState& state) {
  return {s.w_ib_b - state.b_w, s.f_b - state.b_f};
}

// --- classical form ---------------------------------------------------------

struct ClassicalRates {
  Quaternion q_dot;
  Vector3d v_dot;
  Vector3d p_dot;
};

inline ClassicalRates classical_rhs(const EarthModel& em, const Quaternion& q,
                                    const Vector3d& v, const Vector3d& p,
                                    const Vector3d& w, const Vector3d& f) {
  const Vector3d w_ie = em.omega_vec();
  ClassicalRates r;
  // Written as (A + B * -1) * 0.5 to match the trident principal slot bitwise.
  r.q_dot = (quat_mul(q, Quaternion::pure(w)) +
             quat_mul(Quaternion::pure(w_ie), q) * -1.0) *
            0.5;
  r.v_dot = detail::rotate_projective(q, f) - 2.0 * w_ie.cross(v) -
            w_ie.cross(w_ie.cross(p)) + gravitation(em, p);
  r.p_dot = v;
  return r;
}

// One RK4 update of the classical equations expressed as an increment
// (state deltas before the add and the attitude renormalization).
inline ClassicalRates classical_increment(const EarthModel& em, const NavState& s,
                                          const Vector3d& w, const Vector3d& f,
                                          double dt) {
  detail::check_step_interval(dt);
  const auto k1 = classical_rhs(em, s.q_be, s.v_e, s.p_e, w, f);
  const auto k2 = classical_rhs(em, s.q_be + k1.q_dot * (dt / 2.0),
                                s.v_e + k1.v_dot * (dt / 2.0),
                                s.p_e + k1.p_dot * (dt / 2.0), w, f);
  const auto k3 = classical_rhs(em, s.q_be + k2.q_dot * (dt / 2.0),
                                s.v_e + k2.v_dot * (dt / 2.0),
                                s.p_e + k2.p_dot * (dt / 2.0), w, f);
  const auto k4 = classical_rhs(em, s.q_be + k3.q_dot * dt, s.v_e + k3.v_dot * dt,
                                s.p_e + k3.p_dot * dt, w, f);
  ClassicalRates inc;
  inc.q_dot = (k1.q_dot + k2.q_dot * 2.0 + k3.q_dot * 2.0 + k4.q_dot) * (dt / 6.0);
  inc.v_dot = (dt / 6.0) * (k1.v_dot + 2.0 * k2.v_dot + 2.0 * k3.v_dot + k4.v_dot);
  inc.p_dot = (dt / 6.0) * (k1.p_dot + 2.0 * k2.p_dot + 2.0 * k3.p_dot + k4.p_dot);
  return inc;
}

inline NavState classical_step(const EarthModel& em, const NavState& s,
                               const Vector3d& w, const Vector3d& f, double dt) {
  const ClassicalRates inc = classical_increment(em, s, w, f, dt);
  NavState out = s;
  out.q_be = quat_normalize(s.q_be + inc.q_dot);
  out.v_e = s.v_e + inc.v_dot;
  out.p_e = s.p_e + inc.p_dot;
  out.t = s.t + dt;
  if (!out.v_e.allFinite() || !out.p_e.allFinite()) {
    throw NumericalError("propagation produced a non-finite state");
  }
  return out;
}

// --- trident form ------------------------------------------------------------

// Assembles the two rate tridents of the trident-form equation:
//   W_ib = w + e1 f                               (body-referenced input)
//   W_ie = w_ie - e1 (g_eff(p) - w_ie x v) - e2 (v + w_ie x p)
// where g_eff is gravitation plus the centrifugal term, so that the epsilon
// slots of the trident equation reproduce the classical velocity/position
// equations exactly.
inline std::pair<TridentRate, TridentRate> build_trident_rates(const EarthModel& em,
                                                               const Vector3d& v,
                                                               const Vector3d& p,
                                                               const Vector3d& w,
                                                               const Vector3d& f) {
  const Vector3d w_ie = em.omega_vec();
  TridentRate w_ib{w, f, Vector3d::Zero()};
  TridentRate w_ie_rate{w_ie, -(effective_gravity(em, p) - w_ie.cross(v)),
                        -(v + w_ie.cross(p))};
  return {w_ib, w_ie_rate};
}

// Right-hand side of the trident equation at an arbitrary (not necessarily
// unit) trident. Velocity and position are recovered projectively from the
// epsilon slots, as RK4 stage values drift slightly off the unit manifold.
inline TridentQuaternion trident_rhs(const EarthModel& em, const TridentQuaternion& tq,
                                     const Vector3d& w, const Vector3d& f) {
  const double n2 = quat_squared_norm(tq.p);
  if (n2 <= 0.0 || !std::isfinite(n2)) {
    throw NumericalError("degenerate trident principal part");
  }
  const Quaternion pc = quat_conj(tq.p);
  const Vector3d v = (2.0 / n2) * quat_mul(tq.d1, pc).vec();
  const Vector3d p = (2.0 / n2) * quat_mul(tq.d2, pc).vec();
  const auto [w_ib, w_ie] = build_trident_rates(em, v, p, w, f);
  return (tq_mul(tq, w_ib.as_trident()) + tq_mul(w_ie.as_trident(), tq) * -1.0) * 0.5;
}

// One RK4 update of the trident equation as an additive increment.
inline TridentQuaternion trident_increment(const EarthModel& em,
                                           const TridentQuaternion& tq,
                                           const Vector3d& w, const Vector3d& f,
                                           double dt) {
  detail::check_step_interval(dt);
  const TridentQuaternion k1 = trident_rhs(em, tq, w, f);
  const TridentQuaternion k2 = trident_rhs(em, tq + k1 * (dt / 2.0), w, f);
  const TridentQuaternion k3 = trident_rhs(em, tq + k2 * (dt / 2.0), w, f);
  const TridentQuaternion k4 = trident_rhs(em, tq + k3 * dt, w, f);
  return (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
}

inline TridentQuaternion trident_step(const EarthModel& em, const TridentQuaternion& tq,
                                      const Vector3d& w, const Vector3d& f, double dt) {
  TridentQuaternion out = tq_normalize(tq + trident_increment(em, tq, w, f, dt));
  Vector3d v, p;
  Quaternion q;
  tq_extract(out, q, v, p);
  if (!v.allFinite() || !p.allFinite()) {
    throw NumericalError("propagation produced a non-finite state");
  }
  return out;
}

// One trident-form step expressed on NavState (pack, step, unpack).
inline NavState trident_step_nav(const EarthModel& em, const NavState& s,
                                 const Vector3d& w, const Vector3d& f, double dt) {
  TridentQuaternion tq = tq_from_nav(s.q_be, s.v_e, s.p_e);
  tq = trident_step(em, tq, w, f, dt);
  NavState out = s;
  tq_extract(tq, out.q_be, out.v_e, out.p_e);
  out.t = s.t + dt;
  return out;
}

// --- log replay --------------------------------------------------------------

// Propagates an initial state through a time-ordered IMU log under a
// zero-order hold: the sample stamped t_k advances the state from t_{k-1} to
// t_k. Returns the state history [initial, after sample 1, ..., after sample
// N]; an empty log yields just the initial state. Bias estimates are held
// fixed (inertial-only replay). Timestamps must strictly increase.
//
// The large linear slots (velocity/position, or the epsilon slots of the
// trident) are accumulated with Neumaier compensation and folded at readout,
// so a long replay is not polluted by step-correlated add rounding at the
// position's ulp scale. Attitude needs no compensation: its per-step
// arithmetic is identical in both forms, so it contributes nothing to the
// divergence between them, and it is renormalized every step.
inline std::vector<NavState> propagate_log(const EarthModel& em, const NavState& s0,
                                           const std::vector<ImuSample>& log,
                                           MechForm form, double dt_nominal = 0.005,
                                           PropagationStats* stats = nullptr) {
  std::vector<NavState> out;
  out.reserve(log.size() + 1);
  out.push_back(s0);

  NavState cur = s0;  // running (uncompensated) state; carries hold the rest
  Vector3d v_lo = Vector3d::Zero(), p_lo = Vector3d::Zero();
  TridentQuaternion tq;
  Quaternion d1_lo{0, 0, 0, 0}, d2_lo{0, 0, 0, 0};
  if (form == MechForm::kTrident) {
    tq = tq_from_nav(cur.q_be, cur.v_e, cur.p_e);
  }
  for (std::size_t i = 0; i < log.size(); ++i) {
    const ImuSample& s = log[i];
    const double dt = s.t - cur.t;
    if (!(dt > 0.0)) {
      throw IngestionError("imu sample " + std::to_string(i) +
                           ": timestamp does not increase (t=" + std::to_string(s.t) +
                           " after t=" + std::to_string(cur.t) + ")");
    }
    if (stats != nullptr) {
      ++stats->steps;
      stats->min_dt = std::min(stats->min_dt, dt);
      stats->max_dt = std::max(stats->max_dt, dt);
      if (std::abs(dt - dt_nominal) > 0.5 * dt_nominal) {
        ++stats->dt_gate_count;
      }
    }
    const auto [w, f] = correct_imu(s, cur);
    NavState emitted;
    if (form == MechForm::kClassical) {
      const ClassicalRates inc = classical_increment(em, cur, w, f, dt);
      cur.q_be = quat_normalize(cur.q_be + inc.q_dot);
      detail::comp_add(cur.v_e, v_lo, inc.v_dot);
      detail::comp_add(cur.p_e, p_lo, inc.p_dot);
      if (!cur.v_e.allFinite() || !cur.p_e.allFinite()) {
        throw NumericalError("propagation produced a non-finite state");
      }
      emitted = cur;
      emitted.v_e += v_lo;
      emitted.p_e += p_lo;
    } else {
      // The trident flow is homogeneous of degree one in (P, D1, D2), so no
      // per-step renormalization is needed: the readout divides the scale
      // out exactly. (A per-step unit repair would touch the position-sized
      // D2 slot with position-scale rounding every step, which accumulates.)
      // An occasional repair merely keeps the exponents healthy on very long
      // or coarse logs.
      const TridentQuaternion inc = trident_increment(em, tq, w, f, dt);
      tq.p = tq.p + inc.p;
      detail::comp_add(tq.d1, d1_lo, inc.d1);
      detail::comp_add(tq.d2, d2_lo, inc.d2);
      if ((i & 1023u) == 1023u) {
        tq.d1 = tq.d1 + d1_lo;
        tq.d2 = tq.d2 + d2_lo;
        d1_lo = d2_lo = Quaternion{0, 0, 0, 0};
        tq = tq_normalize(tq);
      }
      const TridentQuaternion folded{tq.p, tq.d1 + d1_lo, tq.d2 + d2_lo};
      emitted = cur;
      tq_extract_projective(folded, emitted.q_be, emitted.v_e, emitted.p_e);
      if (!emitted.v_e.allFinite() || !emitted.p_e.allFinite()) {
        throw NumericalError("propagation produced a non-finite state");
      }
      cur.q_be = emitted.q_be;  // keep `cur` meaningful for correct_imu/errors
      cur.v_e = emitted.v_e;
      cur.p_e = emitted.p_e;
    }
    cur.t = s.t;  // pin to the sample stamp; avoids accumulation drift
    emitted.t = s.t;
    out.push_back(emitted);
  }
  return out;
}

}  // namespace tridentnav
