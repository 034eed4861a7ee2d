#pragma once

// Synthetic flight generation: analytic ground-truth trajectories (hover,
// constant acceleration, coordinated turn, climb) with exact inverse
// dynamics, plus IMU/GNSS sensor synthesis with seeded, portable noise.
//
// Truth samples carry the MEAN body rates over the interval ending at each
// sample (first sample: instantaneous rates). Integrating rates held
// constant per interval then loses O(dt^3) per step instead of O(dt^2), so
// noise-free mechanization replay of a maneuvering trajectory stays within
// centimeters over minutes; instantaneous sampling would drift by meters.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tridentnav/earth.hpp"
#include "tridentnav/error_model.hpp"
#include "tridentnav/errors.hpp"
#include "tridentnav/nav_types.hpp"
#include "tridentnav/quaternion.hpp"

namespace tridentnav {

// ---------------------------------------------------------------------------
// Portable seeded randomness. The generator contract: identical seeds give
// identical streams on every platform. mt19937_64 is fully pinned by the
// standard; the Gaussian mapping is written out because the algorithm behind
// std::normal_distribution is implementation-defined.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Standard-normal stream: Box-Muller over the top 53 bits of mt19937_64.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : gen_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;  // (0,1)
    const double u2 = (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  Vector3d next_vec3() {
    const double x = next();  // sequenced explicitly: argument evaluation
    const double y = next();  // order inside a constructor call is
    const double z = next();  // unspecified and would break determinism
    return {x, y, z};
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// ---------------------------------------------------------------------------
// Flight profiles.

enum class ManeuverKind { kHover, kConstantAccel, kCoordinatedTurn, kClimb };

inline const char* maneuver_name(ManeuverKind k) {
  switch (k) {
    case ManeuverKind::kHover: return "hover";
    case ManeuverKind::kConstantAccel: return "constant-accel";
    case ManeuverKind::kCoordinatedTurn: return "coordinated-turn";
    case ManeuverKind::kClimb: return "climb";
  }
  return "?";
}

struct Segment {
  ManeuverKind kind = ManeuverKind::kHover;
  double duration = 0.0;                    // s
  Vector3d accel_ned{Vector3d::Zero()};     // constant-accel: commanded accel, m/s^2 (NED)
  double yaw_rate = 0.0;                    // coordinated-turn: rad/s (+ = north toward east)
  double delta_h = 0.0;                     // climb: altitude gained, m
};

inline constexpr double kStdGravity = 9.80665;   // m/s^2, for the dynamic limits
inline constexpr double kMaxSpecificForce = 4.0 * kStdGravity;
inline constexpr double kMaxBodyRate = 5.0;      // rad/s

struct ProfileSpec {
  GeodeticCoord origin{};
  double yaw0 = 0.0;  // rad, initial heading
  std::uint64_t seed = 0;
  std::vector<Segment> segments;

  void validate() const {
    if (segments.empty()) {
      throw SpecError("ProfileSpec: at least one segment is required");
    }
    if (!std::isfinite(yaw0)) {
      throw SpecError("ProfileSpec: initial yaw must be finite");
    }
    for (std::size_t i = 0; i < segments.size(); ++i) {
      const Segment& s = segments[i];
      const std::string where =
          "ProfileSpec: segment " + std::to_string(i) + " (" + maneuver_name(s.kind) + "): ";
      if (!(s.duration > 0.0) || !std::isfinite(s.duration)) {
        throw SpecError(where + "duration must be positive");
      }
      if (!s.accel_ned.allFinite() || !std::isfinite(s.yaw_rate) || !std::isfinite(s.delta_h)) {
        throw SpecError(where + "parameters must be finite");
      }
      if (s.kind == ManeuverKind::kCoordinatedTurn) {
        if (std::abs(s.yaw_rate) > kMaxBodyRate) {
          throw SpecError(where + "yaw rate exceeds the 5 rad/s body-rate limit");
        }
        if (std::abs(s.yaw_rate) < 1e-6) {
          throw SpecError(where + "yaw rate too small to define a turn; use hover instead");
        }
      }
      if (s.kind == ManeuverKind::kConstantAccel && s.accel_ned.norm() > kMaxSpecificForce) {
        throw SpecError(where + "commanded acceleration exceeds the 4 g limit");
      }
    }
  }
};

struct TruthSample {
  double t = 0.0;      // s
  Quaternion q_be;     // body -> ECEF
  Vector3d v_e{Vector3d::Zero()};      // m/s
  Vector3d p_e{Vector3d::Zero()};      // m
  Vector3d w_ib_b{Vector3d::Zero()};   // rad/s, mean over the interval ending here
  Vector3d f_b{Vector3d::Zero()};      // m/s^2, mean over the interval ending here
};

struct TruthTrajectory {
  double rate_hz = 0.0;
  std::vector<TruthSample> samples;
};

namespace detail {

// Segment kinematics in the origin-anchored local NED frame (fixed w.r.t.
// ECEF): closed forms for position, velocity, acceleration, yaw, yaw rate at
// local time tau given the segment entry state.
struct EntryState {
  Vector3d p_n{Vector3d::Zero()};
  Vector3d v_n{Vector3d::Zero()};
  double yaw = 0.0;
};

struct LocalKinematics {
  Vector3d p_n{Vector3d::Zero()};
  Vector3d v_n{Vector3d::Zero()};
  Vector3d a_n{Vector3d::Zero()};
  double yaw = 0.0;
  double yaw_rate = 0.0;
};

inline LocalKinematics eval_segment(const Segment& seg, const EntryState& e, double tau) {
  LocalKinematics k;
  k.yaw = e.yaw;
  switch (seg.kind) {
    case ManeuverKind::kHover: {
      k.p_n = e.p_n;
      break;
    }
    case ManeuverKind::kConstantAccel: {
      k.a_n = seg.accel_ned;
      k.v_n = e.v_n + tau * seg.accel_ned;
      k.p_n = e.p_n + tau * e.v_n + 0.5 * tau * tau * seg.accel_ned;
      break;
    }
    case ManeuverKind::kCoordinatedTurn: {
      // Horizontal velocity rotates about local down at the yaw rate; speed
      // and vertical rate are held.
      const double w = seg.yaw_rate;
      const double th = w * tau;
      const double c = std::cos(th), s = std::sin(th);
      const double vn0 = e.v_n.x(), ve0 = e.v_n.y();
      k.v_n = Vector3d(c * vn0 - s * ve0, s * vn0 + c * ve0, e.v_n.z());
      k.a_n = w * Vector3d(-k.v_n.y(), k.v_n.x(), 0.0);
      k.p_n = e.p_n + Vector3d((s * vn0 - (1.0 - c) * ve0) / w,
                               ((1.0 - c) * vn0 + s * ve0) / w, e.v_n.z() * tau);
      k.yaw = e.yaw + th;
      k.yaw_rate = w;
      break;
    }
    case ManeuverKind::kClimb: {
      // Raised-cosine vertical-rate bump: starts and ends at the entry
      // vertical rate, integrates to exactly delta_h of altitude gain.
      const double r = seg.delta_h / seg.duration;
      const double ph = 2.0 * M_PI / seg.duration;
      k.v_n = e.v_n + Vector3d(0.0, 0.0, -r * (1.0 - std::cos(ph * tau)));
      k.a_n = Vector3d(0.0, 0.0, -r * ph * std::sin(ph * tau));
      k.p_n = e.p_n + tau * e.v_n + Vector3d(0.0, 0.0, -r * (tau - std::sin(ph * tau) / ph));
      break;
    }
  }
  return k;
}

}  // namespace detail

// Analytic truth generation: local-NED closed forms per segment, transformed
// to ECEF through the origin-anchored frame, with body rates and specific
// force recovered by inverse dynamics (gravity, Coriolis, and centripetal
// terms included) so that mechanizing the true rates reproduces the
// trajectory.
inline TruthTrajectory gen_trajectory(const EarthModel& em, const ProfileSpec& spec,
                                      double rate_hz) {
  spec.validate();
  if (!(rate_hz >= 50.0 && rate_hz <= 1000.0)) {
    throw ContractViolation("gen_trajectory: rate must be in [50, 1000] Hz");
  }

  const std::size_t n_seg = spec.segments.size();
  std::vector<double> start(n_seg), stop(n_seg);
  std::vector<detail::EntryState> entry(n_seg);
  double t_cursor = 0.0;
  detail::EntryState e;
  e.yaw = spec.yaw0;
  for (std::size_t i = 0; i < n_seg; ++i) {
    const Segment& seg = spec.segments[i];
    if (seg.kind == ManeuverKind::kHover && e.v_n.norm() > 1e-6) {
      throw SpecError("ProfileSpec: segment " + std::to_string(i) +
                      " (hover): entry velocity " + std::to_string(e.v_n.norm()) +
                      " m/s; hover requires the profile to arrive at rest");
    }
    entry[i] = e;
    start[i] = t_cursor;
    t_cursor += seg.duration;
    stop[i] = t_cursor;
    const detail::LocalKinematics end = detail::eval_segment(seg, e, seg.duration);
    e.p_n = end.p_n;
    e.v_n = end.v_n;
    e.yaw = end.yaw;
  }
  const double total = t_cursor;

  const Matrix3d n2e = ned_to_ecef_rotation(spec.origin);
  const Eigen::Quaterniond qn(n2e);
  const Quaternion q_ne = quat_normalize(Quaternion{qn.w(), qn.x(), qn.y(), qn.z()});
  const Vector3d p0_e = geodetic_to_ecef(em, spec.origin);
  const Vector3d omega_e = em.omega_vec();

  const auto segment_at = [&](double t) -> std::size_t {
    const auto it = std::upper_bound(stop.begin(), stop.end(), t);
    return std::min<std::size_t>(static_cast<std::size_t>(it - stop.begin()), n_seg - 1);
  };

  struct WorldState {
    Quaternion q_be;
    Vector3d v_e, p_e;
  };
  const auto state_at = [&](std::size_t i, double t) -> WorldState {
    const detail::LocalKinematics k =
        detail::eval_segment(spec.segments[i], entry[i], t - start[i]);
    WorldState ws;
    ws.p_e = p0_e + n2e * k.p_n;
    ws.v_e = n2e * k.v_n;
    const double half = 0.5 * k.yaw;
    ws.q_be = quat_mul(q_ne, Quaternion{std::cos(half), 0.0, 0.0, std::sin(half)});
    return ws;
  };

  // Inverse dynamics at one instant, evaluated under segment i's law (the
  // law matters only at segment boundaries, where the acceleration jumps).
  const auto rates_at = [&](std::size_t i, double t, Vector3d& w_b, Vector3d& f_b) {
    const detail::LocalKinematics k =
        detail::eval_segment(spec.segments[i], entry[i], t - start[i]);
    const Vector3d p_e = p0_e + n2e * k.p_n;
    const Vector3d v_e = n2e * k.v_n;
    const double c = std::cos(k.yaw), s = std::sin(k.yaw);
    Matrix3d c_bn;  // yaw-only attitude: body -> NED
    c_bn << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
    const Matrix3d c_eb = (n2e * c_bn).transpose();
    w_b = c_eb * omega_e + Vector3d(0.0, 0.0, k.yaw_rate);
    f_b = c_eb * (n2e * k.a_n + 2.0 * omega_e.cross(v_e) - effective_gravity(em, p_e));
    if (w_b.norm() > kMaxBodyRate || f_b.norm() > kMaxSpecificForce) {
      throw SpecError("ProfileSpec: segment " + std::to_string(i) + " (" +
                      maneuver_name(spec.segments[i].kind) +
                      "): dynamic limits exceeded (|f| <= 4 g, |w| <= 5 rad/s)");
    }
  };

  // Mean rates over [a, b] by Simpson's rule, split at any segment boundary
  // inside the interval so each piece is smooth.
  const auto mean_rates = [&](double a, double b, Vector3d& w_b, Vector3d& f_b) {
    Vector3d w_acc = Vector3d::Zero(), f_acc = Vector3d::Zero();
    double x0 = a;
    while (x0 < b - 1e-13 * std::max(1.0, std::abs(b))) {
      const std::size_t i = segment_at(std::min(x0 + 1e-12, b));  // law just after x0
      const double x1 = std::min(b, stop[i]);
      Vector3d w0, f0, wm, fm, w1, f1;
      rates_at(i, x0, w0, f0);
      rates_at(i, 0.5 * (x0 + x1), wm, fm);
      rates_at(i, x1, w1, f1);
      const double len = x1 - x0;
      w_acc += (len / 6.0) * (w0 + 4.0 * wm + w1);
      f_acc += (len / 6.0) * (f0 + 4.0 * fm + f1);
      x0 = x1;
    }
    w_b = w_acc / (b - a);
    f_b = f_acc / (b - a);
  };

  TruthTrajectory out;
  out.rate_hz = rate_hz;
  const double dt = 1.0 / rate_hz;
  const long long n = static_cast<long long>(std::floor(total * rate_hz + 1e-9));
  out.samples.reserve(static_cast<std::size_t>(n) + 1);
  for (long long kk = 0; kk <= n; ++kk) {
    const double t = kk * dt;
    TruthSample smp;
    smp.t = t;
    const WorldState ws = state_at(segment_at(t), t);
    smp.q_be = ws.q_be;
    smp.v_e = ws.v_e;
    smp.p_e = ws.p_e;
    if (kk == 0) {
      rates_at(segment_at(0.0), 0.0, smp.w_ib_b, smp.f_b);
    } else {
      mean_rates(t - dt, t, smp.w_ib_b, smp.f_b);
    }
    out.samples.push_back(smp);
  }
  return out;
}

// IMU synthesis: reading = true rate + bias + white noise with per-sample
// standard deviation sigma * sqrt(rate). With random_walk_bias the biases
// drift by sigma_b * sqrt(dt) increments per step (the same process the
// filter's noise model assumes); otherwise they stay at the injected
// constants. Deterministic given the seed.
inline std::vector<ImuSample> synth_imu(const TruthTrajectory& truth, const NoiseParams& noise,
                                        const Vector3d& bias_w, const Vector3d& bias_f,
                                        std::uint64_t seed, bool random_walk_bias = false) {
  noise.validate();
  std::vector<ImuSample> out;
  if (truth.samples.size() < 2) return out;
  out.reserve(truth.samples.size() - 1);

  NormalStream white(seed);
  Vector3d bw = bias_w, bf = bias_f;
  const double sw = noise.sigma_w * std::sqrt(truth.rate_hz);
  const double sf = noise.sigma_f * std::sqrt(truth.rate_hz);
  for (std::size_t k = 1; k < truth.samples.size(); ++k) {
    const TruthSample& s = truth.samples[k];
    const double dt = s.t - truth.samples[k - 1].t;
    if (random_walk_bias) {
      const double root_dt = std::sqrt(dt);
      bw += noise.sigma_bw * root_dt * white.next_vec3();
      bf += noise.sigma_bf * root_dt * white.next_vec3();
    }
    ImuSample m;
    m.t = s.t;
    m.w_ib_b = s.w_ib_b + bw + sw * white.next_vec3();
    m.f_b = s.f_b + bf + sf * white.next_vec3();
    out.push_back(m);
  }
  return out;
}

// GNSS synthesis: truth decimated to the fix rate plus independent Gaussian
// noise per axis, stamped with the noise standard deviations it was drawn
// from. Deterministic given the seed.
inline std::vector<GpsFix> synth_gps(const TruthTrajectory& truth, const NoiseParams& noise,
                                     double rate_hz, std::uint64_t seed) {
  noise.validate();
  if (!(rate_hz > 0.0) || rate_hz > truth.rate_hz) {
    throw ContractViolation("synth_gps: fix rate must be positive and at most the IMU rate");
  }
  const double stride_real = truth.rate_hz / rate_hz;
  const long long stride = static_cast<long long>(std::llround(stride_real));
  if (std::abs(stride_real - static_cast<double>(stride)) > 1e-9 * stride_real) {
    throw ContractViolation("synth_gps: IMU rate must be an integer multiple of the fix rate");
  }

  NormalStream white(seed);
  std::vector<GpsFix> out;
  for (std::size_t k = 0; k < truth.samples.size(); k += static_cast<std::size_t>(stride)) {
    const TruthSample& s = truth.samples[k];
    GpsFix fix;
    fix.t = s.t;
    fix.p_e = s.p_e + noise.r_p * white.next_vec3();
    fix.v_e = s.v_e + noise.r_v * white.next_vec3();
    fix.r_p = noise.r_p;
    fix.r_v = noise.r_v;
    out.push_back(fix);
  }
  return out;
}

}  // namespace tridentnav
