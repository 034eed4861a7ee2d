#pragma once

// Error-state Kalman filter over the body-frame error model: covariance
// propagation at IMU rate (trident-form mechanization for the nominal state),
// loosely-coupled GNSS position/velocity updates, immediate feedback of the
// estimated error into the navigation state (closed loop: the error mean is
// zero between updates, the covariance carries all uncertainty).

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "tridentnav/earth.hpp"
#include "tridentnav/error_model.hpp"
#include "tridentnav/errors.hpp"
#include "tridentnav/mechanization.hpp"
#include "tridentnav/nav_types.hpp"
#include "tridentnav/quaternion.hpp"

namespace tridentnav {

// Chi-square 0.999 quantile with 6 degrees of freedom: innovation gate for
// the stacked position/velocity measurement.
inline constexpr double kInnovationGate = 22.46;

struct FilterState {
  NavState nav;
  Matrix15d P = Matrix15d::Zero();  // covariance of the body-frame error state
  double t_last_update = 0.0;       // s, time of the last accepted fix

  void validate() const {
    nav.validate();
    const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
    if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw NumericalError("FilterState: covariance not symmetric");
    }
    if (P.diagonal().minCoeff() < 0.0) {
      throw NumericalError("FilterState: negative covariance diagonal");
    }
  }
};

struct InnovationRecord {
  double t = 0.0;
  Vector6d dy = Vector6d::Zero();  // measurement minus estimate: position, velocity
  Matrix6d S = Matrix6d::Zero();   // innovation covariance
  double nis = 0.0;                // dy' S^-1 dy
  bool accepted = true;            // false when the gate rejected the fix
};

namespace detail {

inline Matrix15d symmetrize(const Matrix15d& m) { return 0.5 * (m + m.transpose()); }

inline void check_covariance_health(const Matrix15d& p, const char* where) {
  if (!p.allFinite()) {
    // NaN/inf would sail through the eigenvalue comparison below.
    throw NumericalError(std::string(where) + ": covariance is non-finite");
  }
  Eigen::SelfAdjointEigenSolver<Matrix15d> es(p, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9 * p.trace()) {
    throw NumericalError(std::string(where) + ": covariance lost positive semidefiniteness");
  }
}

inline Matrix6d fix_covariance(const GpsFix& fix) {
  Matrix6d r = Matrix6d::Zero();
  r.diagonal().segment<3>(0).setConstant(fix.r_p * fix.r_p);
  r.diagonal().segment<3>(3).setConstant(fix.r_v * fix.r_v);
  return r;
}

}  // namespace detail

// One IMU-rate cycle: advance the navigation state through the trident-form
// strapdown step on bias-corrected rates, and propagate the covariance with
// the discretized error model linearized at the pre-step state.
inline FilterState predict(const EarthModel& em, const FilterState& fs, const Vector3d& w_raw,
                           const Vector3d& f_raw, double dt, const NoiseParams& noise,
                           MechForm form = MechForm::kTrident) {
  if (!(dt > 0.0)) {
    throw ContractViolation("predict: dt must be positive");
  }
  const Vector3d w = w_raw - fs.nav.b_w;
  const Vector3d f = f_raw - fs.nav.b_f;

  Matrix15d phi, q_d;
  discretize(build_F_L(em, fs.nav, w, f), build_B_L(), noise.continuous_q(), dt, phi, q_d);

  FilterState out = fs;
  out.nav = form == MechForm::kClassical ? classical_step(em, fs.nav, w, f, dt)
                                         : trident_step_nav(em, fs.nav, w, f, dt);
  out.P = detail::symmetrize(phi * fs.P * phi.transpose() + q_d);
  detail::check_covariance_health(out.P, "predict");
  return out;
}

// Innovation of one GNSS fix against the current estimate. The fix must fall
// within one IMU interval of the navigation time (the caller propagates to
// the fix first).
inline InnovationRecord innovation(const FilterState& fs, const GpsFix& fix,
                                   double max_time_offset = 0.01,
                                   double gate = kInnovationGate) {
  fix.validate();
  if (std::abs(fix.t - fs.nav.t) > max_time_offset + 1e-12) {
    throw ContractViolation("innovation: fix at t=" + std::to_string(fix.t) +
                            " not aligned with navigation time t=" + std::to_string(fs.nav.t));
  }
  InnovationRecord rec;
  rec.t = fix.t;
  rec.dy.segment<3>(0) = fix.p_e - fs.nav.p_e;
  rec.dy.segment<3>(3) = fix.v_e - fs.nav.v_e;

  const Matrix6x15d h = build_H_L(fs.nav);
  const Matrix6d s = h * fs.P * h.transpose() + detail::fix_covariance(fix);
  rec.S = 0.5 * (s + s.transpose());
  if (!rec.S.allFinite()) {
    throw NumericalError("innovation: non-finite innovation covariance");
  }

  const Eigen::LLT<Matrix6d> llt(rec.S);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("innovation: innovation covariance not positive definite");
  }
  rec.nis = rec.dy.dot(llt.solve(rec.dy));
  rec.accepted = rec.nis <= gate;
  return rec;
}

// Folds an estimated error back into the navigation state. Every slot of the
// error estimate is truth minus estimate (translational slots in body axes),
// so the correction is added through the current attitude.
inline NavState apply_feedback(const NavState& nav, const ErrorState& dx) {
  dx.validate();
  if (!(dx.dsigma().norm() < 0.5)) {
    throw DivergenceError("apply_feedback: attitude correction " +
                          std::to_string(dx.dsigma().norm()) +
                          " rad exceeds the small-error regime");
  }
  const Matrix3d c_be = quat_to_rotmat(nav.q_be);
  NavState out = nav;
  out.q_be = quat_normalize(quat_mul(nav.q_be, Quaternion{1.0, 0.5 * Vector3d(dx.dsigma())}));
  out.v_e = nav.v_e + c_be * dx.dsigma1();
  out.p_e = nav.p_e + c_be * dx.dsigma2();
  out.b_w = nav.b_w + dx.db_w();
  out.b_f = nav.b_f + dx.db_f();
  return out;
}

struct UpdateResult {
  FilterState fs;
  InnovationRecord innov;
};

// Measurement update with chi-square gating: a fix whose NIS exceeds the gate
// leaves the state and covariance untouched (the record says so). Accepted
// fixes produce a Joseph-form covariance update and immediate feedback.
inline UpdateResult update(const FilterState& fs, const GpsFix& fix,
                           double max_time_offset = 0.01, double gate = kInnovationGate) {
  UpdateResult res{fs, innovation(fs, fix, max_time_offset, gate)};
  if (!res.innov.accepted) {
    return res;
  }

  const Matrix6x15d h = build_H_L(fs.nav);
  // K = P H' S^-1, via the Cholesky factor of S.
  const Eigen::LLT<Matrix6d> llt(res.innov.S);
  const Eigen::Matrix<double, 15, 6> k = llt.solve(h * fs.P).transpose();

  ErrorState dx;
  dx.x = k * res.innov.dy;

  const Matrix15d ikh = Matrix15d::Identity() - k * h;
  res.fs.P = detail::symmetrize(ikh * fs.P * ikh.transpose() +
                                k * detail::fix_covariance(fix) * k.transpose());
  detail::check_covariance_health(res.fs.P, "update");
  res.fs.nav = apply_feedback(fs.nav, dx);
  res.fs.t_last_update = fix.t;
  return res;
}

// Priors for filter bootstrap.
struct FilterInitConfig {
  double sigma_roll_pitch = 0.02;  // rad, leveling accuracy prior
  double sigma_yaw = 0.5;          // rad, deliberately large: yaw starts unobserved
  double sigma_v = 0.5;            // m/s
  double sigma_p = 5.0;            // m
  double sigma_bw = 0.02;          // rad/s
  double sigma_bf = 0.1;           // m/s^2

  void validate() const {
    if (!(sigma_roll_pitch > 0.0) || !(sigma_yaw > 0.0) || !(sigma_v > 0.0) ||
        !(sigma_p > 0.0) || !(sigma_bw > 0.0) || !(sigma_bf > 0.0)) {
      throw SpecError("FilterInitConfig: prior standard deviations must be positive");
    }
  }
};

// Bootstraps the filter from a stationary window: position/velocity from the
// first fix, roll/pitch by leveling the averaged accelerometer against
// gravity, yaw at zero with its configured (large) prior — horizontal
// maneuvers later make it observable. Biases start at zero.
inline FilterState init_filter(const EarthModel& em, const std::vector<GpsFix>& fixes,
                               const std::vector<ImuSample>& imu_window,
                               const FilterInitConfig& cfg) {
  cfg.validate();
  if (fixes.empty()) {
    throw InitializationError("init_filter: at least one GNSS fix is required");
  }
  if (imu_window.size() < 2 || imu_window.back().t - imu_window.front().t < 2.0) {
    throw InitializationError("init_filter: at least 2 s of stationary IMU data required");
  }
  const GpsFix& fix0 = fixes.front();
  fix0.validate();

  Vector3d f_bar = Vector3d::Zero();
  for (const ImuSample& s : imu_window) f_bar += s.f_b;
  f_bar /= static_cast<double>(imu_window.size());
  if (f_bar.norm() < 1.0) {
    throw InitializationError("init_filter: averaged specific force too small to level against");
  }

  // Stationary accelerometer reads -gravity in body axes; solve for the tilt.
  const double roll = std::atan2(-f_bar.y(), -f_bar.z());
  const double pitch = std::atan2(f_bar.x(), std::hypot(f_bar.y(), f_bar.z()));

  const Matrix3d c_bn0 = (Eigen::AngleAxisd(pitch, Vector3d::UnitY()) *
                          Eigen::AngleAxisd(roll, Vector3d::UnitX()))
                             .toRotationMatrix();  // maps f_bar onto (0, 0, -|f_bar|)

  // A resting accelerometer senses the model's plumb line, which deflects
  // from the geodetic normal (milliradians for a central field, microradians
  // once oblateness is included). Tip the leveled frame onto the plumb line
  // of the configured model so the initial tilt error is set by sensor noise
  // alone, not by the shape of the field. The correction axis is horizontal,
  // so no yaw is introduced.
  const GeodeticCoord geo = ecef_to_geodetic(em, fix0.p_e);
  const Matrix3d n2e = ned_to_ecef_rotation(geo);
  const Vector3d g_n = (n2e.transpose() * effective_gravity(em, fix0.p_e)).normalized();
  const double c = Vector3d::UnitZ().dot(g_n);
  if (!(c > 0.0)) {
    throw InitializationError("init_filter: gravity model points away from local down");
  }
  const Vector3d k = Vector3d::UnitZ().cross(g_n);
  const Matrix3d r_plumb = Matrix3d::Identity() + skew(k) + skew(k) * skew(k) / (1.0 + c);
  const Matrix3d c_bn = r_plumb * c_bn0;
  const Matrix3d c_be = n2e * c_bn;
  const Eigen::Quaterniond q(c_be);

  FilterState fs;
  fs.nav.q_be = quat_normalize(Quaternion{q.w(), q.x(), q.y(), q.z()});
  fs.nav.v_e = fix0.v_e;
  fs.nav.p_e = fix0.p_e;
  fs.nav.b_w.setZero();
  fs.nav.b_f.setZero();
  fs.nav.t = fix0.t;
  fs.t_last_update = fix0.t;

  // Attitude prior: tilt accuracy about the horizontal axes, the yaw prior
  // about local down, expressed in body axes. "Down" is the plumb axis the
  // leveling aligned to, i.e. the z axis of the pre-tip leveled frame.
  const Matrix3d c_nb = c_bn0.transpose();
  Vector3d att_diag(cfg.sigma_roll_pitch * cfg.sigma_roll_pitch,
                    cfg.sigma_roll_pitch * cfg.sigma_roll_pitch,
                    cfg.sigma_yaw * cfg.sigma_yaw);
  fs.P.topLeftCorner<3, 3>() = c_nb * att_diag.asDiagonal() * c_nb.transpose();
  fs.P.block<3, 3>(3, 3) = cfg.sigma_v * cfg.sigma_v * Matrix3d::Identity();
  fs.P.block<3, 3>(6, 6) = cfg.sigma_p * cfg.sigma_p * Matrix3d::Identity();
  fs.P.block<3, 3>(9, 9) = cfg.sigma_bw * cfg.sigma_bw * Matrix3d::Identity();
  fs.P.block<3, 3>(12, 12) = cfg.sigma_bf * cfg.sigma_bf * Matrix3d::Identity();
  fs.validate();
  return fs;
}

// Standard deviation of the heading error: the attitude-error covariance
// projected onto the body-frame vertical. The vertical is the configured
// model's plumb line, the same gauge the initializer levels against.
inline double yaw_sigma(const EarthModel& em, const FilterState& fs) {
  const Vector3d down_e = effective_gravity(em, fs.nav.p_e).normalized();
  const Vector3d down_b = quat_to_rotmat(fs.nav.q_be).transpose() * down_e;
  return std::sqrt(std::max(0.0, down_b.dot(fs.P.topLeftCorner<3, 3>() * down_b)));
}

}  // namespace tridentnav
