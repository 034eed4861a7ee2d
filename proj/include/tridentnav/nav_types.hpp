#pragma once

// Core value types shared by the mechanization, filter, simulator and I/O
// layers.

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "tridentnav/errors.hpp"
#include "tridentnav/quaternion.hpp"

namespace tridentnav {

// Full navigation state: attitude (body -> ECEF), ECEF velocity/position,
// and the current sensor-bias estimates carried along for IMU correction.
struct NavState {
  Quaternion q_be;                     // unit attitude quaternion
  Vector3d v_e{Vector3d::Zero()};      // m/s
  Vector3d p_e{Vector3d::Zero()};      // m
  Vector3d b_w{Vector3d::Zero()};      // gyro bias estimate, rad/s
  Vector3d b_f{Vector3d::Zero()};      // accel bias estimate, m/s^2
  double t = 0.0;                      // s

  void validate() const {
    if (std::abs(quat_norm(q_be) - 1.0) > 1e-9) {
      throw NumericalError("NavState: attitude quaternion not unit");
    }
    if (!v_e.allFinite() || !p_e.allFinite() || !b_w.allFinite() || !b_f.allFinite() ||
        !std::isfinite(t)) {
      throw NumericalError("NavState: non-finite component");
    }
  }
};

// One inertial sample: angular rate and specific force readings.
struct ImuSample {
  double t = 0.0;                       // s
  Vector3d w_ib_b{Vector3d::Zero()};    // gyro reading, rad/s
  Vector3d f_b{Vector3d::Zero()};       // accelerometer reading, m/s^2
};

// One GNSS fix: ECEF position and velocity with per-axis standard deviations.
struct GpsFix {
  double t = 0.0;                       // s
  Vector3d p_e{Vector3d::Zero()};       // m
  Vector3d v_e{Vector3d::Zero()};       // m/s
  double r_p = 2.0;                     // position std per axis, m
  double r_v = 0.2;                     // velocity std per axis, m/s

  void validate() const {
    if (!p_e.allFinite() || !v_e.allFinite() || !std::isfinite(t)) {
      throw NumericalError("GpsFix: non-finite component");
    }
    if (!(r_p > 0.0) || !(r_v > 0.0)) {
      throw SpecError("GpsFix: measurement standard deviations must be positive");
    }
  }
};

}  // namespace tridentnav
