#pragma once

// Continuous-time body-frame (left) error-state model for the INS/GNSS
// filter, and its discretization.
//
// The 15-dimensional error state, in fixed slot order, is
//   [ dsigma  dsigma'  dsigma''  db_w  db_f ]
// where
//   dsigma   = 2 logvec(q_est* q_true)      body-frame attitude error, rad
//   dsigma'  = C_e^b (v_true - v_est)       body-frame velocity error, m/s
//   dsigma'' = C_e^b (p_true - p_est)       body-frame position error, m
//   db_w     = b_w,true - b_w,est           gyro bias error, rad/s
//   db_f     = b_f,true - b_f,est           accel bias error, m/s^2
// i.e. every slot is truth minus estimate, with the translational slots
// resolved in the body frame. The innovation convention throughout is
// measurement minus estimate.

#include <Eigen/Dense>
#include <cmath>

#include "tridentnav/earth.hpp"
#include "tridentnav/errors.hpp"
#include "tridentnav/nav_types.hpp"
#include "tridentnav/quaternion.hpp"

namespace tridentnav {

using Vector15d = Eigen::Matrix<double, 15, 1>;
using Matrix15d = Eigen::Matrix<double, 15, 15>;
using Matrix15x12d = Eigen::Matrix<double, 15, 12>;
using Matrix12d = Eigen::Matrix<double, 12, 12>;
using Matrix6x15d = Eigen::Matrix<double, 6, 15>;
using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

// Error state as one 15-vector with named slot views.
struct ErrorState {
  Vector15d x = Vector15d::Zero();

  Eigen::VectorBlock<Vector15d, 3> dsigma() { return x.segment<3>(0); }
  Eigen::VectorBlock<Vector15d, 3> dsigma1() { return x.segment<3>(3); }
  Eigen::VectorBlock<Vector15d, 3> dsigma2() { return x.segment<3>(6); }
  Eigen::VectorBlock<Vector15d, 3> db_w() { return x.segment<3>(9); }
  Eigen::VectorBlock<Vector15d, 3> db_f() { return x.segment<3>(12); }
  Eigen::VectorBlock<const Vector15d, 3> dsigma() const { return x.segment<3>(0); }
  Eigen::VectorBlock<const Vector15d, 3> dsigma1() const { return x.segment<3>(3); }
  Eigen::VectorBlock<const Vector15d, 3> dsigma2() const { return x.segment<3>(6); }
  Eigen::VectorBlock<const Vector15d, 3> db_w() const { return x.segment<3>(9); }
  Eigen::VectorBlock<const Vector15d, 3> db_f() const { return x.segment<3>(12); }

  void validate() const {
    if (!x.allFinite()) throw NumericalError("ErrorState: non-finite component");
  }
};

// White-noise densities of the inertial sensors and bias random walks, plus
// the per-axis GNSS measurement standard deviations.
struct NoiseParams {
  double sigma_w = 8.7e-4;   // gyro noise density, rad/s/sqrt(Hz)
  double sigma_f = 2.3e-3;   // accel noise density, m/s^2/sqrt(Hz)
  double sigma_bw = 2.0e-5;  // gyro bias random-walk drive, rad/s^2/sqrt(Hz)
  double sigma_bf = 1.0e-4;  // accel bias random-walk drive, m/s^3/sqrt(Hz)
  double r_p = 2.0;          // GNSS position std per axis, m
  double r_v = 0.2;          // GNSS velocity std per axis, m/s

  void validate() const {
    if (sigma_w < 0 || sigma_f < 0 || sigma_bw < 0 || sigma_bf < 0 || r_p < 0 || r_v < 0) {
      throw SpecError("NoiseParams: noise densities and measurement stds must be nonnegative");
    }
  }

  // Continuous-time process noise covariance, ordered (gyro white, accel
  // white, gyro bias drive, accel bias drive), independent channels.
  Matrix12d continuous_q() const {
    Matrix12d q = Matrix12d::Zero();
    q.diagonal().segment<3>(0).setConstant(sigma_w * sigma_w);
    q.diagonal().segment<3>(3).setConstant(sigma_f * sigma_f);
    q.diagonal().segment<3>(6).setConstant(sigma_bw * sigma_bw);
    q.diagonal().segment<3>(9).setConstant(sigma_bf * sigma_bf);
    return q;
  }

  // GNSS measurement covariance, position block then velocity block.
  Matrix6d measurement_r() const {
    Matrix6d r = Matrix6d::Zero();
    r.diagonal().segment<3>(0).setConstant(r_p * r_p);
    r.diagonal().segment<3>(3).setConstant(r_v * r_v);
    return r;
  }
};

// System matrix of the body-frame error dynamics at the given operating
// point (bias-corrected rates w, f). Block layout (rows = d/dt of slots):
//
//   [ -(w x)       0                 0                -I   0  ]
//   [ -(f x)   -((w + C_e^b W)x)   C_e^b G C_b^e       0  -I  ]
//   [    0          I             -((w - C_e^b W)x)    0   0  ]
//   [    0          0                 0                0   0  ]
//   [    0          0                 0                0   0  ]
//
// with W the Earth rate and G the position gradient of effective gravity,
// both resolved as shown. The (2,1) entry is -(f x): with all slots defined
// truth-minus-estimate and the identity slots (1,4) = (2,5) = -I and
// (3,2) = +I fixed as above, the attitude-to-velocity coupling carries the
// minus sign in every self-consistent assignment; the finite-difference
// oracle in the tests pins this down against the nonlinear error dynamics.
inline Matrix15d build_F_L(const EarthModel& em, const NavState& state,
                           const Vector3d& w, const Vector3d& f) {
  const Matrix3d c_be = quat_to_rotmat(state.q_be);
  const Matrix3d c_eb = c_be.transpose();
  const Vector3d w_ie_b = c_eb * em.omega_vec();
  const Matrix3d g_jac = gravity_jacobian(em, state.p_e);

  Matrix15d fl = Matrix15d::Zero();
  fl.block<3, 3>(0, 0) = -skew(w);
  fl.block<3, 3>(0, 9) = -Matrix3d::Identity();
  fl.block<3, 3>(3, 0) = -skew(f);
  fl.block<3, 3>(3, 3) = -skew(Vector3d(w + w_ie_b));
  fl.block<3, 3>(3, 6) = c_eb * g_jac * c_be;
  fl.block<3, 3>(3, 12) = -Matrix3d::Identity();
  fl.block<3, 3>(6, 3) = Matrix3d::Identity();
  fl.block<3, 3>(6, 6) = -skew(Vector3d(w - w_ie_b));
  return fl;
}

// Noise input matrix: white gyro noise enters the attitude-error rate and
// white accel noise the velocity-error rate (both negated, as the noises sit
// on the measured rates), and the bias drives feed the bias slots directly.
inline Matrix15x12d build_B_L() {
  Matrix15x12d b = Matrix15x12d::Zero();
  b.block<3, 3>(0, 0) = -Matrix3d::Identity();
  b.block<3, 3>(3, 3) = -Matrix3d::Identity();
  b.block<3, 3>(9, 6) = Matrix3d::Identity();
  b.block<3, 3>(12, 9) = Matrix3d::Identity();
  return b;
}

// Measurement matrix for loosely-coupled GNSS position/velocity fixes with
// innovation = measurement - estimate: the position innovation reads the
// body-frame position-error slot through C_b^e, the velocity innovation the
// velocity slot. Innovation stacking is position first, velocity second.
inline Matrix6x15d build_H_L(const NavState& state) {
  const Matrix3d c_be = quat_to_rotmat(state.q_be);
  Matrix6x15d h = Matrix6x15d::Zero();
  h.block<3, 3>(0, 6) = c_be;
  h.block<3, 3>(3, 3) = c_be;
  return h;
}

// Orthogonal change of basis from the ECEF-frame error state
//   [ phi^e (truth vs estimate, e-frame)   dv^e (est - true)
//     dp^e (est - true)                    db_w   db_f ]
// to the body-frame error state above: dx_body = J dx_ecef.
inline Matrix15d build_J_L(const NavState& state) {
  const Matrix3d c_eb = quat_to_rotmat(state.q_be).transpose();
  Matrix15d j = Matrix15d::Zero();
  j.block<3, 3>(0, 0) = c_eb;
  j.block<3, 3>(3, 3) = -c_eb;
  j.block<3, 3>(6, 6) = -c_eb;
  j.block<3, 3>(9, 9) = Matrix3d::Identity();
  j.block<3, 3>(12, 12) = Matrix3d::Identity();
  return j;
}

// Second-order discretization of the continuous model:
//   Phi = I + F dt + F^2 dt^2/2
//   Q_d = (Phi B Qc B' Phi' + B Qc B') dt / 2, symmetrized
// (trapezoidal accumulation of the process noise over the step).
inline void discretize(const Matrix15d& f, const Matrix15x12d& b, const Matrix12d& q_c,
                       double dt, Matrix15d& phi, Matrix15d& q_d) {
  if (!(dt > 0.0) || dt > 1.0) {
    throw ContractViolation("discretize: dt must lie in (0, 1] s, got " + std::to_string(dt));
  }
  const double scale = std::max(1.0, q_c.cwiseAbs().maxCoeff());
  if ((q_c - q_c.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw ContractViolation("discretize: Qc must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix12d> es(q_c);
  if (es.eigenvalues().minCoeff() < -1e-12 * scale) {
    throw ContractViolation("discretize: Qc must be positive semidefinite");
  }

  const Matrix15d f_dt = f * dt;
  phi = Matrix15d::Identity() + f_dt + 0.5 * f_dt * f_dt;
  const Matrix15d m = b * q_c * b.transpose();
  q_d = 0.5 * dt * (phi * m * phi.transpose() + m);
  q_d = 0.5 * (q_d + q_d.transpose()).eval();
}

}  // namespace tridentnav
