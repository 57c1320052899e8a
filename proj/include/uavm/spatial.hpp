#pragma once

#include <array>

#include <Eigen/Dense>

#include "uavm/errors.hpp"

namespace uavm {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec12 = Eigen::Matrix<double, 12, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat12 = Eigen::Matrix<double, 12, 12>;
using Mat6x12 = Eigen::Matrix<double, 6, 12>;
using Mat12x6 = Eigen::Matrix<double, 12, 6>;

inline constexpr double kPitchGuard = 1e-6;      // rad from +-pi/2
inline constexpr double kCondGuard = 1e6;        // J_eq condition limit

Mat3 skew(const Vec3 &v);

/// Roll-pitch-yaw angles, composition R = Rz(yaw) * Ry(pitch) * Rx(roll).
struct RpyAngles {
  double roll{0.0};
  double pitch{0.0};
  double yaw{0.0};

  Vec3 vec() const { return {roll, pitch, yaw}; }
  static RpyAngles from(const Vec3 &v) { return {v.x(), v.y(), v.z()}; }
};

Mat3 rpy_to_rotation(const RpyAngles &rpy);

/// Inverse of rpy_to_rotation. Throws GimbalLockError near |pitch| = pi/2.
RpyAngles rotation_to_rpy(const Mat3 &R);

/// Q such that body angular velocity w = Q * d/dt(rpy).
Mat3 euler_rate_map(const RpyAngles &rpy);
Mat3 euler_rate_map_inv(const RpyAngles &rpy);

/// Analytic dQ/dt given the angle rates.
Mat3 euler_rate_map_dot(const RpyAngles &rpy, const Vec3 &rpy_dot);

/// Rigid transform: rotation plus translation of the child origin in the parent.
struct Pose {
  Mat3 R{Mat3::Identity()};
  Vec3 p{Vec3::Zero()};

  Pose operator*(const Pose &other) const { return {R * other.R, p + R * other.p}; }
  Pose inverse() const { return {R.transpose(), -(R.transpose() * p)}; }
  static Pose identity() { return {}; }
};

/// Twist (linear; angular) of a frame, expressed in that frame.
struct BodyTwist {
  Vec3 v{Vec3::Zero()};
  Vec3 w{Vec3::Zero()};

  Vec6 vec() const {
    Vec6 out;
    out << v, w;
    return out;
  }
  static BodyTwist from(const Vec6 &x) { return {x.head<3>(), x.tail<3>()}; }
};

/// Twist re-expression map for (v; w) stacking: V_a = adjoint(X_ab) * V_b.
Mat6 adjoint(const Pose &X);

/// End-effector coordinate x_e = (position of {e} in {f}; rpy of {e} in {f}).
Vec6 pose_to_ee_coord(const Pose &pose_fe);

/// One revolute joint: fixed parent-to-joint transform, axis, link inertial data.
/// The link body is attached to the joint frame; inertia is about the link
/// center of mass, expressed in the link frame.
struct ArmJoint {
  Pose transform;
  Vec3 axis{Vec3::UnitZ()};
  double mass{1.0};
  Vec3 com{Vec3::Zero()};
  Mat3 inertia{Mat3::Identity()};
};

struct ArmModel {
  static constexpr int kJoints = 6;
  Pose mount;                    // fuselage to arm base
  std::array<ArmJoint, kJoints> joints;
  Pose ee_offset;                // last link frame to {e}
  // reflected drivetrain inertia per joint (gearbox + rotor, seen at the
  // joint axis); keeps the light wrist joints well conditioned at the 1 kHz
  // control rate
  Vec6 rotor_inertia{Vec6::Constant(0.06)};

  void validate() const;        // throws ConfigError on bad data
};

/// Link frames of the chain expressed in {f}, plus the end-effector frame.
struct ArmPoses {
  std::array<Pose, ArmModel::kJoints> link_in_f;
  Pose ee_in_f;
};

ArmPoses arm_chain_poses(const ArmModel &model, const Vec6 &q_m);

/// Pose of {e} in {f}.
Pose arm_forward_kinematics(const ArmModel &model, const Vec6 &q_m);

/// Body Jacobian J_eq: maps dq_m to the twist of {e} relative to {f}, in {e}.
Mat6 arm_body_jacobian(const ArmModel &model, const Vec6 &q_m);

/// J_ef = adjoint of the {f}-in-{e} pose; maps V_f to the {e}-frame image of
/// the fuselage twist.
Mat6 fuselage_to_ee_adjoint(const Pose &pose_fe);

struct JacobianSet {
  Mat6 J_eq;
  Mat6 J_ef;
  Mat6 T;              // blkdiag(fRe, Q(fphi_e)^-1)
  double cond_J_eq{0.0};
  Vec6 x_e;            // end-effector coordinate at the evaluated configuration

  bool singular() const { return cond_J_eq > kCondGuard; }
};

/// Evaluates all Jacobian blocks at q_m. Throws GimbalLockError when the
/// end-effector pitch leaves the guard band.
JacobianSet compute_jacobians(const ArmModel &model, const Vec6 &q_m);

/// xdot_e = T [-J_ef  I] xi_e  (Lemma form; xi_e = (V_f, V_e)).
Vec6 xdot_from_xi(const JacobianSet &J, const Vec12 &xi_e);

/// Documented 6R default arm; home configuration q = 0 places the
/// end-effector at x_e = [0.3, 0, -0.75, 0, 0, 0].
ArmModel default_arm();

} // namespace uavm
