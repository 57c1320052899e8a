#include "uavm/spatial.hpp"

#include <cmath>

namespace uavm {

Mat3 skew(const Vec3 &v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return m;
}

Mat3 rpy_to_rotation(const RpyAngles &rpy) {
  const Eigen::AngleAxisd rx(rpy.roll, Vec3::UnitX());
  const Eigen::AngleAxisd ry(rpy.pitch, Vec3::UnitY());
  const Eigen::AngleAxisd rz(rpy.yaw, Vec3::UnitZ());
  return (rz * ry * rx).toRotationMatrix();
}

RpyAngles rotation_to_rpy(const Mat3 &R) {
  const double s_pitch = -R(2, 0);
  if (std::abs(s_pitch) >= std::sin(M_PI / 2.0 - kPitchGuard)) {
    throw GimbalLockError("rotation_to_rpy: pitch within guard band of +-pi/2");
  }
  RpyAngles rpy;
  rpy.pitch = std::asin(s_pitch);
  rpy.roll = std::atan2(R(2, 1), R(2, 2));
  rpy.yaw = std::atan2(R(1, 0), R(0, 0));
  return rpy;
}

namespace {

void check_pitch(const RpyAngles &rpy, const char *where) {
  if (std::abs(rpy.pitch) >= M_PI / 2.0 - kPitchGuard) {
    throw GimbalLockError(std::string(where) + ": pitch within guard band of +-pi/2");
  }
}

} // namespace

Mat3 euler_rate_map(const RpyAngles &rpy) {
  check_pitch(rpy, "euler_rate_map");
  const double ca = std::cos(rpy.roll), sa = std::sin(rpy.roll);
  const double cb = std::cos(rpy.pitch), sb = std::sin(rpy.pitch);
  Mat3 Q;
  Q << 1.0, 0.0, -sb,
       0.0, ca, sa * cb,
       0.0, -sa, ca * cb;
  return Q;
}

Mat3 euler_rate_map_inv(const RpyAngles &rpy) {
  check_pitch(rpy, "euler_rate_map_inv");
  const double ca = std::cos(rpy.roll), sa = std::sin(rpy.roll);
  const double cb = std::cos(rpy.pitch), tb = std::tan(rpy.pitch);
  Mat3 Qi;
  Qi << 1.0, sa * tb, ca * tb,
        0.0, ca, -sa,
        0.0, sa / cb, ca / cb;
  return Qi;
}

Mat3 euler_rate_map_dot(const RpyAngles &rpy, const Vec3 &rpy_dot) {
  check_pitch(rpy, "euler_rate_map_dot");
  const double ca = std::cos(rpy.roll), sa = std::sin(rpy.roll);
  const double cb = std::cos(rpy.pitch), sb = std::sin(rpy.pitch);
  const double da = rpy_dot.x(), db = rpy_dot.y();
  Mat3 Qd;
  Qd << 0.0, 0.0, -cb * db,
        0.0, -sa * da, ca * cb * da - sa * sb * db,
        0.0, -ca * da, -sa * cb * da - ca * sb * db;
  return Qd;
}

Mat6 adjoint(const Pose &X) {
  Mat6 ad = Mat6::Zero();
  ad.topLeftCorner<3, 3>() = X.R;
  ad.topRightCorner<3, 3>() = skew(X.p) * X.R;
  ad.bottomRightCorner<3, 3>() = X.R;
  return ad;
}

Vec6 pose_to_ee_coord(const Pose &pose_fe) {
  Vec6 x;
  x.head<3>() = pose_fe.p;
  x.tail<3>() = rotation_to_rpy(pose_fe.R).vec();
  return x;
}

void ArmModel::validate() const {
  for (int i = 0; i < kJoints; ++i) {
    const ArmJoint &j = joints[i];
    const std::string tag = "arm.links[" + std::to_string(i) + "]";
    if (std::abs(j.axis.norm() - 1.0) > 1e-9) {
      throw ConfigError(tag + ".axis: not unit norm");
    }
    if (!(j.mass > 0.0)) {
      throw ConfigError(tag + ".mass: must be positive");
    }
    if ((j.inertia - j.inertia.transpose()).norm() > 1e-9) {
      throw ConfigError(tag + ".inertia: not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat3> es(j.inertia);
    if (es.eigenvalues().minCoeff() <= 0.0) {
      throw ConfigError(tag + ".inertia: not positive definite");
    }
  }
  for (int i = 0; i < kJoints; ++i) {
    if (rotor_inertia[i] < 0.0) {
      throw ConfigError("arm.rotor_inertia[" + std::to_string(i) +
                        "]: must be non-negative");
    }
  }
}

ArmPoses arm_chain_poses(const ArmModel &model, const Vec6 &q_m) {
  ArmPoses out;
  Pose acc = model.mount;
  for (int i = 0; i < ArmModel::kJoints; ++i) {
    const ArmJoint &j = model.joints[i];
    const Mat3 Rj = Eigen::AngleAxisd(q_m[i], j.axis).toRotationMatrix();
    acc = acc * j.transform * Pose{Rj, Vec3::Zero()};
    out.link_in_f[i] = acc;
  }
  out.ee_in_f = acc * model.ee_offset;
  return out;
}

Pose arm_forward_kinematics(const ArmModel &model, const Vec6 &q_m) {
  return arm_chain_poses(model, q_m).ee_in_f;
}

Mat6 arm_body_jacobian(const ArmModel &model, const Vec6 &q_m) {
  const ArmPoses poses = arm_chain_poses(model, q_m);
  Mat6 J;
  for (int i = 0; i < ArmModel::kJoints; ++i) {
    // Screw of joint i in its own frame is (0; axis); re-express in {e}.
    const Pose X_e_i = poses.ee_in_f.inverse() * poses.link_in_f[i];
    Vec6 screw;
    screw << Vec3::Zero(), model.joints[i].axis;
    J.col(i) = adjoint(X_e_i) * screw;
  }
  return J;
}

Mat6 fuselage_to_ee_adjoint(const Pose &pose_fe) {
  return adjoint(pose_fe.inverse());
}

JacobianSet compute_jacobians(const ArmModel &model, const Vec6 &q_m) {
  JacobianSet out;
  const Pose pose_fe = arm_forward_kinematics(model, q_m);
  out.J_eq = arm_body_jacobian(model, q_m);
  out.J_ef = fuselage_to_ee_adjoint(pose_fe);
  out.x_e = pose_to_ee_coord(pose_fe);

  const RpyAngles phi_e = RpyAngles::from(out.x_e.tail<3>());
  out.T = Mat6::Zero();
  out.T.topLeftCorner<3, 3>() = pose_fe.R;
  out.T.bottomRightCorner<3, 3>() = euler_rate_map_inv(phi_e);

  const Eigen::JacobiSVD<Mat6> svd(out.J_eq);
  const double smin = svd.singularValues().minCoeff();
  out.cond_J_eq = smin > 0.0 ? svd.singularValues().maxCoeff() / smin
                             : std::numeric_limits<double>::infinity();
  return out;
}

Vec6 xdot_from_xi(const JacobianSet &J, const Vec12 &xi_e) {
  const Vec6 V_f = xi_e.head<6>();
  const Vec6 V_e = xi_e.tail<6>();
  return J.T * (V_e - J.J_ef * V_f);
}

namespace {

// Thin-rod inertia from joint toward the next joint, with a small isotropic
// floor so short links stay positive definite.
Mat3 rod_inertia(double mass, const Vec3 &extent) {
  const double L2 = extent.squaredNorm();
  Mat3 I = 0.002 * mass * Mat3::Identity();
  if (L2 > 0.0) {
    const Vec3 d = extent.normalized();
    I += (mass * L2 / 12.0) * (Mat3::Identity() - d * d.transpose());
  }
  return I;
}

} // namespace

ArmModel default_arm() {
  // 6R chain hanging below the fuselage, elbow folded forward so the home
  // configuration q = 0 ends at x_e = [0.3, 0, -0.75, 0, 0, 0] while keeping
  // roughly a metre of stretched reach from the shoulder.
  const std::array<Vec3, 6> offsets = {
      Vec3(0.0, 0.0, -0.04),  // base -> shoulder yaw
      Vec3(0.0, 0.0, -0.04),  // shoulder pitch
      Vec3(0.45, 0.0, -0.20), // elbow pitch (end of upper arm)
      Vec3(-0.45, 0.0, -0.25),// forearm roll
      Vec3(0.25, 0.0, -0.08), // wrist pitch
      Vec3(0.0, 0.0, -0.02),  // wrist roll
  };
  const std::array<Vec3, 6> axes = {
      Vec3::UnitZ(), Vec3::UnitY(), Vec3::UnitY(),
      Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitX(),
  };
  const std::array<double, 6> masses = {3.0, 3.0, 2.5, 2.5, 1.7, 1.3};
  const Vec3 ee_off(0.0, 0.0, -0.04);

  ArmModel arm;
  arm.mount = Pose{Mat3::Identity(), Vec3(0.05, 0.0, -0.08)};
  for (int i = 0; i < ArmModel::kJoints; ++i) {
    ArmJoint j;
    j.transform = Pose{Mat3::Identity(), offsets[i]};
    j.axis = axes[i];
    j.mass = masses[i];
    const Vec3 extent = (i + 1 < ArmModel::kJoints) ? offsets[i + 1] : ee_off;
    j.com = 0.5 * extent;
    j.inertia = rod_inertia(masses[i], extent);
    arm.joints[i] = j;
  }
  arm.ee_offset = Pose{Mat3::Identity(), ee_off};
  return arm;
}

} // namespace uavm
