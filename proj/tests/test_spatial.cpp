#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <random>

#include <Eigen/Geometry>

#include "uavm/errors.hpp"
#include "uavm/spatial.hpp"

using namespace uavm;

namespace {

std::mt19937 rng(20240817u);

double urand(double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng);
}

Vec3 rvec3(double s) { return Vec3(urand(-s, s), urand(-s, s), urand(-s, s)); }

Vec6 rvec6(double s) {
  Vec6 v;
  v << rvec3(s), rvec3(s);
  return v;
}

RpyAngles random_rpy(double pitch_max = 1.2) {
  RpyAngles a;
  a.roll = urand(-2.5, 2.5);
  a.pitch = urand(-pitch_max, pitch_max);
  a.yaw = urand(-3.0, 3.0);
  return a;
}

Pose random_pose() {
  const Vec3 ax = rvec3(1.0).normalized();
  Pose X;
  X.R = Eigen::AngleAxisd(urand(-2.8, 2.8), ax).toRotationMatrix();
  X.p = rvec3(1.5);
  return X;
}

// Closed-form SE(3) exponential so frame trajectories with a constant body
// twist can be generated without touching the code under test.
Pose exp_se3(const Vec6 &V, double t) {
  const Vec3 v = V.head<3>(), w = V.tail<3>();
  const double wn = w.norm();
  Pose X;
  if (wn * std::abs(t) < 1e-10) {
    X.R = Mat3::Identity() + skew(w) * t;
    X.p = v * t;
    return X;
  }
  const double th = wn * t;
  const Vec3 a = w / wn;
  X.R = Eigen::AngleAxisd(th, a).toRotationMatrix();
  const Mat3 W = skew(w);
  X.p = (Mat3::Identity() * t + W * (1.0 - std::cos(th)) / (wn * wn) +
         W * W * (t - std::sin(th) / wn) / (wn * wn)) *
        v;
  return X;
}

Vec3 unskew(const Mat3 &S) {
  return Vec3(S(2, 1) - S(1, 2), S(0, 2) - S(2, 0), S(1, 0) - S(0, 1)) * 0.5;
}

// Body twist of a pose trajectory by central difference.
Vec6 fd_body_twist(const std::function<Pose(double)> &traj, double h) {
  const Pose Xp = traj(h), Xm = traj(-h), X0 = traj(0.0);
  const Mat3 Rdot = (Xp.R - Xm.R) / (2.0 * h);
  const Vec3 pdot = (Xp.p - Xm.p) / (2.0 * h);
  Vec6 V;
  V.head<3>() = X0.R.transpose() * pdot;
  V.tail<3>() = unskew(X0.R.transpose() * Rdot);
  return V;
}

} // namespace

TEST_CASE("skew matches the cross product") {
  for (int k = 0; k < 20; ++k) {
    const Vec3 a = rvec3(2.0), b = rvec3(2.0);
    CHECK((skew(a) * b - a.cross(b)).norm() < 1e-14);
  }
}

TEST_CASE("rpy rotation composes z-y-x elementary rotations") {
  for (int k = 0; k < 50; ++k) {
    const RpyAngles a = random_rpy();
    const Mat3 ref = (Eigen::AngleAxisd(a.yaw, Vec3::UnitZ()) *
                      Eigen::AngleAxisd(a.pitch, Vec3::UnitY()) *
                      Eigen::AngleAxisd(a.roll, Vec3::UnitX()))
                         .toRotationMatrix();
    CHECK((rpy_to_rotation(a) - ref).norm() < 1e-13);
  }
}

TEST_CASE("rpy round trip") {
  for (int k = 0; k < 50; ++k) {
    RpyAngles a = random_rpy(1.4);
    a.roll = urand(-3.0, 3.0);
    const RpyAngles b = rotation_to_rpy(rpy_to_rotation(a));
    CHECK((a.vec() - b.vec()).norm() < 1e-9);
  }
}

TEST_CASE("rpy extraction throws inside the pitch guard band") {
  RpyAngles a;
  a.pitch = M_PI / 2.0 - 1e-8;
  const Mat3 R = rpy_to_rotation(a);
  CHECK_THROWS_AS((void)rotation_to_rpy(R), GimbalLockError);
  a.pitch = 1.4;
  CHECK_NOTHROW((void)rotation_to_rpy(rpy_to_rotation(a)));
}

TEST_CASE("euler rate map matches finite-differenced rotation") {
  for (int k = 0; k < 30; ++k) {
    const RpyAngles a = random_rpy();
    const Vec3 adot = rvec3(1.0);
    const double h = 1e-7;
    const auto traj = [&](double t) {
      Pose X;
      X.R = rpy_to_rotation(RpyAngles::from(a.vec() + t * adot));
      X.p = Vec3::Zero();
      return X;
    };
    const Vec3 w_fd = fd_body_twist(traj, h).tail<3>();
    CHECK((euler_rate_map(a) * adot - w_fd).norm() < 1e-6);
  }
}

TEST_CASE("euler rate map inverse and determinant") {
  for (int k = 0; k < 30; ++k) {
    const RpyAngles a = random_rpy();
    const Mat3 Q = euler_rate_map(a);
    CHECK((Q * euler_rate_map_inv(a) - Mat3::Identity()).norm() < 1e-12);
    CHECK(Q.determinant() == doctest::Approx(std::cos(a.pitch)).epsilon(1e-12));
  }
  RpyAngles bad;
  bad.pitch = M_PI / 2.0 - 1e-8;
  CHECK_THROWS_AS((void)euler_rate_map_inv(bad), GimbalLockError);
}

TEST_CASE("euler rate map derivative matches finite difference") {
  for (int k = 0; k < 20; ++k) {
    const RpyAngles a = random_rpy();
    const Vec3 adot = rvec3(1.0);
    const double h = 1e-6;
    const Mat3 Qp = euler_rate_map(RpyAngles::from(a.vec() + h * adot));
    const Mat3 Qm = euler_rate_map(RpyAngles::from(a.vec() - h * adot));
    const Mat3 Qdot_fd = (Qp - Qm) / (2.0 * h);
    CHECK((euler_rate_map_dot(a, adot) - Qdot_fd).norm() < 1e-6);
  }
}

TEST_CASE("pose algebra round trips") {
  for (int k = 0; k < 20; ++k) {
    const Pose X1 = random_pose(), X2 = random_pose();
    const Pose I1 = X1 * X1.inverse();
    CHECK((I1.R - Mat3::Identity()).norm() < 1e-12);
    CHECK(I1.p.norm() < 1e-12);
    const Pose L = (X1 * X2).inverse();
    const Pose R = X2.inverse() * X1.inverse();
    CHECK((L.R - R.R).norm() < 1e-12);
    CHECK((L.p - R.p).norm() < 1e-12);
  }
}

TEST_CASE("adjoint transforms body twists between rigidly attached frames") {
  for (int k = 0; k < 20; ++k) {
    const Pose X_gb0 = random_pose();
    const Pose X_ab = random_pose(); // frame b expressed in frame a
    const Vec6 V_b = rvec6(1.0);
    const auto traj_a = [&](double t) {
      return X_gb0 * exp_se3(V_b, t) * X_ab.inverse();
    };
    const Vec6 V_a_fd = fd_body_twist(traj_a, 1e-6);
    CHECK((adjoint(X_ab) * V_b - V_a_fd).norm() < 1e-8);
  }
}

TEST_CASE("adjoint is a homomorphism") {
  for (int k = 0; k < 20; ++k) {
    const Pose X1 = random_pose(), X2 = random_pose();
    CHECK((adjoint(X1 * X2) - adjoint(X1) * adjoint(X2)).norm() < 1e-12);
    CHECK((adjoint(X1.inverse()) - adjoint(X1).inverse()).norm() < 1e-11);
  }
}

TEST_CASE("default arm home pose") {
  const ArmModel arm = default_arm();
  arm.validate();
  const Pose ee = arm_forward_kinematics(arm, Vec6::Zero());
  CHECK((ee.p - Vec3(0.3, 0.0, -0.75)).norm() < 1e-12);
  CHECK((ee.R - Mat3::Identity()).norm() < 1e-12);
  const Vec6 x_home = pose_to_ee_coord(ee);
  Vec6 expect;
  expect << 0.3, 0.0, -0.75, 0.0, 0.0, 0.0;
  CHECK((x_home - expect).norm() < 1e-12);
  const JacobianSet J = compute_jacobians(arm, Vec6::Zero());
  CHECK(J.cond_J_eq < 100.0);
  double mass = 0.0;
  for (const auto &j : arm.joints)
    mass += j.mass;
  CHECK(mass == doctest::Approx(14.0));
}

TEST_CASE("forward kinematics matches an independently composed chain") {
  const ArmModel arm = default_arm();
  for (int k = 0; k < 30; ++k) {
    Vec6 q = rvec6(1.2);
    Eigen::Isometry3d X = Eigen::Isometry3d::Identity();
    X.linear() = arm.mount.R;
    X.translation() = arm.mount.p;
    for (int i = 0; i < ArmModel::kJoints; ++i) {
      Eigen::Isometry3d step = Eigen::Isometry3d::Identity();
      step.linear() = arm.joints[i].transform.R;
      step.translation() = arm.joints[i].transform.p;
      X = X * step * Eigen::AngleAxisd(q[i], arm.joints[i].axis);
    }
    Eigen::Isometry3d tip = Eigen::Isometry3d::Identity();
    tip.linear() = arm.ee_offset.R;
    tip.translation() = arm.ee_offset.p;
    X = X * tip;

    const Pose ee = arm_forward_kinematics(arm, q);
    CHECK((ee.R - X.linear()).norm() < 1e-12);
    CHECK((ee.p - X.translation()).norm() < 1e-12);
  }
}

TEST_CASE("arm body jacobian matches finite-differenced kinematics") {
  const ArmModel arm = default_arm();
  for (int k = 0; k < 20; ++k) {
    const Vec6 q = rvec6(1.0);
    const Mat6 J = arm_body_jacobian(arm, q);
    for (int j = 0; j < 6; ++j) {
      const auto traj = [&](double t) {
        Vec6 qt = q;
        qt[j] += t;
        return arm_forward_kinematics(arm, qt);
      };
      const Vec6 col_fd = fd_body_twist(traj, 1e-6);
      CHECK((J.col(j) - col_fd).norm() < 1e-5);
    }
  }
}

TEST_CASE("jacobian set blocks are consistent") {
  const ArmModel arm = default_arm();
  for (int k = 0; k < 20; ++k) {
    Vec6 q = rvec6(0.9);
    JacobianSet J;
    try {
      J = compute_jacobians(arm, q);
    } catch (const GimbalLockError &) {
      continue; // extreme wrist sample; pose coordinate undefined there
    }
    CHECK((J.J_eq - arm_body_jacobian(arm, q)).norm() < 1e-12);
    const Pose ee = arm_forward_kinematics(arm, q);
    CHECK((J.J_ef - adjoint(ee.inverse())).norm() < 1e-12);
    CHECK((J.J_ef - fuselage_to_ee_adjoint(ee)).norm() < 1e-12);
    CHECK((J.x_e - pose_to_ee_coord(ee)).norm() < 1e-12);
    CHECK((J.T.topLeftCorner<3, 3>() - ee.R).norm() < 1e-12);
  }
}

TEST_CASE("ee coordinate rate matches finite difference for any fuselage motion") {
  const ArmModel arm = default_arm();
  int done = 0;
  while (done < 25) {
    const Vec6 q = rvec6(0.8);
    const Vec6 dq = rvec6(1.0);
    const Vec6 V_f = rvec6(1.0);
    JacobianSet J;
    try {
      J = compute_jacobians(arm, q);
    } catch (const GimbalLockError &) {
      continue;
    }
    Vec12 xi_e;
    xi_e.head<6>() = V_f;
    xi_e.tail<6>() = J.J_ef * V_f + J.J_eq * dq;
    const Vec6 xdot = xdot_from_xi(J, xi_e);

    const double h = 1e-6;
    const Vec6 xp = pose_to_ee_coord(arm_forward_kinematics(arm, q + h * dq));
    const Vec6 xm = pose_to_ee_coord(arm_forward_kinematics(arm, q - h * dq));
    const Vec6 xdot_fd = (xp - xm) / (2.0 * h);
    CHECK((xdot - xdot_fd).norm() < 1e-5);
    ++done;
  }
}

TEST_CASE("parallel-axis arm is flagged singular") {
  ArmModel arm = default_arm();
  for (int i = 0; i < ArmModel::kJoints; ++i) {
    arm.joints[i].axis = Vec3::UnitY();
    arm.joints[i].transform = Pose{Mat3::Identity(), Vec3(0.0, 0.0, -0.1)};
  }
  const JacobianSet J = compute_jacobians(arm, Vec6::Zero());
  CHECK(J.singular());
}

TEST_CASE("arm validation rejects malformed models") {
  ArmModel bad = default_arm();
  bad.joints[2].axis = Vec3::Zero();
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = default_arm();
  bad.joints[0].mass = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = default_arm();
  bad.joints[4].inertia(0, 1) = 0.5; // asymmetric
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
