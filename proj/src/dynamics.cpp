#include "uavm/dynamics.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "uavm/errors.hpp"

namespace uavm {
namespace {

// Spatial inertia about the body-frame origin, (v; w) ordering.
Mat6 spatial_inertia(double mass, const Vec3 &com, const Mat3 &inertia_com) {
  const Mat3 c_hat = skew(com);
  Mat6 I;
  I.topLeftCorner<3, 3>() = mass * Mat3::Identity();
  I.topRightCorner<3, 3>() = -mass * c_hat;
  I.bottomLeftCorner<3, 3>() = mass * c_hat;
  I.bottomRightCorner<3, 3>() = inertia_com - mass * c_hat * c_hat;
  return I;
}

Vec6 motion_cross(const Vec6 &V, const Vec6 &U) {
  const Vec3 v = V.head<3>(), w = V.tail<3>();
  Vec6 out;
  out.head<3>() = w.cross(U.head<3>()) + v.cross(U.tail<3>());
  out.tail<3>() = w.cross(U.tail<3>());
  return out;
}

Vec6 wrench_cross(const Vec6 &V, const Vec6 &F) {
  const Vec3 v = V.head<3>(), w = V.tail<3>();
  Vec6 out;
  out.head<3>() = w.cross(F.head<3>());
  out.tail<3>() = v.cross(F.head<3>()) + w.cross(F.tail<3>());
  return out;
}

struct DynCache {
  ArmPoses poses;
  std::array<Pose, ArmModel::kJoints> parent_in_link; // fixed+joint transform, child coords
  std::array<Mat6x12, ArmModel::kJoints> J_link;
  std::array<Mat6, ArmModel::kJoints> I_link;
  Mat6 I_fus;
  double m_total{0.0};
  Vec3 com{Vec3::Zero()};
};

DynCache build_cache(const SystemModel &model, const Vec6 &q_m) {
  DynCache c;
  c.poses = arm_chain_poses(model.arm, q_m);
  c.I_fus = spatial_inertia(model.vehicle_mass, Vec3::Zero(), model.vehicle_inertia);
  c.m_total = model.vehicle_mass;
  Vec3 moment = Vec3::Zero();
  for (int i = 0; i < ArmModel::kJoints; ++i) {
    const ArmJoint &joint = model.arm.joints[i];
    const Pose &P_i = c.poses.link_in_f[i];
    const Pose P_parent = (i == 0) ? Pose::identity() : c.poses.link_in_f[i - 1];
    c.parent_in_link[i] = P_i.inverse() * P_parent;
    c.I_link[i] = spatial_inertia(joint.mass, joint.com, joint.inertia);

    Mat6x12 &J = c.J_link[i];
    J.setZero();
    J.leftCols<6>() = adjoint(P_i.inverse());
    for (int j = 0; j <= i; ++j) {
      const Pose X_ij = P_i.inverse() * c.poses.link_in_f[j];
      const Vec3 axis = model.arm.joints[j].axis;
      J.col(6 + j).head<3>() = skew(X_ij.p) * (X_ij.R * axis);
      J.col(6 + j).tail<3>() = X_ij.R * axis;
    }

    c.m_total += joint.mass;
    moment += joint.mass * (P_i.p + P_i.R * joint.com);
  }
  c.com = moment / c.m_total;
  return c;
}

Mat12 mass_matrix_from(const DynCache &c, const Vec6 &rotor_inertia) {
  Mat12 M = Mat12::Zero();
  M.topLeftCorner<6, 6>() = c.I_fus; // fuselage Jacobian is [I 0]
  for (int i = 0; i < ArmModel::kJoints; ++i)
    M.noalias() += c.J_link[i].transpose() * c.I_link[i] * c.J_link[i];
  M.diagonal().tail<6>() += rotor_inertia; // reflected drivetrain inertia
  return 0.5 * (M + M.transpose());
}

Vec12 gravity_from(const SystemModel &model, const DynCache &c, const RpyAngles &phi_f) {
  const Mat3 R_fg = rpy_to_rotation(phi_f).transpose();
  const Vec3 g_global(0.0, 0.0, -model.gravity);
  Vec12 g_vec = Vec12::Zero();

  const Vec3 f_fus = model.vehicle_mass * (R_fg * g_global);
  g_vec.head<3>() -= f_fus; // fuselage CoM sits at the frame origin

  for (int i = 0; i < ArmModel::kJoints; ++i) {
    const Pose &P_i = c.poses.link_in_f[i];
    const Vec3 f_i = model.arm.joints[i].mass * (P_i.R.transpose() * (R_fg * g_global));
    Vec6 W;
    W.head<3>() = f_i;
    W.tail<3>() = model.arm.joints[i].com.cross(f_i);
    g_vec.noalias() -= c.J_link[i].transpose() * W;
  }
  return g_vec;
}

// Velocity-product forces via a zero-acceleration recursive sweep with gravity
// switched off.
Vec12 bias_from(const SystemModel &model, const DynCache &c, const SystemState &state) {
  std::array<Vec6, ArmModel::kJoints> V, A, F;
  const Vec6 V_f = state.V_f.vec();

  for (int i = 0; i < ArmModel::kJoints; ++i) {
    const Vec3 axis = model.arm.joints[i].axis;
    Vec6 S = Vec6::Zero();
    S.tail<3>() = axis;
    const Mat6 Ad = adjoint(c.parent_in_link[i]);
    const Vec6 V_parent = (i == 0) ? V_f : V[i - 1];
    const Vec6 A_parent = (i == 0) ? Vec6::Zero() : A[i - 1];
    V[i] = Ad * V_parent + S * state.dq_m[i];
    A[i] = Ad * A_parent + motion_cross(V[i], S * state.dq_m[i]);
    F[i] = c.I_link[i] * A[i] + wrench_cross(V[i], c.I_link[i] * V[i]);
  }

  Vec12 bias;
  Vec6 F_fus = wrench_cross(V_f, c.I_fus * V_f);
  for (int i = ArmModel::kJoints - 1; i >= 0; --i) {
    Vec6 S = Vec6::Zero();
    S.tail<3>() = model.arm.joints[i].axis;
    bias[6 + i] = S.dot(F[i]);
    const Vec6 F_to_parent = adjoint(c.parent_in_link[i]).transpose() * F[i];
    if (i == 0)
      F_fus += F_to_parent;
    else
      F[i - 1] += F_to_parent;
  }
  bias.head<6>() = F_fus;
  return bias;
}

} // namespace

double SystemModel::total_mass() const {
  double m = vehicle_mass;
  for (const auto &j : arm.joints)
    m += j.mass;
  return m;
}

void SystemModel::validate() const {
  if (!(vehicle_mass > 0.0))
    throw ConfigError("vehicle_mass must be positive");
  if (!(gravity >= 0.0))
    throw ConfigError("gravity must be non-negative");
  if (!vehicle_inertia.isApprox(vehicle_inertia.transpose(), 1e-9))
    throw ConfigError("vehicle_inertia must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat3> es(vehicle_inertia);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw ConfigError("vehicle_inertia must be positive definite");
  if (!fuselage_drag.isApprox(fuselage_drag.transpose(), 1e-9))
    throw ConfigError("fuselage_drag must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat6> ed(fuselage_drag);
  if (ed.eigenvalues().minCoeff() < -1e-12)
    throw ConfigError("fuselage_drag must be positive semidefinite");
  arm.validate();
}

Vec12 external_force_vector(const Vec6 &F_ext_e) {
  Vec12 eta = Vec12::Zero();
  eta.tail<6>() = F_ext_e;
  return eta;
}

Mat12 mass_matrix(const SystemModel &model, const SystemState &state) {
  return mass_matrix_from(build_cache(model, state.q_m), model.arm.rotor_inertia);
}

Vec12 bias_forces(const SystemModel &model, const SystemState &state) {
  return bias_from(model, build_cache(model, state.q_m), state);
}

Vec12 gravity_vector(const SystemModel &model, const SystemState &state) {
  return gravity_from(model, build_cache(model, state.q_m), state.phi_f);
}

DynamicsMatrices dynamics_matrices(const SystemModel &model, const SystemState &state) {
  const DynCache c = build_cache(model, state.q_m);
  DynamicsMatrices dm;
  dm.M = mass_matrix_from(c, model.arm.rotor_inertia);
  dm.bias = bias_from(model, c, state);
  dm.gravity = gravity_from(model, c, state.phi_f);
  return dm;
}

Vec3 com_in_f(const SystemModel &model, const Vec6 &q_m) {
  return build_cache(model, q_m).com;
}

Vec12 forward_dynamics(const SystemModel &model, const SystemState &state,
                       const Vec12 &tau_b, const Vec6 &F_ext_e) {
  const DynCache c = build_cache(model, state.q_m);
  Vec12 rhs = tau_b;
  rhs -= bias_from(model, c, state);
  rhs -= gravity_from(model, c, state.phi_f);
  if (!model.fuselage_drag.isZero())
    rhs.head<6>() -= model.fuselage_drag * state.V_f.vec();

  if (!F_ext_e.isZero()) {
    const JacobianSet J = compute_jacobians(model.arm, state.q_m);
    if (J.singular())
      throw SingularArmError("arm too close to singular to map external wrench");
    rhs.head<6>().noalias() += J.J_ef.transpose() * F_ext_e;
    rhs.tail<6>().noalias() += J.J_eq.transpose() * F_ext_e;
  }

  const Mat12 M = mass_matrix_from(c, model.arm.rotor_inertia);
  Eigen::LLT<Mat12> llt(M);
  if (llt.info() != Eigen::Success)
    throw NumericError("mass matrix factorization failed");
  return llt.solve(rhs);
}

EtaDecomposition eta_decomposition(const JacobianSet &J, double f_th,
                                   const Vec3 &tau_uav, const Vec6 &tau_m) {
  if (J.singular())
    throw SingularArmError("arm too close to singular to decompose actuation");
  EtaDecomposition out;
  out.th = Vec12::Zero();
  out.th[2] = f_th;
  out.uav = Vec12::Zero();
  out.uav.segment<3>(3) = tau_uav;
  out.m = Vec12::Zero();
  const Vec6 y = J.J_eq.transpose().partialPivLu().solve(tau_m);
  out.m.head<6>() = -J.J_ef.transpose() * y;
  out.m.tail<6>() = y;
  return out;
}

Mat12 assemble_J_e(const JacobianSet &J) {
  Mat12 Je = Mat12::Identity();
  Je.bottomLeftCorner<6, 6>() = J.J_ef;
  Je.bottomRightCorner<6, 6>() = J.J_eq;
  return Je;
}

namespace {

struct RawDeriv {
  Vec3 dr;
  Vec3 dphi;
  Vec6 dq;
  Vec12 dxi;
};

RawDeriv raw_derivative(const SystemModel &model, const SystemState &s,
                        const Vec12 &tau_b, const Vec6 &F_ext_e) {
  RawDeriv d;
  d.dr = rpy_to_rotation(s.phi_f) * s.V_f.v;
  d.dphi = euler_rate_map_inv(s.phi_f) * s.V_f.w;
  d.dq = s.dq_m;
  d.dxi = forward_dynamics(model, s, tau_b, F_ext_e);
  return d;
}

SystemState advance(const SystemState &s, const RawDeriv &d, double h) {
  SystemState out = s;
  out.r_f += h * d.dr;
  out.phi_f = RpyAngles::from(s.phi_f.vec() + h * d.dphi);
  out.q_m += h * d.dq;
  Vec12 xi = s.xi_q() + h * d.dxi;
  out.V_f = BodyTwist::from(xi.head<6>());
  out.dq_m = xi.tail<6>();
  return out;
}

SystemState rk4_step(const SystemModel &model, const SystemState &s,
                     const Vec12 &tau_b, const Vec6 &F_ext_e, double h) {
  const RawDeriv k1 = raw_derivative(model, s, tau_b, F_ext_e);
  const RawDeriv k2 = raw_derivative(model, advance(s, k1, 0.5 * h), tau_b, F_ext_e);
  const RawDeriv k3 = raw_derivative(model, advance(s, k2, 0.5 * h), tau_b, F_ext_e);
  const RawDeriv k4 = raw_derivative(model, advance(s, k3, h), tau_b, F_ext_e);
  RawDeriv sum;
  sum.dr = (k1.dr + 2.0 * k2.dr + 2.0 * k3.dr + k4.dr) / 6.0;
  sum.dphi = (k1.dphi + 2.0 * k2.dphi + 2.0 * k3.dphi + k4.dphi) / 6.0;
  sum.dq = (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq) / 6.0;
  sum.dxi = (k1.dxi + 2.0 * k2.dxi + 2.0 * k3.dxi + k4.dxi) / 6.0;
  return advance(s, sum, h);
}

} // namespace

double transformed_dynamics_check(const SystemModel &model, const SystemState &state) {
  const JacobianSet J = compute_jacobians(model.arm, state.q_m);
  if (J.singular())
    throw SingularArmError("arm too close to singular for coordinate transform");
  const Mat12 Je = assemble_J_e(J);
  const DynamicsMatrices dm = dynamics_matrices(model, state);

  const Mat12 Je_inv = Je.partialPivLu().inverse();
  Mat12 Lambda = Je_inv.transpose() * dm.M * Je_inv;
  Lambda = 0.5 * (Lambda + Lambda.transpose());
  Eigen::LLT<Mat12> llt(Lambda);
  if (llt.info() != Eigen::Success)
    return std::numeric_limits<double>::infinity();

  const Vec12 xi_q = state.xi_q();
  const Vec12 xi_e = Je * xi_q;
  const double ke_q = 0.5 * xi_q.dot(dm.M * xi_q);
  const double ke_e = 0.5 * xi_e.dot(Lambda * xi_e);
  const double res_ke = std::abs(ke_e - ke_q) / std::max(1.0, std::abs(ke_q));

  // Power balance over a two-sided micro-rollout under a fixed generic input.
  Vec12 tau_b;
  tau_b << 0.0, 0.0, 430.0, 2.1, -1.3, 0.8, 3.0, -2.0, 1.5, -0.7, 0.4, -0.2;
  Vec6 F_ext;
  F_ext << 11.0, -6.0, 9.0, 0.8, -0.5, 0.3;

  const double h = 1e-5;
  SystemState fwd = rk4_step(model, state, tau_b, F_ext, h);
  SystemState bwd = rk4_step(model, state, tau_b, F_ext, -h);
  const auto kinetic = [&](const SystemState &s) {
    const Vec12 xi = s.xi_q();
    return 0.5 * xi.dot(mass_matrix(model, s) * xi);
  };
  Vec12 tau_total = tau_b;
  tau_total.head<6>() += J.J_ef.transpose() * F_ext - model.fuselage_drag * state.V_f.vec();
  tau_total.tail<6>() += J.J_eq.transpose() * F_ext;
  const double power = xi_q.dot(tau_total - dm.gravity);
  const double dke = (kinetic(fwd) - kinetic(bwd)) / (2.0 * h);
  const double res_power = std::abs(dke - power) / std::max(1.0, std::abs(power));

  return std::max(res_ke, res_power);
}

} // namespace uavm
