#pragma once

#include <array>

#include "uavm/spatial.hpp"

namespace uavm {

struct SystemModel {
  double vehicle_mass{37.6};
  Mat3 vehicle_inertia{(Vec3() << 1.46, 0.36, 1.46).finished().asDiagonal()};
  ArmModel arm{default_arm()};
  double gravity{9.81};
  Mat6 fuselage_drag{Mat6::Zero()}; // optional PSD damping on V_f

  double total_mass() const;
  void validate() const;
};

/// Full state: fuselage pose in {g}, joint positions, body-frame velocities.
struct SystemState {
  Vec3 r_f{Vec3::Zero()};
  RpyAngles phi_f;
  Vec6 q_m{Vec6::Zero()};
  BodyTwist V_f;
  Vec6 dq_m{Vec6::Zero()};

  Vec12 xi_q() const {
    Vec12 xi;
    xi << V_f.vec(), dq_m;
    return xi;
  }
};

/// Body command tau_b = [0, 0, f_th, tau_uav, tau_m]; the leading zeros encode
/// the missing body x/y force actuation.
struct ControlCommand {
  double f_th{0.0};
  Vec3 tau_uav{Vec3::Zero()};
  Vec6 tau_m{Vec6::Zero()};

  Vec12 tau_b() const {
    Vec12 tau = Vec12::Zero();
    tau[2] = f_th;
    tau.segment<3>(3) = tau_uav;
    tau.tail<6>() = tau_m;
    return tau;
  }
};

/// eta_ext = [0_6; F_ext] with F_ext the end-effector wrench in {e}.
Vec12 external_force_vector(const Vec6 &F_ext_e);

struct DynamicsMatrices {
  Mat12 M;
  Vec12 bias;     // C(q, xi) xi
  Vec12 gravity;

  Mat3 M_tt() const { return M.topLeftCorner<3, 3>(); }
  Mat3 M_tr() const { return M.block<3, 3>(0, 3); }
  Eigen::Matrix<double, 3, 6> M_tm() const { return M.block<3, 6>(0, 6); }
  Vec3 g_t() const { return gravity.head<3>(); }
  Vec3 g_r() const { return gravity.segment<3>(3); }
  Vec6 g_m() const { return gravity.tail<6>(); }
};

Mat12 mass_matrix(const SystemModel &model, const SystemState &state);
Vec12 bias_forces(const SystemModel &model, const SystemState &state);
Vec12 gravity_vector(const SystemModel &model, const SystemState &state);
DynamicsMatrices dynamics_matrices(const SystemModel &model, const SystemState &state);

/// Center of mass of the whole UAV-M in {f}; the controller coupling block is
/// M_tr = -m_total * skew(com).
Vec3 com_in_f(const SystemModel &model, const Vec6 &q_m);

/// Solves M d(xi_q)/dt + bias + gravity = tau_b + J_e^T eta_ext - drag.
/// Throws SingularArmError when the external wrench must be mapped through a
/// singular arm configuration.
Vec12 forward_dynamics(const SystemModel &model, const SystemState &state,
                       const Vec12 &tau_b, const Vec6 &F_ext_e);

struct EtaDecomposition {
  Vec12 th;
  Vec12 uav;
  Vec12 m;
};

/// Splits J_e^-T tau_b into the thrust, UAV-torque and manipulator channels.
EtaDecomposition eta_decomposition(const JacobianSet &J, double f_th,
                                   const Vec3 &tau_uav, const Vec6 &tau_m);

/// Checks the xi_e-coordinate image of the dynamics at one state: the
/// transformed inertia must be SPD, kinetic energy must agree between
/// coordinates, and a short two-sided rollout must respect the power balance.
/// Returns the largest residual observed.
double transformed_dynamics_check(const SystemModel &model, const SystemState &state);

/// Assembled 12x12 J_e = [[I, 0], [J_ef, J_eq]].
Mat12 assemble_J_e(const JacobianSet &J);

} // namespace uavm
