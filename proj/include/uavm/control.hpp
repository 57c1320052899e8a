#pragma once

#include <string>

#include "uavm/dynamics.hpp"

namespace uavm {

struct ControlGains {
  // UAV thrust / torque loops
  double D_z{120.0};
  Mat3 D_w{30.0 * Mat3::Identity()};
  Mat3 D{8.0 * Mat3::Identity()};
  Mat3 D_phi{1.0 * Mat3::Identity()};
  Mat3 D_r_p{0.8 * Mat3::Identity()};
  Mat3 D_r_i{0.1 * Mat3::Identity()};
  double integral_clamp{10.0}; // per-axis bound on the position-error integral

  // end-effector compliance
  Mat6 K_p{100.0 * Mat6::Identity()};
  Mat6 K_d{10.0 * Mat6::Identity()};

  // passivity controller
  double E_z0{1.0};
  double E_w0{1.0};
  double pc_force_cap{2000.0};  // N, limit on the extra damping force
  double pc_torque_cap{200.0};  // N*m

  void validate() const;
  /// Non-fatal gain-selection note (empty when the defaults' rationale holds):
  /// the rotational loops must stay faster than the translational ones.
  std::string advisory() const;
};

struct Setpoints {
  Vec3 r_des{Vec3::Zero()};
  double yaw_des{0.0}; // desired roll/pitch are structurally zero
  Vec6 x_e_des{(Vec6() << 0.3, 0.0, -0.75, 0.0, 0.0, 0.0).finished()};
};

struct ControllerState {
  Vec3 w_ref{Vec3::Zero()};
  Vec3 r_err_int{Vec3::Zero()};
  bool initialized{false}; // w_ref is seeded with w_f on the first tick
};

struct PassivityLedger {
  double E_obs_z{0.0};
  double E_obs_w{0.0};
  double D_pc_z{0.0};
  double D_pc_w{0.0};   // isotropic, applied as D_pc_w * I
  double E_port_m{0.0}; // energy through the compliance I/O pair (-xi_e, eta_m)
};

struct VelocityErrors {
  Vec3 vtilde;
  Vec3 wtilde;
};

/// Blended velocity errors: vtilde folds the position error (P + clamped I)
/// into v_f, wtilde folds the attitude error into w_f.
VelocityErrors velocity_errors(const SystemState &state, const Setpoints &sp,
                               const ControlGains &gains, const Vec3 &r_err_int);

/// d/dt w_f^ref: steers the attitude so that both wtilde and (through M_tr)
/// vtilde decay; the trailing term feeds the attitude-error derivative forward.
Vec3 reference_angular_acceleration(const SystemState &state, const ControlGains &gains,
                                    const VelocityErrors &err, const Mat3 &M_tr);

double uav_thrust(const ControlGains &gains, double vtilde_z, double v_f_z,
                  double D_pc_z, double g_t_z);

Vec3 uav_torque(const ControlGains &gains, const Vec3 &w_f, const Vec3 &w_ref,
                double D_pc_w, const Vec3 &g_r);

/// Accumulates the observer integrals with a left-rectangle rule over the
/// sample the command is held for. Observes the full command, including any
/// active passivation term.
void passivity_observe(PassivityLedger &ledger, double f_th, const Vec3 &tau_uav,
                       double v_f_z, const Vec3 &w_f, double dT);

/// Computes the variable damping for one channel. Zero while the observer is
/// above -E0; otherwise sized to restore the deficit within one sample,
/// limited by effort_cap and a small velocity floor.
double passivity_damping(double E_obs, double E0, double speed_sq, double dT,
                         double effort_cap);

/// Updates both D_pc entries from the current observer state.
void passivity_control(PassivityLedger &ledger, const ControlGains &gains,
                       double v_f_z, const Vec3 &w_f, double dT, bool enabled);

/// tau_m = J_eq^T T^T (K_p (x_des - x_e) - K_d xdot_e) + g_m.
Vec6 compliance_torque(const JacobianSet &J, const Vec6 &x_e_des,
                       const ControlGains &gains, const Vec6 &xdot_e, const Vec6 &g_m);

/// Adds one sample of -xdot_e . (K_p e - K_d xdot_e) to the port ledger.
void compliance_port_update(PassivityLedger &ledger, const Vec6 &xdot_e,
                            const Vec6 &impedance_wrench, double dT);

struct TickInfo {
  Vec3 vtilde{Vec3::Zero()};
  Vec3 wtilde{Vec3::Zero()};
  Vec3 w_ref{Vec3::Zero()};
  Vec6 x_e{Vec6::Zero()};
  Vec6 xdot_e{Vec6::Zero()};
  Vec6 impedance_wrench{Vec6::Zero()};
  double D_pc_z{0.0};
  double D_pc_w{0.0};
};

/// One fixed-rate control step: errors, UAV wrench with optional passivation,
/// compliance torque, observer/port bookkeeping, then the internal
/// integrations (w_ref, position-error integral).
ControlCommand controller_tick(const SystemModel &model, const SystemState &state,
                               const Setpoints &sp, const ControlGains &gains,
                               double dT, bool pc_enabled, ControllerState &cs,
                               PassivityLedger &ledger, TickInfo *info = nullptr);

} // namespace uavm
