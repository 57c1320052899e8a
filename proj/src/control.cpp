#include "uavm/control.hpp"

#include <algorithm>
#include <cmath>

#include "uavm/errors.hpp"

namespace uavm {
namespace {

void require_positive_diagonal(const Mat3 &G, const char *name) {
  for (int i = 0; i < 3; ++i)
    if (!(G(i, i) > 0.0))
      throw ConfigError(std::string(name) + ": diagonal must be positive");
  if ((G - Mat3(G.diagonal().asDiagonal())).norm() > 1e-12)
    throw ConfigError(std::string(name) + ": must be diagonal");
}

constexpr double kPcSpeedFloor = 1e-3; // m/s or rad/s below which the cap path rules

} // namespace

void ControlGains::validate() const {
  if (!(D_z > 0.0))
    throw ConfigError("gains.D_z: must be positive");
  require_positive_diagonal(D_w, "gains.D_w");
  require_positive_diagonal(D, "gains.D");
  require_positive_diagonal(D_phi, "gains.D_phi");
  require_positive_diagonal(D_r_p, "gains.D_r_p");
  require_positive_diagonal(D_r_i, "gains.D_r_i");
  if (!(integral_clamp > 0.0))
    throw ConfigError("gains.integral_clamp: must be positive");
  for (int i = 0; i < 6; ++i) {
    if (!(K_p(i, i) > 0.0) || !(K_d(i, i) > 0.0))
      throw ConfigError("gains.K_p/K_d: diagonal must be positive");
  }
  if ((K_p - Mat6(K_p.diagonal().asDiagonal())).norm() > 1e-12 ||
      (K_d - Mat6(K_d.diagonal().asDiagonal())).norm() > 1e-12)
    throw ConfigError("gains.K_p/K_d: must be diagonal");
  if (!(E_z0 > 0.0) || !(E_w0 > 0.0))
    throw ConfigError("gains.E_z0/E_w0: must be positive");
  if (!(pc_force_cap > 0.0) || !(pc_torque_cap > 0.0))
    throw ConfigError("gains.pc caps: must be positive");
}

std::string ControlGains::advisory() const {
  const double rot = std::min(D_w.diagonal().minCoeff(), D_phi.diagonal().minCoeff());
  const double trans = std::max(D_r_p.diagonal().maxCoeff(), D_r_i.diagonal().maxCoeff());
  if (rot <= trans)
    return "rotational gains (D_w, D_phi) should exceed translational ones "
           "(D_r_p, D_r_i); expect sluggish or oscillatory x-y response";
  return {};
}

VelocityErrors velocity_errors(const SystemState &state, const Setpoints &sp,
                               const ControlGains &gains, const Vec3 &r_err_int) {
  const Mat3 R_fg = rpy_to_rotation(state.phi_f).transpose();
  const Vec3 dr = state.r_f - sp.r_des;
  const Vec3 dphi = state.phi_f.vec() - Vec3(0.0, 0.0, sp.yaw_des);

  VelocityErrors err;
  err.vtilde = state.V_f.v + R_fg * (gains.D_r_p * dr) + R_fg * (gains.D_r_i * r_err_int);
  err.wtilde = state.V_f.w + euler_rate_map(state.phi_f) * (gains.D_phi * dphi);
  return err;
}

Vec3 reference_angular_acceleration(const SystemState &state, const ControlGains &gains,
                                    const VelocityErrors &err, const Mat3 &M_tr) {
  const Vec3 phi = state.phi_f.vec();
  const Vec3 phidot = euler_rate_map_inv(state.phi_f) * state.V_f.w;
  const Mat3 Q = euler_rate_map(state.phi_f);
  const Mat3 Qdot = euler_rate_map_dot(state.phi_f, phidot);

  const Vec3 feedforward = Qdot * (gains.D_phi * phi) + Q * (gains.D_phi * phidot);
  return -gains.D * (gains.D_w * err.wtilde - M_tr.transpose() * err.vtilde) + feedforward;
}

double uav_thrust(const ControlGains &gains, double vtilde_z, double v_f_z,
                  double D_pc_z, double g_t_z) {
  return -gains.D_z * vtilde_z - D_pc_z * v_f_z + g_t_z;
}

Vec3 uav_torque(const ControlGains &gains, const Vec3 &w_f, const Vec3 &w_ref,
                double D_pc_w, const Vec3 &g_r) {
  return -gains.D_w * (w_f - w_ref) - D_pc_w * w_f + g_r;
}

void passivity_observe(PassivityLedger &ledger, double f_th, const Vec3 &tau_uav,
                       double v_f_z, const Vec3 &w_f, double dT) {
  ledger.E_obs_z += dT * (-f_th * v_f_z);
  ledger.E_obs_w += dT * (-tau_uav.dot(w_f));
}

double passivity_damping(double E_obs, double E0, double speed_sq, double dT,
                         double effort_cap) {
  if (E_obs >= -E0)
    return 0.0;
  const double floor_sq = kPcSpeedFloor * kPcSpeedFloor;
  const double guarded_sq = std::max(speed_sq, floor_sq);
  const double damping = -(E_obs + E0) / (dT * guarded_sq);
  const double cap = effort_cap / std::sqrt(guarded_sq);
  return std::min(damping, cap);
}

void passivity_control(PassivityLedger &ledger, const ControlGains &gains,
                       double v_f_z, const Vec3 &w_f, double dT, bool enabled) {
  if (!enabled) {
    ledger.D_pc_z = 0.0;
    ledger.D_pc_w = 0.0;
    return;
  }
  ledger.D_pc_z =
      passivity_damping(ledger.E_obs_z, gains.E_z0, v_f_z * v_f_z, dT, gains.pc_force_cap);
  ledger.D_pc_w = passivity_damping(ledger.E_obs_w, gains.E_w0, w_f.squaredNorm(), dT,
                                    gains.pc_torque_cap);
}

Vec6 compliance_torque(const JacobianSet &J, const Vec6 &x_e_des,
                       const ControlGains &gains, const Vec6 &xdot_e, const Vec6 &g_m) {
  const Vec6 e = x_e_des - J.x_e;
  const Vec6 wrench = gains.K_p * e - gains.K_d * xdot_e;
  return J.J_eq.transpose() * (J.T.transpose() * wrench) + g_m;
}

void compliance_port_update(PassivityLedger &ledger, const Vec6 &xdot_e,
                            const Vec6 &impedance_wrench, double dT) {
  ledger.E_port_m += dT * (-xdot_e.dot(impedance_wrench));
}

ControlCommand controller_tick(const SystemModel &model, const SystemState &state,
                               const Setpoints &sp, const ControlGains &gains,
                               double dT, bool pc_enabled, ControllerState &cs,
                               PassivityLedger &ledger, TickInfo *info) {
  if (!cs.initialized) {
    cs.w_ref = state.V_f.w;
    cs.initialized = true;
  }

  const Vec12 g_vec = gravity_vector(model, state);
  const Mat3 M_tr = -model.total_mass() * skew(com_in_f(model, state.q_m));
  const JacobianSet J = compute_jacobians(model.arm, state.q_m);
  if (J.singular())
    throw SingularArmError("controller: arm too close to singular");

  const VelocityErrors err = velocity_errors(state, sp, gains, cs.r_err_int);
  const Vec3 wdot_ref = reference_angular_acceleration(state, gains, err, M_tr);

  passivity_control(ledger, gains, state.V_f.v.z(), state.V_f.w, dT, pc_enabled);

  ControlCommand cmd;
  cmd.f_th = uav_thrust(gains, err.vtilde.z(), state.V_f.v.z(), ledger.D_pc_z, g_vec[2]);
  cmd.tau_uav = uav_torque(gains, state.V_f.w, cs.w_ref, ledger.D_pc_w, g_vec.segment<3>(3));

  Vec12 xi_e;
  xi_e.head<6>() = state.V_f.vec();
  xi_e.tail<6>() = J.J_ef * state.V_f.vec() + J.J_eq * state.dq_m;
  const Vec6 xdot_e = xdot_from_xi(J, xi_e);
  const Vec6 e = sp.x_e_des - J.x_e;
  const Vec6 wrench = gains.K_p * e - gains.K_d * xdot_e;
  cmd.tau_m = J.J_eq.transpose() * (J.T.transpose() * wrench) + g_vec.tail<6>();

  passivity_observe(ledger, cmd.f_th, cmd.tau_uav, state.V_f.v.z(), state.V_f.w, dT);
  compliance_port_update(ledger, xdot_e, wrench, dT);

  if (info) {
    info->vtilde = err.vtilde;
    info->wtilde = err.wtilde;
    info->w_ref = cs.w_ref;
    info->x_e = J.x_e;
    info->xdot_e = xdot_e;
    info->impedance_wrench = wrench;
    info->D_pc_z = ledger.D_pc_z;
    info->D_pc_w = ledger.D_pc_w;
  }

  cs.w_ref += dT * wdot_ref;
  const Vec3 dr = state.r_f - sp.r_des;
  cs.r_err_int += dT * dr;
  for (int i = 0; i < 3; ++i)
    cs.r_err_int[i] = std::clamp(cs.r_err_int[i], -gains.integral_clamp, gains.integral_clamp);

  return cmd;
}

} // namespace uavm
