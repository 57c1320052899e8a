#include "uavm/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "uavm/config.hpp"
#include "uavm/errors.hpp"

namespace uavm {

EnvWrench environment_wrench(const Environment &env, const Vec3 &r_e_g,
                             const Mat3 &R_ge, const Vec3 &v_e_g) {
  EnvWrench out;
  if (std::holds_alternative<FreeSpace>(env))
    return out;

  if (const Wall *w = std::get_if<Wall>(&env)) {
    const double depth = (w->point - r_e_g).dot(w->normal);
    if (depth > 0.0) {
      const double rate = -v_e_g.dot(w->normal);
      const double magnitude = std::max(0.0, w->stiffness * depth + w->damping * rate);
      out.f_g = magnitude * w->normal;
    }
  } else if (const TriaxialSpring *s = std::get_if<TriaxialSpring>(&env)) {
    out.f_g = s->stiffness * (s->anchor - r_e_g) - s->damping * v_e_g;
  }
  out.F_e.head<3>() = R_ge.transpose() * out.f_g;
  return out;
}

void validate_environment(const Environment &env) {
  if (const Wall *w = std::get_if<Wall>(&env)) {
    if (std::abs(w->normal.norm() - 1.0) > 1e-9)
      throw ConfigError("environment.wall.normal: must be unit length");
    if (!(w->stiffness > 0.0))
      throw ConfigError("environment.wall.stiffness: must be positive");
    if (w->damping < 0.0)
      throw ConfigError("environment.wall.damping: must be non-negative");
  } else if (const TriaxialSpring *s = std::get_if<TriaxialSpring>(&env)) {
    if ((s->stiffness - s->stiffness.transpose()).norm() > 1e-9)
      throw ConfigError("environment.springs.stiffness: must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat3> es(s->stiffness);
    if (es.eigenvalues().minCoeff() < -1e-12)
      throw ConfigError("environment.springs.stiffness: must be positive semidefinite");
    if (s->damping < 0.0)
      throw ConfigError("environment.springs.damping: must be non-negative");
  }
}

void Scenario::validate() const {
  model.validate();
  gains.validate();
  validate_environment(env);
  if (!(dt > 0.0) || dt > 0.1)
    throw ConfigError("scenario.dt: must lie in (0, 0.1]");
  if (!(duration > 0.0))
    throw ConfigError("scenario.duration: must be positive");
  if (duration / dt > 2e7)
    throw ConfigError("scenario: duration/dt too large");
  for (const auto &ev : events)
    if (ev.t < 0.0)
      throw ConfigError("scenario.events: negative event time");
}

namespace {

std::vector<std::string> log_column_names() {
  std::vector<std::string> n;
  const auto push3 = [&n](const std::string &base, const char *sfx = "xyz") {
    for (int i = 0; i < 3; ++i)
      n.push_back(base + sfx[i]);
  };
  const auto push6i = [&n](const std::string &base) {
    for (int i = 0; i < 6; ++i)
      n.push_back(base + std::to_string(i));
  };
  n.emplace_back("t");
  push3("r_f");
  push3("phi_f");
  for (const char *s : {"x", "y", "z", "rx", "ry", "rz"})
    n.push_back(std::string("xe_") + s);
  for (const char *s : {"x", "y", "z", "rx", "ry", "rz"})
    n.push_back(std::string("xed_") + s);
  push3("re_");
  for (const char *s : {"fx", "fy", "fz", "tx", "ty", "tz"})
    n.push_back(std::string("Fe_") + s);
  push3("Fg_");
  n.emplace_back("f_th");
  push3("tau_uav_");
  push6i("tau_m_");
  n.emplace_back("E_obs_z");
  n.emplace_back("E_obs_w");
  n.emplace_back("D_pc_z");
  n.emplace_back("D_pc_w");
  n.emplace_back("E_port_m");
  push6i("q_m_");
  push3("v_f");
  push3("w_f");
  push6i("dq_m_");
  push3("w_ref_");
  push3("vtilde_");
  n.emplace_back("KE");
  n.emplace_back("W_ctrl");
  n.emplace_back("W_grav");
  n.emplace_back("W_ext");
  n.emplace_back("W_drag");
  return n;
}

} // namespace

TrajectoryLog::TrajectoryLog() : names_(log_column_names()) {}

int TrajectoryLog::column_index(const std::string &name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end())
    throw ConfigError("log column not found: " + name);
  return static_cast<int>(it - names_.begin());
}

Eigen::VectorXd TrajectoryLog::column(const std::string &name) const {
  const int c = column_index(name);
  Eigen::VectorXd v(rows());
  for (std::size_t r = 0; r < rows(); ++r)
    v[static_cast<Eigen::Index>(r)] = at(r, c);
  return v;
}

void TrajectoryLog::append_row(const std::vector<double> &row) {
  if (row.size() != names_.size())
    throw NumericError("log row width mismatch");
  data_.insert(data_.end(), row.begin(), row.end());
}

void TrajectoryLog::write_csv(const std::string &path) const {
  std::FILE *f = std::fopen(path.c_str(), "w");
  if (!f)
    throw IoError("cannot open for writing: " + path);
  std::fputs("# uavm trajectory v1\n", f);
  if (!config_json_.empty())
    std::fprintf(f, "# config = %s\n", config_json_.c_str());
  for (std::size_t c = 0; c < names_.size(); ++c)
    std::fprintf(f, "%s%s", c ? "," : "", names_[c].c_str());
  std::fputc('\n', f);
  const std::size_t w = names_.size();
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t c = 0; c < w; ++c)
      std::fprintf(f, "%s%.12g", c ? "," : "", data_[r * w + c]);
    std::fputc('\n', f);
  }
  if (std::fclose(f) != 0)
    throw IoError("write failed: " + path);
}

TrajectoryLog TrajectoryLog::read_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open for reading: " + path);
  TrajectoryLog log;
  log.names_.clear();
  std::string line;
  bool header_done = false;
  const std::string config_tag = "# config = ";
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    if (line[0] == '#') {
      if (line.rfind(config_tag, 0) == 0)
        log.config_json_ = line.substr(config_tag.size());
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    if (!header_done) {
      while (std::getline(ss, cell, ','))
        log.names_.push_back(cell);
      if (log.names_.empty())
        throw IoError("empty header in " + path);
      header_done = true;
      continue;
    }
    std::vector<double> row;
    row.reserve(log.names_.size());
    while (std::getline(ss, cell, ','))
      row.push_back(std::strtod(cell.c_str(), nullptr));
    if (row.size() != log.names_.size())
      throw IoError("ragged row in " + path);
    log.data_.insert(log.data_.end(), row.begin(), row.end());
  }
  if (!header_done)
    throw IoError("no header in " + path);
  return log;
}

double kinetic_energy(const SystemModel &model, const SystemState &state) {
  const Vec12 xi = state.xi_q();
  return 0.5 * xi.dot(mass_matrix(model, state) * xi);
}

namespace {

struct AugDeriv {
  Vec3 dr, dphi;
  Vec6 dq;
  Vec12 dxi;
  Eigen::Vector4d dW;
};

AugDeriv aug_derivative(const SystemModel &model, const Environment &env,
                        const Vec12 &tau_b, const SystemState &s) {
  const Mat3 R_gf = rpy_to_rotation(s.phi_f);

  const Pose ee = arm_forward_kinematics(model.arm, s.q_m);
  const Vec3 r_e_g = s.r_f + R_gf * ee.p;
  const Mat3 R_ge = R_gf * ee.R;
  const Vec6 V_e =
      adjoint(ee.inverse()) * s.V_f.vec() + arm_body_jacobian(model.arm, s.q_m) * s.dq_m;
  const Vec3 v_e_g = R_ge * V_e.head<3>();
  const EnvWrench ew = environment_wrench(env, r_e_g, R_ge, v_e_g);

  AugDeriv d;
  d.dr = R_gf * s.V_f.v;
  d.dphi = euler_rate_map_inv(s.phi_f) * s.V_f.w;
  d.dq = s.dq_m;
  d.dxi = forward_dynamics(model, s, tau_b, ew.F_e);

  const Vec12 xi = s.xi_q();
  d.dW[0] = xi.dot(tau_b);
  d.dW[1] = -xi.dot(gravity_vector(model, s));
  d.dW[2] = V_e.dot(ew.F_e);
  d.dW[3] = -s.V_f.vec().dot(model.fuselage_drag * s.V_f.vec());
  return d;
}

SystemState shift_state(const SystemState &s, const AugDeriv &d, double a) {
  SystemState o = s;
  o.r_f += a * d.dr;
  o.phi_f = RpyAngles::from(s.phi_f.vec() + a * d.dphi);
  o.q_m += a * d.dq;
  const Vec12 xi = s.xi_q() + a * d.dxi;
  o.V_f = BodyTwist::from(xi.head<6>());
  o.dq_m = xi.tail<6>();
  return o;
}

} // namespace

void sim_step(const SystemModel &model, const Environment &env,
              const ControlCommand &cmd, SystemState &state,
              Eigen::Vector4d &work, double h) {
  const Vec12 tau_b = cmd.tau_b();
  const AugDeriv k1 = aug_derivative(model, env, tau_b, state);
  const AugDeriv k2 = aug_derivative(model, env, tau_b, shift_state(state, k1, 0.5 * h));
  const AugDeriv k3 = aug_derivative(model, env, tau_b, shift_state(state, k2, 0.5 * h));
  const AugDeriv k4 = aug_derivative(model, env, tau_b, shift_state(state, k3, h));

  AugDeriv sum;
  sum.dr = (k1.dr + 2.0 * k2.dr + 2.0 * k3.dr + k4.dr) / 6.0;
  sum.dphi = (k1.dphi + 2.0 * k2.dphi + 2.0 * k3.dphi + k4.dphi) / 6.0;
  sum.dq = (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq) / 6.0;
  sum.dxi = (k1.dxi + 2.0 * k2.dxi + 2.0 * k3.dxi + k4.dxi) / 6.0;
  sum.dW = (k1.dW + 2.0 * k2.dW + 2.0 * k3.dW + k4.dW) / 6.0;

  state = shift_state(state, sum, h);
  work += h * sum.dW;
}

RunResult run_scenario(const Scenario &scenario) {
  scenario.validate();

  std::vector<SetpointEvent> events = scenario.events;
  std::stable_sort(events.begin(), events.end(),
                   [](const SetpointEvent &a, const SetpointEvent &b) { return a.t < b.t; });

  RunResult out;
  out.log.set_config_json(scenario_to_json(scenario));
  SystemState state = scenario.initial_state;
  Setpoints sp = scenario.setpoints;
  ControllerState cs;
  PassivityLedger ledger;
  Eigen::Vector4d work = Eigen::Vector4d::Zero();
  std::size_t next_event = 0;

  const long steps = std::lround(scenario.duration / scenario.dt);
  std::vector<double> row(out.log.columns().size());

  for (long k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * scenario.dt;
    while (next_event < events.size() && events[next_event].t <= t + 1e-12) {
      const SetpointEvent &ev = events[next_event];
      if (ev.r_des)
        sp.r_des = *ev.r_des;
      if (ev.yaw_des)
        sp.yaw_des = *ev.yaw_des;
      if (ev.x_e_des)
        sp.x_e_des = *ev.x_e_des;
      ++next_event;
    }

    TickInfo info;
    const ControlCommand cmd = controller_tick(scenario.model, state, sp, scenario.gains,
                                               scenario.dt, scenario.pc_enabled, cs,
                                               ledger, &info);

    const Mat3 R_gf = rpy_to_rotation(state.phi_f);
    const Vec3 p_fe = info.x_e.head<3>();
    const Mat3 R_fe = rpy_to_rotation(RpyAngles::from(info.x_e.tail<3>()));
    const Vec3 r_e_g = state.r_f + R_gf * p_fe;
    const Mat3 R_ge = R_gf * R_fe;
    const Vec3 v_e_g =
        R_gf * (state.V_f.v + state.V_f.w.cross(p_fe) + info.xdot_e.head<3>());
    const EnvWrench ew = environment_wrench(scenario.env, r_e_g, R_ge, v_e_g);

    int c = 0;
    const auto put = [&](double v) { row[static_cast<std::size_t>(c++)] = v; };
    const auto put_vec = [&](const auto &v) {
      for (int i = 0; i < v.size(); ++i)
        put(v[i]);
    };
    put(t);
    put_vec(state.r_f);
    put_vec(state.phi_f.vec());
    put_vec(info.x_e);
    put_vec(sp.x_e_des);
    put_vec(r_e_g);
    put_vec(ew.F_e);
    put_vec(ew.f_g);
    put(cmd.f_th);
    put_vec(cmd.tau_uav);
    put_vec(cmd.tau_m);
    put(ledger.E_obs_z);
    put(ledger.E_obs_w);
    put(ledger.D_pc_z);
    put(ledger.D_pc_w);
    put(ledger.E_port_m);
    put_vec(state.q_m);
    put_vec(state.V_f.v);
    put_vec(state.V_f.w);
    put_vec(state.dq_m);
    put_vec(info.w_ref);
    put_vec(info.vtilde);
    put(kinetic_energy(scenario.model, state));
    put(work[0]);
    put(work[1]);
    put(work[2]);
    put(work[3]);
    out.log.append_row(row);

    if (k < steps)
      sim_step(scenario.model, scenario.env, cmd, state, work, scenario.dt);
  }

  out.final_state = state;
  out.ledger = ledger;
  return out;
}

} // namespace uavm
