#include "uavm/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "uavm/errors.hpp"

namespace uavm {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string &path, const std::string &msg) {
  throw ConfigError(path + ": " + msg);
}

void check_keys(const json &j, const std::string &path,
                std::initializer_list<const char *> allowed) {
  if (!j.is_object())
    fail(path, "expected object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char *a : allowed)
      if (it.key() == a) {
        known = true;
        break;
      }
    if (!known)
      fail(path + "." + it.key(), "unknown key");
  }
}

double as_number(const json &j, const std::string &path) {
  if (!j.is_number())
    fail(path, "expected number");
  return j.get<double>();
}

double number_or(const json &j, const std::string &path, const char *key, double fallback) {
  if (!j.contains(key))
    return fallback;
  return as_number(j.at(key), path + "." + key);
}

bool bool_or(const json &j, const std::string &path, const char *key, bool fallback) {
  if (!j.contains(key))
    return fallback;
  const json &v = j.at(key);
  if (!v.is_boolean())
    fail(path + "." + key, "expected boolean");
  return v.get<bool>();
}

template <int N>
Eigen::Matrix<double, N, 1> as_vector(const json &j, const std::string &path) {
  if (!j.is_array() || j.size() != N)
    fail(path, "expected array of " + std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i)
    v[i] = as_number(j.at(i), path + "[" + std::to_string(i) + "]");
  return v;
}

// Square matrix given as a diagonal ([N]) or dense row-major ([N*N]).
template <int N>
Eigen::Matrix<double, N, N> as_matrix(const json &j, const std::string &path) {
  if (!j.is_array())
    fail(path, "expected array");
  if (j.size() == N)
    return Eigen::Matrix<double, N, N>(as_vector<N>(j, path).asDiagonal());
  if (j.size() == N * N) {
    Eigen::Matrix<double, N, N> m;
    for (int r = 0; r < N; ++r)
      for (int c = 0; c < N; ++c)
        m(r, c) = as_number(j.at(r * N + c),
                            path + "[" + std::to_string(r * N + c) + "]");
    return m;
  }
  fail(path, "expected array of " + std::to_string(N) + " (diagonal) or " +
                 std::to_string(N * N) + " (row-major) numbers");
}

// Isotropic gain given as one number or an explicit diagonal.
template <int N>
Eigen::Matrix<double, N, N> as_gain(const json &j, const std::string &path) {
  if (j.is_number())
    return j.get<double>() * Eigen::Matrix<double, N, N>::Identity();
  return Eigen::Matrix<double, N, N>(as_vector<N>(j, path).asDiagonal());
}

Pose as_pose(const json &j, const std::string &path) {
  check_keys(j, path, {"position", "rpy"});
  Pose p = Pose::identity();
  if (j.contains("position"))
    p.p = as_vector<3>(j.at("position"), path + ".position");
  if (j.contains("rpy"))
    p.R = rpy_to_rotation(RpyAngles::from(as_vector<3>(j.at("rpy"), path + ".rpy")));
  return p;
}

ArmModel parse_arm(const json &j, const std::string &path) {
  check_keys(j, path, {"mount", "ee_offset", "joints", "rotor_inertia"});
  ArmModel arm = default_arm();
  if (j.contains("mount"))
    arm.mount = as_pose(j.at("mount"), path + ".mount");
  if (j.contains("ee_offset"))
    arm.ee_offset = as_pose(j.at("ee_offset"), path + ".ee_offset");
  if (j.contains("rotor_inertia"))
    arm.rotor_inertia = as_vector<6>(j.at("rotor_inertia"), path + ".rotor_inertia");
  if (j.contains("joints")) {
    const json &joints = j.at("joints");
    if (!joints.is_array() || joints.size() != ArmModel::kJoints)
      fail(path + ".joints", "expected array of 6 joints");
    for (int i = 0; i < ArmModel::kJoints; ++i) {
      const std::string jp = path + ".joints[" + std::to_string(i) + "]";
      const json &jj = joints.at(i);
      check_keys(jj, jp, {"transform", "axis", "mass", "com", "inertia"});
      ArmJoint joint;
      joint.transform = jj.contains("transform")
                            ? as_pose(jj.at("transform"), jp + ".transform")
                            : Pose::identity();
      if (!jj.contains("axis"))
        fail(jp + ".axis", "missing");
      joint.axis = as_vector<3>(jj.at("axis"), jp + ".axis");
      joint.mass = number_or(jj, jp, "mass", 1.0);
      joint.com = jj.contains("com") ? as_vector<3>(jj.at("com"), jp + ".com")
                                     : Vec3::Zero();
      joint.inertia = jj.contains("inertia")
                          ? as_matrix<3>(jj.at("inertia"), jp + ".inertia")
                          : Mat3(0.01 * Mat3::Identity());
      arm.joints[i] = joint;
    }
  }
  return arm;
}

SystemModel parse_model(const json &j, const std::string &path) {
  check_keys(j, path,
             {"vehicle_mass", "vehicle_inertia", "gravity", "fuselage_drag", "arm"});
  SystemModel m;
  m.vehicle_mass = number_or(j, path, "vehicle_mass", m.vehicle_mass);
  if (j.contains("vehicle_inertia"))
    m.vehicle_inertia = as_matrix<3>(j.at("vehicle_inertia"), path + ".vehicle_inertia");
  m.gravity = number_or(j, path, "gravity", m.gravity);
  if (j.contains("fuselage_drag"))
    m.fuselage_drag = as_matrix<6>(j.at("fuselage_drag"), path + ".fuselage_drag");
  if (j.contains("arm"))
    m.arm = parse_arm(j.at("arm"), path + ".arm");
  return m;
}

ControlGains parse_gains(const json &j, const std::string &path) {
  check_keys(j, path,
             {"D_z", "D_w", "D", "D_phi", "D_r_p", "D_r_i", "integral_clamp", "K_p",
              "K_d", "E_z0", "E_w0", "pc_force_cap", "pc_torque_cap"});
  ControlGains g;
  g.D_z = number_or(j, path, "D_z", g.D_z);
  if (j.contains("D_w"))
    g.D_w = as_gain<3>(j.at("D_w"), path + ".D_w");
  if (j.contains("D"))
    g.D = as_gain<3>(j.at("D"), path + ".D");
  if (j.contains("D_phi"))
    g.D_phi = as_gain<3>(j.at("D_phi"), path + ".D_phi");
  if (j.contains("D_r_p"))
    g.D_r_p = as_gain<3>(j.at("D_r_p"), path + ".D_r_p");
  if (j.contains("D_r_i"))
    g.D_r_i = as_gain<3>(j.at("D_r_i"), path + ".D_r_i");
  g.integral_clamp = number_or(j, path, "integral_clamp", g.integral_clamp);
  if (j.contains("K_p"))
    g.K_p = as_gain<6>(j.at("K_p"), path + ".K_p");
  if (j.contains("K_d"))
    g.K_d = as_gain<6>(j.at("K_d"), path + ".K_d");
  g.E_z0 = number_or(j, path, "E_z0", g.E_z0);
  g.E_w0 = number_or(j, path, "E_w0", g.E_w0);
  g.pc_force_cap = number_or(j, path, "pc_force_cap", g.pc_force_cap);
  g.pc_torque_cap = number_or(j, path, "pc_torque_cap", g.pc_torque_cap);
  return g;
}

Environment parse_environment(const json &j, const std::string &path) {
  if (!j.contains("type"))
    fail(path + ".type", "missing");
  const std::string type = j.at("type").is_string() ? j.at("type").get<std::string>() : "";
  if (type == "free_space") {
    check_keys(j, path, {"type"});
    return FreeSpace{};
  }
  if (type == "wall") {
    check_keys(j, path, {"type", "point", "normal", "stiffness", "damping"});
    Wall w;
    if (j.contains("point"))
      w.point = as_vector<3>(j.at("point"), path + ".point");
    if (j.contains("normal"))
      w.normal = as_vector<3>(j.at("normal"), path + ".normal");
    w.stiffness = number_or(j, path, "stiffness", w.stiffness);
    w.damping = number_or(j, path, "damping", w.damping);
    return w;
  }
  if (type == "springs") {
    check_keys(j, path, {"type", "anchor", "stiffness", "damping"});
    TriaxialSpring s;
    if (j.contains("anchor"))
      s.anchor = as_vector<3>(j.at("anchor"), path + ".anchor");
    if (j.contains("stiffness"))
      s.stiffness = as_matrix<3>(j.at("stiffness"), path + ".stiffness");
    s.damping = number_or(j, path, "damping", s.damping);
    return s;
  }
  fail(path + ".type", "expected one of free_space, wall, springs");
}

Setpoints parse_setpoints(const json &j, const std::string &path) {
  check_keys(j, path, {"r_des", "yaw_des", "x_e_des"});
  Setpoints sp;
  if (j.contains("r_des"))
    sp.r_des = as_vector<3>(j.at("r_des"), path + ".r_des");
  sp.yaw_des = number_or(j, path, "yaw_des", sp.yaw_des);
  if (j.contains("x_e_des"))
    sp.x_e_des = as_vector<6>(j.at("x_e_des"), path + ".x_e_des");
  return sp;
}

SystemState parse_state(const json &j, const std::string &path) {
  check_keys(j, path, {"r", "phi", "q_m", "v", "w", "dq_m"});
  SystemState s;
  if (j.contains("r"))
    s.r_f = as_vector<3>(j.at("r"), path + ".r");
  if (j.contains("phi"))
    s.phi_f = RpyAngles::from(as_vector<3>(j.at("phi"), path + ".phi"));
  if (j.contains("q_m"))
    s.q_m = as_vector<6>(j.at("q_m"), path + ".q_m");
  BodyTwist V;
  if (j.contains("v"))
    V.v = as_vector<3>(j.at("v"), path + ".v");
  if (j.contains("w"))
    V.w = as_vector<3>(j.at("w"), path + ".w");
  s.V_f = V;
  if (j.contains("dq_m"))
    s.dq_m = as_vector<6>(j.at("dq_m"), path + ".dq_m");
  return s;
}

json vec_to_json(const Eigen::Ref<const Eigen::VectorXd> &v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    a.push_back(v[i]);
  return a;
}

template <int N> json matrix_to_json(const Eigen::Matrix<double, N, N> &m) {
  if ((m - Eigen::Matrix<double, N, N>(m.diagonal().asDiagonal())).norm() == 0.0)
    return vec_to_json(m.diagonal());
  json a = json::array();
  for (int r = 0; r < N; ++r)
    for (int c = 0; c < N; ++c)
      a.push_back(m(r, c));
  return a;
}

json pose_to_json(const Pose &p) {
  json j;
  j["position"] = vec_to_json(p.p);
  j["rpy"] = vec_to_json(rotation_to_rpy(p.R).vec());
  return j;
}

} // namespace

Scenario scenario_from_json(const std::string &json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error &e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  const std::string root = "$";
  check_keys(j, root,
             {"schema_version", "name", "model", "gains", "environment", "setpoints",
              "events", "initial_state", "pc_enabled", "dt", "duration"});
  if (!j.contains("schema_version"))
    fail(root + ".schema_version", "missing");
  if (!j.at("schema_version").is_number_integer() ||
      j.at("schema_version").get<int>() != kSchemaVersion)
    fail(root + ".schema_version", "unsupported (expected " +
                                       std::to_string(kSchemaVersion) + ")");

  Scenario sc;
  if (j.contains("name")) {
    if (!j.at("name").is_string())
      fail(root + ".name", "expected string");
    sc.name = j.at("name").get<std::string>();
  }
  if (j.contains("model"))
    sc.model = parse_model(j.at("model"), root + ".model");
  if (j.contains("gains"))
    sc.gains = parse_gains(j.at("gains"), root + ".gains");
  if (j.contains("environment"))
    sc.env = parse_environment(j.at("environment"), root + ".environment");
  if (j.contains("setpoints"))
    sc.setpoints = parse_setpoints(j.at("setpoints"), root + ".setpoints");
  if (j.contains("events")) {
    const json &evs = j.at("events");
    if (!evs.is_array())
      fail(root + ".events", "expected array");
    for (std::size_t i = 0; i < evs.size(); ++i) {
      const std::string ep = root + ".events[" + std::to_string(i) + "]";
      const json &e = evs.at(i);
      check_keys(e, ep, {"t", "r_des", "yaw_des", "x_e_des"});
      SetpointEvent ev;
      if (!e.contains("t"))
        fail(ep + ".t", "missing");
      ev.t = as_number(e.at("t"), ep + ".t");
      if (e.contains("r_des"))
        ev.r_des = as_vector<3>(e.at("r_des"), ep + ".r_des");
      if (e.contains("yaw_des"))
        ev.yaw_des = as_number(e.at("yaw_des"), ep + ".yaw_des");
      if (e.contains("x_e_des"))
        ev.x_e_des = as_vector<6>(e.at("x_e_des"), ep + ".x_e_des");
      sc.events.push_back(ev);
    }
  }
  if (j.contains("initial_state"))
    sc.initial_state = parse_state(j.at("initial_state"), root + ".initial_state");
  sc.pc_enabled = bool_or(j, root, "pc_enabled", sc.pc_enabled);
  sc.dt = number_or(j, root, "dt", sc.dt);
  sc.duration = number_or(j, root, "duration", sc.duration);

  sc.validate();
  return sc;
}

Scenario load_scenario(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_from_json(ss.str());
}

std::string scenario_to_json(const Scenario &sc) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = sc.name;

  json model;
  model["vehicle_mass"] = sc.model.vehicle_mass;
  model["vehicle_inertia"] = matrix_to_json<3>(sc.model.vehicle_inertia);
  model["gravity"] = sc.model.gravity;
  model["fuselage_drag"] = matrix_to_json<6>(sc.model.fuselage_drag);
  json arm;
  arm["mount"] = pose_to_json(sc.model.arm.mount);
  arm["ee_offset"] = pose_to_json(sc.model.arm.ee_offset);
  json joints = json::array();
  for (const ArmJoint &joint : sc.model.arm.joints) {
    json jj;
    jj["transform"] = pose_to_json(joint.transform);
    jj["axis"] = vec_to_json(joint.axis);
    jj["mass"] = joint.mass;
    jj["com"] = vec_to_json(joint.com);
    jj["inertia"] = matrix_to_json<3>(joint.inertia);
    joints.push_back(jj);
  }
  arm["joints"] = joints;
  model["arm"] = arm;
  j["model"] = model;

  json gains;
  gains["D_z"] = sc.gains.D_z;
  gains["D_w"] = vec_to_json(sc.gains.D_w.diagonal());
  gains["D"] = vec_to_json(sc.gains.D.diagonal());
  gains["D_phi"] = vec_to_json(sc.gains.D_phi.diagonal());
  gains["D_r_p"] = vec_to_json(sc.gains.D_r_p.diagonal());
  gains["D_r_i"] = vec_to_json(sc.gains.D_r_i.diagonal());
  gains["integral_clamp"] = sc.gains.integral_clamp;
  gains["K_p"] = vec_to_json(sc.gains.K_p.diagonal());
  gains["K_d"] = vec_to_json(sc.gains.K_d.diagonal());
  gains["E_z0"] = sc.gains.E_z0;
  gains["E_w0"] = sc.gains.E_w0;
  gains["pc_force_cap"] = sc.gains.pc_force_cap;
  gains["pc_torque_cap"] = sc.gains.pc_torque_cap;
  j["gains"] = gains;

  json env;
  if (std::holds_alternative<FreeSpace>(sc.env)) {
    env["type"] = "free_space";
  } else if (const Wall *w = std::get_if<Wall>(&sc.env)) {
    env["type"] = "wall";
    env["point"] = vec_to_json(w->point);
    env["normal"] = vec_to_json(w->normal);
    env["stiffness"] = w->stiffness;
    env["damping"] = w->damping;
  } else if (const TriaxialSpring *s = std::get_if<TriaxialSpring>(&sc.env)) {
    env["type"] = "springs";
    env["anchor"] = vec_to_json(s->anchor);
    env["stiffness"] = matrix_to_json<3>(s->stiffness);
    env["damping"] = s->damping;
  }
  j["environment"] = env;

  json sp;
  sp["r_des"] = vec_to_json(sc.setpoints.r_des);
  sp["yaw_des"] = sc.setpoints.yaw_des;
  sp["x_e_des"] = vec_to_json(sc.setpoints.x_e_des);
  j["setpoints"] = sp;

  json events = json::array();
  for (const SetpointEvent &ev : sc.events) {
    json e;
    e["t"] = ev.t;
    if (ev.r_des)
      e["r_des"] = vec_to_json(*ev.r_des);
    if (ev.yaw_des)
      e["yaw_des"] = *ev.yaw_des;
    if (ev.x_e_des)
      e["x_e_des"] = vec_to_json(*ev.x_e_des);
    events.push_back(e);
  }
  j["events"] = events;

  json st;
  st["r"] = vec_to_json(sc.initial_state.r_f);
  st["phi"] = vec_to_json(sc.initial_state.phi_f.vec());
  st["q_m"] = vec_to_json(sc.initial_state.q_m);
  st["v"] = vec_to_json(sc.initial_state.V_f.v);
  st["w"] = vec_to_json(sc.initial_state.V_f.w);
  st["dq_m"] = vec_to_json(sc.initial_state.dq_m);
  j["initial_state"] = st;

  j["pc_enabled"] = sc.pc_enabled;
  j["dt"] = sc.dt;
  j["duration"] = sc.duration;
  return j.dump();
}

Scenario builtin_scenario(const std::string &name) {
  Scenario sc;
  sc.name = name;
  if (name == "free_flight") {
    sc.env = FreeSpace{};
    sc.pc_enabled = false; // pure repositioning; climbing against gravity reads
                           // as negative port energy, which is not an
                           // interaction-passivity violation
    SetpointEvent hop;
    hop.t = 0.0;
    hop.r_des = Vec3(10.0, 10.0, 10.0);
    SetpointEvent reach;
    reach.t = 15.0;
    reach.x_e_des = (Vec6() << -0.5, 0.0, -0.75, 0.0, 0.0, 0.0).finished();
    sc.events = {hop, reach};
  } else if (name == "task1_wall") {
    sc.env = Wall{};
    sc.pc_enabled = true;
    sc.duration = 20.0;
    SetpointEvent push;
    push.t = 0.2;
    push.x_e_des = (Vec6() << 0.6, 0.0, -0.75, 0.0, 0.0, 0.0).finished();
    sc.events = {push};
  } else if (name == "task2_springs") {
    sc.env = TriaxialSpring{};
    sc.pc_enabled = true;
    sc.duration = 20.0;
    SetpointEvent stretch;
    stretch.t = 0.5;
    stretch.x_e_des = (Vec6() << 0.6, 0.3, -1.0, 0.0, 0.0, 0.0).finished();
    sc.events = {stretch};
  } else {
    throw ConfigError("unknown builtin scenario: " + name +
                      " (expected free_flight, task1_wall or task2_springs)");
  }
  return sc;
}

std::vector<std::string> builtin_scenario_names() {
  return {"free_flight", "task1_wall", "task2_springs"};
}

} // namespace uavm
