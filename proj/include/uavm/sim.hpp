#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "uavm/control.hpp"

namespace uavm {

struct FreeSpace {};

/// Unilateral spring wall. `normal` is the unit direction the wall pushes the
/// effector (into free space); contact surface passes through `point`.
struct Wall {
  Vec3 point{0.4, 0.0, 0.0};
  Vec3 normal{-1.0, 0.0, 0.0};
  double stiffness{1000.0};
  double damping{0.0};
};

/// Bilateral springs along all three global axes, anchored where the effector
/// starts.
struct TriaxialSpring {
  Vec3 anchor{0.3, 0.0, -0.75};
  Mat3 stiffness{1000.0 * Mat3::Identity()};
  double damping{0.0};
};

using Environment = std::variant<FreeSpace, Wall, TriaxialSpring>;

struct EnvWrench {
  Vec6 F_e{Vec6::Zero()};    // wrench on the effector, effector frame
  Vec3 f_g{Vec3::Zero()};    // same force in global coordinates
};

/// Force the environment applies to the effector at global position r_e with
/// orientation R_ge and global velocity v_e. Pure forces; no contact moments.
EnvWrench environment_wrench(const Environment &env, const Vec3 &r_e_g,
                             const Mat3 &R_ge, const Vec3 &v_e_g);

void validate_environment(const Environment &env);

/// Timed setpoint change; fields left empty keep their previous value.
struct SetpointEvent {
  double t{0.0};
  std::optional<Vec3> r_des;
  std::optional<double> yaw_des;
  std::optional<Vec6> x_e_des;
};

struct Scenario {
  std::string name{"custom"};
  SystemModel model;
  ControlGains gains;
  Environment env{FreeSpace{}};
  Setpoints setpoints;
  std::vector<SetpointEvent> events;
  SystemState initial_state;
  bool pc_enabled{true};
  double dt{1e-3};
  double duration{60.0};

  void validate() const;
};

class TrajectoryLog {
public:
  TrajectoryLog();

  const std::vector<std::string> &columns() const { return names_; }
  int column_index(const std::string &name) const; // throws ConfigError if unknown
  std::size_t rows() const { return data_.size() / names_.size(); }
  double at(std::size_t row, int col) const { return data_[row * names_.size() + col]; }
  double at(std::size_t row, const std::string &name) const {
    return at(row, column_index(name));
  }
  Eigen::VectorXd column(const std::string &name) const;

  void append_row(const std::vector<double> &row);
  const std::string &config_json() const { return config_json_; }
  void set_config_json(std::string j) { config_json_ = std::move(j); }

  void write_csv(const std::string &path) const;
  static TrajectoryLog read_csv(const std::string &path);

private:
  std::vector<std::string> names_;
  std::vector<double> data_;
  std::string config_json_;
};

/// One plant step of length h under a zero-order-hold command. The four work
/// integrals (actuation, gravity, environment, drag) advance inside the same
/// RK4 stages as the state, so discrete energy bookkeeping matches the
/// integrator to its own accuracy.
void sim_step(const SystemModel &model, const Environment &env,
              const ControlCommand &cmd, SystemState &state,
              Eigen::Vector4d &work, double h);

struct RunResult {
  TrajectoryLog log;
  SystemState final_state;
  PassivityLedger ledger;
};

RunResult run_scenario(const Scenario &scenario);

double kinetic_energy(const SystemModel &model, const SystemState &state);

} // namespace uavm
