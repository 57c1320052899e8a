#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <variant>

#include "uavm/config.hpp"
#include "uavm/errors.hpp"
#include "uavm/sim.hpp"

using namespace uavm;

namespace {

std::string temp_path(const char *name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("wall force follows penetration depth and stays unilateral") {
  Wall wall; // plane x = 0.4, pushes toward -x
  const Environment env = wall;
  const Mat3 R = Mat3::Identity();

  SUBCASE("linear in depth") {
    const EnvWrench w = environment_wrench(env, Vec3(0.45, 0.2, -0.7), R, Vec3::Zero());
    CHECK(w.f_g.isApprox(Vec3(-50.0, 0.0, 0.0), 1e-12));
    CHECK(w.F_e.head<3>().isApprox(Vec3(-50.0, 0.0, 0.0), 1e-12));
    CHECK(w.F_e.tail<3>().norm() == 0.0);
  }
  SUBCASE("no force outside the surface") {
    const EnvWrench w = environment_wrench(env, Vec3(0.35, 0.0, 0.0), R, Vec3(5.0, 0.0, 0.0));
    CHECK(w.f_g.norm() == 0.0);
  }
  SUBCASE("contact damping resists approach, never pulls") {
    Wall damped = wall;
    damped.damping = 100.0;
    const Environment denv = damped;
    const Vec3 r(0.41, 0.0, 0.0); // 10 N of spring force
    const EnvWrench in = environment_wrench(denv, r, R, Vec3(0.5, 0.0, 0.0));
    CHECK(in.f_g.x() == doctest::Approx(-60.0)); // 10 + 100*0.5
    const EnvWrench out = environment_wrench(denv, r, R, Vec3(-0.5, 0.0, 0.0));
    CHECK(out.f_g.norm() == 0.0); // 10 - 50 clamps at zero
  }
  SUBCASE("force rotates into the end-effector frame") {
    const Mat3 R_ge = rpy_to_rotation(RpyAngles{0.3, -0.2, 0.9});
    const EnvWrench w = environment_wrench(env, Vec3(0.5, 0.0, 0.0), R_ge, Vec3::Zero());
    CHECK(w.f_g.isApprox(Vec3(-100.0, 0.0, 0.0), 1e-12));
    CHECK(w.F_e.head<3>().isApprox(R_ge.transpose() * w.f_g, 1e-12));
  }
}

TEST_CASE("triaxial springs pull toward the anchor") {
  TriaxialSpring springs; // anchor (0.3, 0, -0.75), k = 1000 per axis
  const Environment env = springs;
  const Mat3 R = Mat3::Identity();

  // displaced to the far task setpoint
  const EnvWrench w = environment_wrench(env, Vec3(0.6, 0.3, -1.0), R, Vec3::Zero());
  CHECK(w.f_g.isApprox(Vec3(-300.0, -300.0, 250.0), 1e-12));

  TriaxialSpring damped = springs;
  damped.damping = 20.0;
  const EnvWrench wd =
      environment_wrench(Environment(damped), Vec3(0.3, 0.0, -0.75), R, Vec3(1.0, -2.0, 0.5));
  CHECK(wd.f_g.isApprox(Vec3(-20.0, 40.0, -10.0), 1e-12));
}

TEST_CASE("free space applies nothing") {
  const EnvWrench w =
      environment_wrench(Environment(FreeSpace{}), Vec3(100.0, -3.0, 2.0),
                         rpy_to_rotation(RpyAngles{0.1, 0.2, 0.3}), Vec3(1.0, 1.0, 1.0));
  CHECK(w.f_g.norm() == 0.0);
  CHECK(w.F_e.norm() == 0.0);
}

TEST_CASE("environment validation") {
  Wall w;
  w.normal = Vec3(0.0, 0.0, 0.0);
  CHECK_THROWS_AS(validate_environment(Environment(w)), ConfigError);
  w = Wall{};
  w.stiffness = -5.0;
  CHECK_THROWS_AS(validate_environment(Environment(w)), ConfigError);

  TriaxialSpring s;
  s.stiffness(0, 1) = 3.0; // asymmetric
  CHECK_THROWS_AS(validate_environment(Environment(s)), ConfigError);
  s = TriaxialSpring{};
  s.damping = -1.0;
  CHECK_THROWS_AS(validate_environment(Environment(s)), ConfigError);
  CHECK_NOTHROW(validate_environment(Environment(FreeSpace{})));
}

TEST_CASE("scenario validation") {
  Scenario sc = builtin_scenario("free_flight");
  CHECK_NOTHROW(sc.validate());
  sc.dt = 0.0;
  CHECK_THROWS_AS(sc.validate(), ConfigError);
  sc.dt = 0.5;
  CHECK_THROWS_AS(sc.validate(), ConfigError);
  sc = builtin_scenario("free_flight");
  sc.duration = -1.0;
  CHECK_THROWS_AS(sc.validate(), ConfigError);
  sc = builtin_scenario("free_flight");
  sc.events.push_back(SetpointEvent{-0.5, Vec3::Zero(), {}, {}});
  CHECK_THROWS_AS(sc.validate(), ConfigError);
}

TEST_CASE("builtin scenarios") {
  const auto names = builtin_scenario_names();
  REQUIRE(names.size() == 3);
  CHECK(std::find(names.begin(), names.end(), "free_flight") != names.end());
  CHECK(std::find(names.begin(), names.end(), "task1_wall") != names.end());
  CHECK(std::find(names.begin(), names.end(), "task2_springs") != names.end());

  const Scenario ff = builtin_scenario("free_flight");
  CHECK(ff.pc_enabled == false);
  CHECK(std::holds_alternative<FreeSpace>(ff.env));
  REQUIRE(ff.events.size() == 2);
  CHECK(ff.events[0].r_des.has_value());
  CHECK(ff.events[1].x_e_des.has_value());

  const Scenario t1 = builtin_scenario("task1_wall");
  CHECK(t1.pc_enabled == true);
  CHECK(std::holds_alternative<Wall>(t1.env));

  const Scenario t2 = builtin_scenario("task2_springs");
  CHECK(std::holds_alternative<TriaxialSpring>(t2.env));

  CHECK_THROWS_AS(builtin_scenario("bogus"), ConfigError);
}

TEST_CASE("scenario json round trip is exact") {
  for (const auto &name : builtin_scenario_names()) {
    const Scenario sc = builtin_scenario(name);
    const std::string j1 = scenario_to_json(sc);
    const Scenario sc2 = scenario_from_json(j1);
    const std::string j2 = scenario_to_json(sc2);
    CHECK(j1 == j2);
    CHECK(sc2.name == sc.name);
    CHECK(sc2.pc_enabled == sc.pc_enabled);
    CHECK(sc2.dt == sc.dt);
    CHECK(sc2.events.size() == sc.events.size());
  }
}

TEST_CASE("scenario parsing is strict") {
  const std::string base = scenario_to_json(builtin_scenario("task1_wall"));

  SUBCASE("unknown key is rejected with its path") {
    std::string tampered = base;
    tampered.insert(1, "\"surprise\":1,");
    try {
      scenario_from_json(tampered);
      FAIL("expected ConfigError");
    } catch (const ConfigError &e) {
      CHECK(std::string(e.what()).find("surprise") != std::string::npos);
    }
  }
  SUBCASE("schema version must match") {
    std::string tampered = base;
    const auto pos = tampered.find("\"schema_version\":1");
    REQUIRE(pos != std::string::npos);
    tampered.replace(pos, std::string("\"schema_version\":1").size(), "\"schema_version\":2");
    CHECK_THROWS_AS(scenario_from_json(tampered), ConfigError);
  }
  SUBCASE("malformed json is a config error") {
    CHECK_THROWS_AS(scenario_from_json("{ nope"), ConfigError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_scenario("/no/such/file.json"), ConfigError);
  }
}

TEST_CASE("scenario file load matches the in-memory form") {
  const Scenario sc = builtin_scenario("task2_springs");
  const std::string path = temp_path("uavm_scenario_roundtrip.json");
  {
    FILE *f = std::fopen(path.c_str(), "w");
    REQUIRE(f != nullptr);
    const std::string j = scenario_to_json(sc);
    std::fwrite(j.data(), 1, j.size(), f);
    std::fclose(f);
  }
  const Scenario loaded = load_scenario(path);
  CHECK(scenario_to_json(loaded) == scenario_to_json(sc));
  std::remove(path.c_str());
}

TEST_CASE("one free-fall step balances work and kinetic energy") {
  SystemModel model;
  SystemState state;
  state.V_f.v = Vec3(0.2, -0.1, 0.3); // falling with some initial motion
  Eigen::Vector4d work = Eigen::Vector4d::Zero();
  const double ke0 = kinetic_energy(model, state);

  ControlCommand cmd; // zero: unpowered
  sim_step(model, Environment(FreeSpace{}), cmd, state, work, 1e-3);

  const double ke1 = kinetic_energy(model, state);
  CHECK(work[0] == 0.0); // no actuation
  CHECK(work[2] == 0.0); // no contact
  CHECK(work[3] == 0.0); // no drag
  CHECK(ke1 - ke0 == doctest::Approx(work[1]).epsilon(1e-9));
}

TEST_CASE("fuselage drag dissipates and is accounted") {
  SystemModel model;
  model.gravity = 0.0;
  model.fuselage_drag = 5.0 * Mat6::Identity();
  SystemState state;
  state.V_f.v = Vec3(1.0, 0.0, 0.0);
  Eigen::Vector4d work = Eigen::Vector4d::Zero();
  const double ke0 = kinetic_energy(model, state);

  ControlCommand cmd;
  for (int i = 0; i < 200; ++i)
    sim_step(model, Environment(FreeSpace{}), cmd, state, work, 1e-3);

  const double ke1 = kinetic_energy(model, state);
  CHECK(work[3] < -1e-3); // strictly dissipative
  CHECK(ke1 < ke0);
  CHECK(ke1 - ke0 == doctest::Approx(work.sum()).epsilon(1e-7));
}

TEST_CASE("closed-loop run keeps the work ledger consistent") {
  Scenario sc = builtin_scenario("free_flight");
  sc.duration = 2.0;
  const RunResult rr = run_scenario(sc);
  const std::size_t last = rr.log.rows() - 1;

  const double ke0 = rr.log.at(0, "KE");
  const double ke1 = rr.log.at(last, "KE");
  const double w_sum = rr.log.at(last, "W_ctrl") + rr.log.at(last, "W_grav") +
                       rr.log.at(last, "W_ext") + rr.log.at(last, "W_drag");
  CHECK(ke0 == doctest::Approx(0.0));
  CHECK(std::abs(ke1 - ke0 - w_sum) < 1e-5);

  // no contact in free space
  CHECK(rr.log.column("Fg_x").norm() == 0.0);
  CHECK(rr.log.at(last, "W_ext") == 0.0);
}

TEST_CASE("runs are deterministic") {
  Scenario sc = builtin_scenario("task1_wall");
  sc.duration = 0.5;
  const RunResult a = run_scenario(sc);
  const RunResult b = run_scenario(sc);
  REQUIRE(a.log.rows() == b.log.rows());
  for (std::size_t r = 0; r < a.log.rows(); r += 37)
    for (std::size_t c = 0; c < a.log.columns().size(); ++c)
      CHECK(a.log.at(r, static_cast<int>(c)) == b.log.at(r, static_cast<int>(c)));
  CHECK((a.final_state.r_f - b.final_state.r_f).norm() == 0.0);
  CHECK(a.ledger.E_obs_z == b.ledger.E_obs_z);
}

TEST_CASE("log round-trips through csv") {
  Scenario sc = builtin_scenario("task2_springs");
  sc.duration = 0.2;
  const RunResult rr = run_scenario(sc);

  const std::string path = temp_path("uavm_log_roundtrip.csv");
  rr.log.write_csv(path);
  const TrajectoryLog back = TrajectoryLog::read_csv(path);
  std::remove(path.c_str());

  REQUIRE(back.columns() == rr.log.columns());
  REQUIRE(back.rows() == rr.log.rows());
  CHECK(back.config_json() == rr.log.config_json());
  for (std::size_t r = 0; r < back.rows(); r += 11) {
    for (std::size_t c = 0; c < back.columns().size(); ++c) {
      const double x = rr.log.at(r, static_cast<int>(c));
      const double y = back.at(r, static_cast<int>(c));
      CHECK(std::abs(x - y) <= 1e-9 * std::max(1.0, std::abs(x)));
    }
  }
}

TEST_CASE("csv io failures are reported") {
  const RunResult rr = [] {
    Scenario sc = builtin_scenario("free_flight");
    sc.duration = 0.01;
    return run_scenario(sc);
  }();
  CHECK_THROWS_AS(rr.log.write_csv("/nonexistent_dir_ks83/log.csv"), IoError);
  CHECK_THROWS_AS(TrajectoryLog::read_csv("/nonexistent_dir_ks83/log.csv"), IoError);
}

TEST_CASE("log column access") {
  Scenario sc = builtin_scenario("free_flight");
  sc.duration = 0.01;
  const RunResult rr = run_scenario(sc);
  CHECK(rr.log.column_index("t") == 0);
  CHECK(rr.log.column("KE").size() == static_cast<Eigen::Index>(rr.log.rows()));
  CHECK_THROWS_AS(rr.log.column_index("no_such_signal"), ConfigError);
  // time axis is uniform
  CHECK(rr.log.at(1, "t") - rr.log.at(0, "t") == doctest::Approx(sc.dt));
}

TEST_CASE("setpoint events switch the target at their scheduled sample") {
  Scenario sc = builtin_scenario("free_flight");
  sc.duration = 0.5;
  sc.events.clear();
  SetpointEvent ev;
  ev.t = 0.25;
  Vec6 target;
  target << 0.25, 0.1, -0.7, 0.0, 0.0, 0.0;
  ev.x_e_des = target;
  sc.events.push_back(ev);

  const RunResult rr = run_scenario(sc);
  const int ix = rr.log.column_index("xed_x");
  CHECK(rr.log.at(249, ix) == doctest::Approx(0.3));
  CHECK(rr.log.at(250, ix) == doctest::Approx(0.25));
  CHECK(rr.log.at(251, ix) == doctest::Approx(0.25));
}

TEST_CASE("run embeds its configuration in the log") {
  Scenario sc = builtin_scenario("task1_wall");
  sc.duration = 0.05;
  const RunResult rr = run_scenario(sc);
  REQUIRE_FALSE(rr.log.config_json().empty());
  const Scenario back = scenario_from_json(rr.log.config_json());
  CHECK(back.name == sc.name);
  CHECK(back.duration == doctest::Approx(0.05));
  CHECK(back.pc_enabled == true);
  CHECK(std::holds_alternative<Wall>(back.env));
}

TEST_CASE("wall task makes and survives contact") {
  Scenario sc = builtin_scenario("task1_wall");
  sc.duration = 1.5;
  const RunResult rr = run_scenario(sc);

  const Eigen::VectorXd fx = rr.log.column("Fg_x");
  const Eigen::VectorXd t = rr.log.column("t");
  int first = -1;
  for (Eigen::Index i = 0; i < fx.size(); ++i)
    if (fx[i] != 0.0) {
      first = static_cast<int>(i);
      break;
    }
  REQUIRE(first > 0);
  CHECK(t[first] > 0.2); // the reach command only starts then
  const std::size_t last = rr.log.rows() - 1;
  for (const char *col : {"r_fx", "r_fz", "xe_x", "E_obs_z", "KE"})
    CHECK(std::isfinite(rr.log.at(last, col)));
}
