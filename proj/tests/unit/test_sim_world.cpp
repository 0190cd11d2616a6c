#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>
#include <sstream>

#include "dlf/scenario.hpp"

using namespace dlf;

namespace {

// Small-step Euler integration as an oracle for the closed-form arc.
Pose2 euler(Pose2 p, double v, double w, double dt, int n = 200000) {
  const double h = dt / n;
  for (int i = 0; i < n; ++i) {
    p.position += v * h * heading_vector(p.heading + 0.5 * w * h);
    p.heading += w * h;
  }
  p.heading = wrap_angle(p.heading);
  return p;
}

Scenario parse(const std::string& text) {
  std::istringstream in(text);
  return load_scenario(in, "t.scn");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ScenarioError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("unicycle integration follows the arc") {
  const Pose2 start{{1.0, -2.0}, 0.4};
  for (auto [v, w] : {std::pair{0.5, 0.0}, {0.5, 0.8}, {1.2, -0.3}, {0.0, 0.5}, {0.3, 1e-12}}) {
    const Pose2 exact = integrate_unicycle(start, v, w, 0.7);
    const Pose2 oracle = euler(start, v, w, 0.7);
    CHECK((exact.position - oracle.position).norm() < 1e-9);
    CHECK(std::abs(wrap_angle(exact.heading - oracle.heading)) < 1e-9);
  }
  // A full turn comes back to the start.
  const Pose2 loop = integrate_unicycle(start, 0.5, 1.0, 2 * std::numbers::pi);
  CHECK((loop.position - start.position).norm() < 1e-12);
}

TEST_CASE("speed tracking respects acceleration limits") {
  RobotProfile p;
  CHECK(track_speed(p, 0.0, 0.5, 0.1) == doctest::Approx(0.1));
  CHECK(track_speed(p, 0.45, 0.5, 0.1) == doctest::Approx(0.5));
  CHECK(track_speed(p, 0.5, 0.0, 0.1) == doctest::Approx(0.0));
  CHECK(track_speed(p, 0.2, 0.9, 1.0) == doctest::Approx(p.max_speed));
  p.max_decel = 1.0;
  CHECK(track_speed(p, 0.5, 0.0, 0.1) == doctest::Approx(0.4));
  p.mass = 0.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
}

TEST_CASE("scripted agents walk their waypoints") {
  WaypointScript s{{{0, 0}, {3, 0}, {3, 4}}, 1.0, 1.0};
  auto a = scripted_state(s, 0.5);
  CHECK(a.position == Vec2(0, 0));
  CHECK(a.velocity.norm() == 0.0);
  a = scripted_state(s, 3.0);
  CHECK(a.position.x() == doctest::Approx(2.0));
  CHECK(a.velocity.x() == doctest::Approx(1.0));
  a = scripted_state(s, 6.0);
  CHECK(a.position.y() == doctest::Approx(2.0));
  CHECK(a.heading == doctest::Approx(std::numbers::pi / 2));
  a = scripted_state(s, 100.0);
  CHECK(a.position == Vec2(3, 4));
  CHECK(a.velocity.norm() == 0.0);

  // Ground truth agrees with a finite difference of the script.
  WorldState w;
  w.agents.push_back(Agent{ObstacleKind::Car, s, {}});
  const AgentTruth g = ground_truth(w, 0, 4.5);
  const Vec2 fd = (scripted_state(s, 4.5 + 1e-6).position - scripted_state(s, 4.5 - 1e-6).position) / 2e-6;
  CHECK((g.velocity - fd).norm() < 1e-6);
  CHECK(g.speed == doctest::Approx(1.0));
}

TEST_CASE("world stepping, raycasts and collision") {
  WorldState w;
  w.static_polygons.push_back(box_polygon({{4.0, -1.0}, {5.0, 1.0}}));
  w.agents.push_back(Agent{ObstacleKind::Pedestrian, {{{2.0, 3.0}, {2.0, -3.0}}, 1.0, 0.0}, {}});
  sync_agents(w);
  CHECK_NOTHROW(validate_world(w));
  const double r = 0.5 * default_profile(ObstacleKind::Pedestrian).length;

  CHECK(raycast(w, {0, 0}, {1, 0}, 10.0) == doctest::Approx(4.0));
  CHECK(raycast(w, {0, 0}, {-1, 0}, 10.0) == 10.0);
  w.command = {0.5, 0.0};
  for (int i = 0; i < 30; ++i) w = step(w, 0.1);
  CHECK(w.clock == doctest::Approx(3.0));
  CHECK(w.agents[0].state.position.y() == doctest::Approx(0.0));
  CHECK(raycast(w, {0, 0}, {1, 0}, 10.0) == doctest::Approx(2.0 - r));
  // The robot accelerated at 1 m/s^2 up to 0.5 m/s.
  CHECK(w.robot.pose.position.x() == doctest::Approx(0.1 * (0.1 + 0.2 + 0.3 + 0.4) + 26 * 0.05));
  CHECK(robot_in_collision(w));
  w.robot.pose.position = {0.0, 0.0};
  CHECK_FALSE(robot_in_collision(w));
  CHECK_THROWS_AS(step(w, 0.0), DomainError);

  w.agents[0].script.waypoints = {{4.5, 0.0}};
  CHECK_THROWS_AS(validate_world(w), DomainError);
  w.agents[0].kind = ObstacleKind::StaticCell;
  CHECK_THROWS_AS(validate_world(w), DomainError);
}

TEST_CASE("static occupancy marks cells whose centres lie inside") {
  WorldState w;
  w.static_polygons.push_back(box_polygon({{0.0, 0.0}, {0.45, 0.3}}));
  const LambdaGrid g(10, 10, 0.15, Vec2(-0.75, -0.75));
  const auto occ = static_occupancy(w, g);
  int n = 0;
  for (auto o : occ) n += o;
  CHECK(n == 6);
  CHECK(occ[static_cast<std::size_t>(g.index(5, 5))] == 1);
  CHECK(occ[static_cast<std::size_t>(g.index(4, 5))] == 0);
}

TEST_CASE("scenario parsing") {
  const Scenario s = parse(R"(
# comment
[run]
duration = 5   # trailing comment
seed = 9
[robot]
heading_deg = 90
[world]
box = 2 2 3 3
box = -3 -3 -2 -2
[agents]
agent = pedestrian 1.2 0.5 -4,4 4,4
)");
  CHECK(s.run.duration == 5.0);
  CHECK(s.run.seed == 9);
  CHECK(s.world.robot.pose.heading == doctest::Approx(std::numbers::pi / 2));
  CHECK(s.world.static_polygons.size() == 2);
  REQUIRE(s.world.agents.size() == 1);
  CHECK(s.world.agents[0].script.start_time == 0.5);

  CHECK(error_of("[run]\nduration = 5\nduration = 6\n").starts_with("t.scn:3:"));
  CHECK(error_of("\n[bogus]\n").starts_with("t.scn:2:"));
  CHECK(error_of("[run]\n\nspeed = 1\n").starts_with("t.scn:3:"));
  CHECK(error_of("duration = 1\n").starts_with("t.scn:1:"));
  CHECK(error_of("[run]\nduration = abc\n").starts_with("t.scn:2:"));
  CHECK(error_of("[run]\nduration\n").starts_with("t.scn:2:"));
  CHECK(error_of("[world]\npolygon = 0,0 1,0 1,1 0.9,0.1\n").starts_with("t.scn:2:"));
  CHECK(error_of("[agents]\nagent = static 1 0 0,0\n").starts_with("t.scn:2:"));
  // Validation failures name the source without a line.
  CHECK(error_of("[run]\nduration = -1\n").starts_with("t.scn: "));
  CHECK(error_of("[world]\nbox = -1 -1 1 1\n").find("collision") != std::string::npos);
  CHECK(error_of("[run]\nduration = 1\n").empty());
}

TEST_CASE("fixtures load") {
  for (const char* name : {"convergence_pedestrian", "convergence_car", "crossroad_crossing", "empty"}) {
    const Scenario s = load_scenario_file(std::string(DLF_FIXTURE_DIR) + "/" + name + ".scn");
    CHECK(s.name == name);
  }
  CHECK_THROWS_AS(load_scenario_file("/nonexistent.scn"), ScenarioError);
}

TEST_CASE("environment overrides") {
  CHECK(env_to_dotted_key("DLF_MAPPING_TAU") == "mapping.tau");
  CHECK(env_to_dotted_key("DLF_PLANNER_R_MAX") == "planner.r_max");
  CHECK(env_to_dotted_key("DLF_RUN_STOP_AT_GOAL") == "run.stop_at_goal");
  CHECK(env_to_dotted_key("DLF_TAU").empty());
  CHECK(env_to_dotted_key("HOME").empty());
  CHECK(env_to_dotted_key("DLF__X").empty());

  // Every key survives the round trip through its variable name.
  for (const auto& key : scenario_keys()) {
    std::string env = "DLF_";
    for (char c : key) env += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    CHECK(env_to_dotted_key(env) == key);
  }

  Scenario s = parse("[run]\nduration = 5\n");
  ::setenv("DLF_MAPPING_TAU", "3.5", 1);
  ::setenv("DLF_RUN_DURATION", "7", 1);
  const auto applied = apply_env_overrides(s);
  CHECK(s.mapping.tau == 3.5);
  CHECK(s.run.duration == 7.0);
  CHECK(applied.size() == 2);
  ::setenv("DLF_MAPPING_TAU", "-1", 1);
  CHECK_THROWS_AS(apply_env_overrides(s), ScenarioError);
  ::setenv("DLF_MAPPING_NOPE", "1", 1);
  CHECK_THROWS_AS(apply_env_overrides(s), ScenarioError);
  ::unsetenv("DLF_MAPPING_TAU");
  ::unsetenv("DLF_RUN_DURATION");
  ::unsetenv("DLF_MAPPING_NOPE");
}
