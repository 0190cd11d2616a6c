#include "dlf/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

extern char** environ;

namespace dlf {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_double(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v))
    throw ScenarioError("expected a number, got '" + std::string(s) + "'");
  return v;
}

long long parse_int(std::string_view s) {
  s = trim(s);
  long long v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size())
    throw ScenarioError("expected an integer, got '" + std::string(s) + "'");
  return v;
}

bool parse_bool(std::string_view s) {
  s = trim(s);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ScenarioError("expected a boolean, got '" + std::string(s) + "'");
}

Vec2 parse_point(std::string_view s) {
  const auto comma = s.find(',');
  if (comma == std::string_view::npos) throw ScenarioError("expected x,y, got '" + std::string(s) + "'");
  return {parse_double(s.substr(0, comma)), parse_double(s.substr(comma + 1))};
}

using Setter = std::function<void(Scenario&, std::string_view)>;

struct KeyTable {
  std::map<std::string, Setter, std::less<>> scalar;
  std::map<std::string, Setter, std::less<>> list;
};

const KeyTable& keys() {
  static const KeyTable table = [] {
    KeyTable t;
    auto num = [&t](const std::string& key, auto member) {
      t.scalar[key] = [member](Scenario& s, std::string_view v) { member(s) = parse_double(v); };
    };
    auto integer = [&t](const std::string& key, auto member) {
      t.scalar[key] = [member](Scenario& s, std::string_view v) {
        member(s) = static_cast<std::remove_reference_t<decltype(member(s))>>(parse_int(v));
      };
    };
    auto boolean = [&t](const std::string& key, auto member) {
      t.scalar[key] = [member](Scenario& s, std::string_view v) { member(s) = parse_bool(v); };
    };

    t.scalar["run.name"] = [](Scenario& s, std::string_view v) { s.name = std::string(trim(v)); };
    num("run.duration", [](Scenario& s) -> double& { return s.run.duration; });
    t.scalar["run.seed"] = [](Scenario& s, std::string_view v) {
      const long long x = parse_int(v);
      if (x < 0) throw ScenarioError("seed must be >= 0");
      s.run.seed = static_cast<std::uint64_t>(x);
    };
    boolean("run.planner", [](Scenario& s) -> bool& { return s.run.planner; });
    boolean("run.stop_at_goal", [](Scenario& s) -> bool& { return s.run.stop_at_goal; });
    num("run.goal_tolerance", [](Scenario& s) -> double& { return s.run.goal_tolerance; });
    integer("run.snapshot_every", [](Scenario& s) -> int& { return s.run.snapshot_every; });
    num("run.track_margin", [](Scenario& s) -> double& { return s.run.track_margin; });

    num("robot.x", [](Scenario& s) -> double& { return s.world.robot.pose.position.x(); });
    num("robot.y", [](Scenario& s) -> double& { return s.world.robot.pose.position.y(); });
    t.scalar["robot.heading_deg"] = [](Scenario& s, std::string_view v) {
      s.world.robot.pose.heading = parse_double(v) * std::numbers::pi / 180.0;
    };
    num("robot.speed", [](Scenario& s) -> double& { return s.world.robot.speed; });
    num("robot.mass", [](Scenario& s) -> double& { return s.world.robot_profile.mass; });
    num("robot.width", [](Scenario& s) -> double& { return s.world.robot_profile.width; });
    num("robot.length", [](Scenario& s) -> double& { return s.world.robot_profile.length; });
    num("robot.max_speed", [](Scenario& s) -> double& { return s.world.robot_profile.max_speed; });
    num("robot.max_accel", [](Scenario& s) -> double& { return s.world.robot_profile.max_accel; });
    num("robot.max_decel", [](Scenario& s) -> double& { return s.world.robot_profile.max_decel; });
    num("robot.max_yaw_rate", [](Scenario& s) -> double& { return s.world.robot_profile.max_yaw_rate; });

    integer("sensor.beam_count", [](Scenario& s) -> int& { return s.sensor.beam_count; });
    t.scalar["sensor.fov_deg"] = [](Scenario& s, std::string_view v) {
      s.sensor.fov = parse_double(v) * std::numbers::pi / 180.0;
    };
    num("sensor.max_range", [](Scenario& s) -> double& { return s.sensor.max_range; });
    num("sensor.error_area", [](Scenario& s) -> double& { return s.sensor.error_area; });
    num("sensor.range_noise", [](Scenario& s) -> double& { return s.sensor.range_noise; });

    num("mapping.tau", [](Scenario& s) -> double& { return s.mapping.tau; });
    num("mapping.gamma", [](Scenario& s) -> double& { return s.mapping.gamma; });
    num("mapping.dt", [](Scenario& s) -> double& { return s.mapping.dt; });
    t.scalar["mapping.population_size"] = [](Scenario& s, std::string_view v) {
      const long long x = parse_int(v);
      if (x < 0) throw ScenarioError("population_size must be >= 0");
      s.mapping.population_size = static_cast<std::size_t>(x);
    };
    num("mapping.velocity_noise", [](Scenario& s) -> double& { return s.mapping.resample_velocity_noise; });
    num("mapping.kind_switch_probability", [](Scenario& s) -> double& { return s.mapping.kind_switch_probability; });
    num("mapping.lambda_max", [](Scenario& s) -> double& { return s.mapping.lambda_max; });
    num("mapping.lambda_prior", [](Scenario& s) -> double& { return s.mapping.lambda_prior; });
    integer("mapping.grid_width", [](Scenario& s) -> int& { return s.grid.width; });
    integer("mapping.grid_height", [](Scenario& s) -> int& { return s.grid.height; });
    num("mapping.cell_size", [](Scenario& s) -> double& { return s.grid.cell_size; });

    num("planner.r_max", [](Scenario& s) -> double& { return s.planner.r_max; });
    integer("planner.v_samples", [](Scenario& s) -> int& { return s.planner.v_samples; });
    integer("planner.w_samples", [](Scenario& s) -> int& { return s.planner.w_samples; });
    num("planner.horizon", [](Scenario& s) -> double& { return s.planner.horizon; });
    num("planner.step", [](Scenario& s) -> double& { return s.planner.step; });
    num("planner.goal_x", [](Scenario& s) -> double& { return s.planner.goal.x(); });
    num("planner.goal_y", [](Scenario& s) -> double& { return s.planner.goal.y(); });
    num("planner.source_threshold", [](Scenario& s) -> double& { return s.planner.source_threshold; });

    t.list["world.box"] = [](Scenario& s, std::string_view v) {
      const auto f = split_ws(v);
      if (f.size() != 4) throw ScenarioError("box needs xmin ymin xmax ymax");
      const Box2 b{{parse_double(f[0]), parse_double(f[1])}, {parse_double(f[2]), parse_double(f[3])}};
      if (!(b.max.x() > b.min.x()) || !(b.max.y() > b.min.y())) throw ScenarioError("box has no area");
      s.world.static_polygons.push_back(box_polygon(b));
    };
    t.list["world.polygon"] = [](Scenario& s, std::string_view v) {
      Polygon p;
      for (auto tok : split_ws(v)) p.push_back(parse_point(tok));
      if (p.size() < 3) throw ScenarioError("polygon needs at least 3 points");
      const Polygon hull = convex_hull(p);
      if (hull.size() != p.size()) throw ScenarioError("polygon must be convex without repeated points");
      s.world.static_polygons.push_back(hull);
    };
    t.list["agents.agent"] = [](Scenario& s, std::string_view v) {
      const auto f = split_ws(v);
      if (f.size() < 4) throw ScenarioError("agent needs: kind speed start_time x,y [x,y ...]");
      Agent a;
      try {
        a.kind = parse_kind(f[0]);
      } catch (const std::exception& e) {
        throw ScenarioError(e.what());
      }
      if (a.kind == ObstacleKind::StaticCell) throw ScenarioError("agents must be pedestrian or car");
      a.script.speed = parse_double(f[1]);
      a.script.start_time = parse_double(f[2]);
      for (std::size_t i = 3; i < f.size(); ++i) a.script.waypoints.push_back(parse_point(f[i]));
      a.state = scripted_state(a.script, s.world.clock);
      s.world.agents.push_back(a);
    };
    return t;
  }();
  return table;
}

const std::set<std::string, std::less<>>& sections() {
  static const std::set<std::string, std::less<>> s = {"world", "agents", "robot", "sensor", "mapping", "planner", "run"};
  return s;
}

}  // namespace

void Scenario::validate() const {
  world.robot_profile.validate();
  sensor.validate();
  mapping.validate();
  planner.validate();
  if (grid.width <= 0 || grid.height <= 0) throw DomainError("mapping: grid dimensions must be > 0");
  if (!(grid.cell_size > 0.0)) throw DomainError("mapping: cell_size must be > 0");
  if (!(run.duration > 0.0)) throw DomainError("run: duration must be > 0");
  if (!(run.goal_tolerance > 0.0)) throw DomainError("run: goal_tolerance must be > 0");
  if (run.snapshot_every < 0) throw DomainError("run: snapshot_every must be >= 0");
  if (!(run.track_margin >= 0.0)) throw DomainError("run: track_margin must be >= 0");
  if (!(world.robot.speed >= 0.0) || world.robot.speed > world.robot_profile.max_speed)
    throw DomainError("robot: initial speed must lie in [0, max_speed]");
  validate_world(world);
  if (robot_in_collision(world)) throw DomainError("robot starts in collision");
}

void apply_setting(Scenario& scenario, std::string_view dotted_key, std::string_view value) {
  const KeyTable& t = keys();
  if (auto it = t.scalar.find(dotted_key); it != t.scalar.end()) {
    it->second(scenario, value);
    return;
  }
  if (auto it = t.list.find(dotted_key); it != t.list.end()) {
    it->second(scenario, value);
    return;
  }
  throw ScenarioError("unknown key '" + std::string(dotted_key) + "'");
}

Scenario load_scenario(std::istream& is, const std::string& source) {
  Scenario s;
  std::string section;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) { throw ScenarioError(source + ":" + std::to_string(lineno) + ": " + msg); };

  while (std::getline(is, line)) {
    ++lineno;
    std::string_view v = line;
    if (const auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
    v = trim(v);
    if (v.empty()) continue;
    if (v.front() == '[') {
      if (v.back() != ']') fail("unterminated section header");
      section = std::string(trim(v.substr(1, v.size() - 2)));
      if (!sections().count(section)) fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = v.find('=');
    if (eq == std::string_view::npos) fail("expected key = value");
    if (section.empty()) fail("key outside of a section");
    const std::string key = section + "." + std::string(trim(v.substr(0, eq)));
    const std::string_view value = trim(v.substr(eq + 1));
    if (keys().scalar.count(key) && !seen.insert(key).second) fail("duplicate key '" + key + "'");
    try {
      apply_setting(s, key, value);
    } catch (const std::exception& e) {
      fail(e.what());
    }
  }
  sync_agents(s.world);
  try {
    s.validate();
  } catch (const std::exception& e) {
    throw ScenarioError(source + ": " + e.what());
  }
  return s;
}

Scenario load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path.string() + ": cannot open");
  Scenario s = load_scenario(in, path.string());
  if (s.name.empty()) s.name = path.stem().string();
  return s;
}

std::string env_to_dotted_key(std::string_view name) {
  constexpr std::string_view prefix = "DLF_";
  if (name.substr(0, prefix.size()) != prefix) return {};
  std::string rest(name.substr(prefix.size()));
  const auto us = rest.find('_');
  if (us == std::string::npos || us == 0 || us + 1 == rest.size()) return {};
  for (char& c : rest) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  rest[us] = '.';
  return rest;
}

std::vector<std::string> apply_env_overrides(Scenario& scenario) {
  std::vector<std::pair<std::string, std::string>> found;
  for (char** e = environ; e && *e; ++e) {
    const std::string_view kv = *e;
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos) continue;
    const std::string key = env_to_dotted_key(kv.substr(0, eq));
    if (!key.empty()) found.emplace_back(key, std::string(kv.substr(eq + 1)));
  }
  std::sort(found.begin(), found.end());
  std::vector<std::string> applied;
  for (const auto& [key, value] : found) {
    try {
      apply_setting(scenario, key, value);
    } catch (const std::exception& e) {
      throw ScenarioError("environment override " + key + ": " + e.what());
    }
    applied.push_back(key);
  }
  sync_agents(scenario.world);
  try {
    scenario.validate();
  } catch (const std::exception& e) {
    throw ScenarioError(std::string("after environment overrides: ") + e.what());
  }
  return applied;
}

std::vector<std::string> scenario_keys() {
  std::vector<std::string> out;
  for (const auto& [k, _] : keys().scalar) out.push_back(k);
  for (const auto& [k, _] : keys().list) out.push_back(k);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace dlf
