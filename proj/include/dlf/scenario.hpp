#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dlf/particles.hpp"
#include "dlf/risk_planner.hpp"
#include "dlf/sensor.hpp"
#include "dlf/world.hpp"

namespace dlf {

struct GridConfig {
  int width = 200;
  int height = 200;
  double cell_size = 0.15;
};

struct RunConfig {
  double duration = 30.0;  // s
  std::uint64_t seed = 1;
  bool planner = true;       // false keeps the robot still
  bool stop_at_goal = true;
  double goal_tolerance = 0.3;  // m
  int snapshot_every = 0;       // cycles; 0 disables
  double track_margin = 0.3;    // m around an agent's footprint for its estimate
};

struct Scenario {
  std::string name;
  WorldState world;
  SensorModel sensor;
  MappingConfig mapping;
  GridConfig grid;
  PlannerConfig planner;
  RunConfig run;

  /// Throws DomainError on any invalid value.
  void validate() const;
};

/// Parse or validation failure; the message carries `source:line:` when known.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// INI-like text: `[section]` headers and `key = value` lines, `#` comments. Sections are
/// world, agents, robot, sensor, mapping, planner and run. Unknown sections or keys and
/// repeated scalar keys are errors.
Scenario load_scenario(std::istream& is, const std::string& source = "<scenario>");
Scenario load_scenario_file(const std::filesystem::path& path);

/// Sets one value by dotted key, e.g. `mapping.tau`. List keys (`world.box`,
/// `world.polygon`, `agents.agent`) append.
void apply_setting(Scenario& scenario, std::string_view dotted_key, std::string_view value);

/// Maps `DLF_SECTION_KEY` to `section.key` (lower-cased; the section ends at the first
/// underscore). Returns an empty string for other names.
std::string env_to_dotted_key(std::string_view env_name);

/// Applies every `DLF_*` variable of the process environment and revalidates. Returns the
/// keys applied.
std::vector<std::string> apply_env_overrides(Scenario& scenario);

/// Every accepted dotted key, for documentation and tests.
std::vector<std::string> scenario_keys();

}  // namespace dlf
