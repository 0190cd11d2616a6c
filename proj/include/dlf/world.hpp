#pragma once

#include <cstdint>
#include <vector>

#include "dlf/geometry.hpp"
#include "dlf/lambda_core.hpp"
#include "dlf/robot.hpp"
#include "dlf/types.hpp"

namespace dlf {

/// Piecewise-linear route walked at constant speed once `start_time` is reached. The agent
/// holds its last waypoint afterwards.
struct WaypointScript {
  std::vector<Vec2> waypoints;
  double speed = 0.0;
  double start_time = 0.0;
};

struct AgentState {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  double heading = 0.0;
};

struct Agent {
  ObstacleKind kind = ObstacleKind::Pedestrian;
  WaypointScript script;
  AgentState state;
};

struct WorldState {
  std::vector<Polygon> static_polygons;  // convex, counter-clockwise
  std::vector<Agent> agents;
  RobotProfile robot_profile;
  RobotState robot;
  Command command;
  double clock = 0.0;
};

/// Scripted kinematics of an agent at time `t`.
AgentState scripted_state(const WaypointScript& script, double t);

Polygon agent_footprint(const Agent& agent);

/// Places agents at their scripted poses for the current clock.
void sync_agents(WorldState& world);

/// Throws DomainError when an agent overlaps static geometry or the robot starts in collision.
void validate_world(const WorldState& world);

/// Advances agents along their scripts and the robot under `world.command`.
WorldState step(WorldState world, double dt);

/// Range to the nearest static or agent surface along a unit direction, capped at `max_range`.
double raycast(const WorldState& world, const Vec2& origin, const Vec2& direction, double max_range);

/// True when the robot footprint touches static geometry or an agent.
bool robot_in_collision(const WorldState& world);

struct AgentTruth {
  ObstacleKind kind = ObstacleKind::Pedestrian;
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  double speed = 0.0;
  double heading = 0.0;
};

AgentTruth ground_truth(const WorldState& world, std::size_t agent);
AgentTruth ground_truth(const WorldState& world, std::size_t agent, double t);

/// Static occupancy rasterized on a grid's geometry: 1 where the cell centre lies inside a
/// static polygon.
std::vector<std::uint8_t> static_occupancy(const WorldState& world, const LambdaGrid& geometry);

}  // namespace dlf
