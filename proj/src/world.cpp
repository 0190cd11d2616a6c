#include "dlf/world.hpp"

#include <algorithm>
#include <cmath>

namespace dlf {

void RobotProfile::validate() const {
  if (!(mass > 0.0) || !(width > 0.0) || !(length > 0.0) || !(max_speed > 0.0) || !(max_accel > 0.0) ||
      !(max_decel > 0.0) || !(max_yaw_rate > 0.0))
    throw DomainError("robot profile values must be positive");
}

double track_speed(const RobotProfile& profile, double current, double target, double dt) {
  target = std::clamp(target, 0.0, profile.max_speed);
  return std::clamp(target, current - profile.max_decel * dt, current + profile.max_accel * dt);
}

Pose2 integrate_unicycle(const Pose2& pose, double v, double w, double dt) {
  // Chord form: length v dt sinc(w dt / 2) along the mean heading, stable as w -> 0.
  const double half = 0.5 * w * dt;
  const double sinc = std::abs(half) < 1e-6 ? 1.0 - half * half / 6.0 : std::sin(half) / half;
  Pose2 out = pose;
  out.position += v * dt * sinc * heading_vector(pose.heading + half);
  out.heading = pose.heading + w * dt;
  out.heading = wrap_angle(out.heading);
  return out;
}

Polygon robot_footprint(const RobotProfile& profile, const Pose2& pose) {
  return oriented_rectangle(pose.position, profile.length, profile.width, pose.heading);
}

AgentState scripted_state(const WaypointScript& script, double t) {
  AgentState s;
  const auto& wp = script.waypoints;
  if (wp.empty()) return s;
  s.position = wp.front();
  if (wp.size() >= 2) {
    const Vec2 d = wp[1] - wp[0];
    s.heading = std::atan2(d.y(), d.x());
  }
  if (wp.size() < 2 || !(script.speed > 0.0) || t <= script.start_time) return s;

  double remaining = script.speed * (t - script.start_time);
  for (std::size_t i = 0; i + 1 < wp.size(); ++i) {
    const Vec2 seg = wp[i + 1] - wp[i];
    const double len = seg.norm();
    if (len == 0.0) continue;
    const Vec2 dir = seg / len;
    s.heading = std::atan2(dir.y(), dir.x());
    if (remaining < len) {
      s.position = wp[i] + remaining * dir;
      s.velocity = script.speed * dir;
      return s;
    }
    remaining -= len;
  }
  s.position = wp.back();
  s.velocity.setZero();
  return s;
}

Polygon agent_footprint(const Agent& agent) {
  const KindProfile& p = default_profile(agent.kind);
  if (p.shape == FootprintShape::Circle) return circle_polygon(agent.state.position, 0.5 * p.length, 32);
  return oriented_rectangle(agent.state.position, p.length, p.width, agent.state.heading);
}

void sync_agents(WorldState& world) {
  for (auto& a : world.agents) a.state = scripted_state(a.script, world.clock);
}

namespace {

bool agent_touches(const Agent& agent, const Polygon& convex) {
  const KindProfile& p = default_profile(agent.kind);
  if (p.shape == FootprintShape::Circle)
    return point_polygon_distance(agent.state.position, convex) <= 0.5 * p.length;
  return gjk_intersects(agent_footprint(agent), convex);
}

}  // namespace

void validate_world(const WorldState& world) {
  world.robot_profile.validate();
  for (const auto& poly : world.static_polygons) {
    if (poly.size() < 3) throw DomainError("static polygon needs at least 3 vertices");
    if (signed_area(convex_hull(poly)) <= 0.0) throw DomainError("static polygon is degenerate");
  }
  for (std::size_t i = 0; i < world.agents.size(); ++i) {
    const Agent& a = world.agents[i];
    if (a.kind == ObstacleKind::StaticCell) throw DomainError("agents must be dynamic kinds");
    if (a.script.waypoints.empty()) throw DomainError("agent " + std::to_string(i) + " has no waypoints");
    if (a.script.speed < 0.0) throw DomainError("agent speed must be >= 0");
    Agent placed = a;
    placed.state = scripted_state(a.script, 0.0);
    for (const auto& poly : world.static_polygons) {
      if (agent_touches(placed, convex_hull(poly)))
        throw DomainError("agent " + std::to_string(i) + " overlaps static geometry at t = 0");
    }
  }
}

WorldState step(WorldState world, double dt) {
  if (!(dt > 0.0)) throw DomainError("step: dt must be > 0");
  const RobotProfile& rp = world.robot_profile;
  const double v = track_speed(rp, world.robot.speed, world.command.v, dt);
  const double w = std::clamp(world.command.w, -rp.max_yaw_rate, rp.max_yaw_rate);
  world.robot.pose = integrate_unicycle(world.robot.pose, v, w, dt);
  world.robot.speed = v;
  world.clock += dt;
  sync_agents(world);
  return world;
}

double raycast(const WorldState& world, const Vec2& origin, const Vec2& direction, double max_range) {
  double best = max_range;
  for (const auto& poly : world.static_polygons) {
    if (auto t = ray_polygon(origin, direction, poly, best)) best = std::min(best, *t);
  }
  for (const auto& a : world.agents) {
    const KindProfile& p = default_profile(a.kind);
    std::optional<double> t;
    if (p.shape == FootprintShape::Circle) {
      t = ray_circle(origin, direction, a.state.position, 0.5 * p.length, best);
    } else {
      t = ray_polygon(origin, direction, agent_footprint(a), best);
    }
    if (t) best = std::min(best, *t);
  }
  return best;
}

bool robot_in_collision(const WorldState& world) {
  const Polygon robot = robot_footprint(world.robot_profile, world.robot.pose);
  for (const auto& poly : world.static_polygons) {
    if (gjk_intersects(convex_hull(poly), robot)) return true;
  }
  for (const auto& a : world.agents) {
    if (agent_touches(a, robot)) return true;
  }
  return false;
}

AgentTruth ground_truth(const WorldState& world, std::size_t agent, double t) {
  const Agent& a = world.agents.at(agent);
  const AgentState s = scripted_state(a.script, t);
  return {a.kind, s.position, s.velocity, s.velocity.norm(), s.heading};
}

AgentTruth ground_truth(const WorldState& world, std::size_t agent) {
  return ground_truth(world, agent, world.clock);
}

std::vector<std::uint8_t> static_occupancy(const WorldState& world, const LambdaGrid& geometry) {
  std::vector<std::uint8_t> occ(static_cast<std::size_t>(geometry.size()), 0);
  for (const auto& poly : world.static_polygons) {
    const Polygon hull = convex_hull(poly);
    const Box2 bb = bounding_box(hull);
    for (CellIndex c = 0; c < geometry.size(); ++c) {
      const Vec2 center = geometry.cell_center(c);
      if (bb.contains(center) && contains_convex(hull, center)) occ[static_cast<std::size_t>(c)] = 1;
    }
  }
  return occ;
}

}  // namespace dlf
