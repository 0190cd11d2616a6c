#pragma once

#include "dlf/geometry.hpp"

namespace dlf {

/// Translational / rotational velocity command.
struct Command {
  double v = 0.0;  // m/s
  double w = 0.0;  // rad/s
  friend bool operator==(const Command&, const Command&) = default;
};

struct RobotProfile {
  double mass = 150.0;   // kg
  double width = 0.6;    // m
  double length = 0.8;   // m
  double max_speed = 0.5;
  double max_accel = 1.0;   // m/s^2
  double max_decel = 10.0;  // m/s^2; high enough to stop within one cycle
  double max_yaw_rate = 0.8;

  void validate() const;
};

struct RobotState {
  Pose2 pose;
  double speed = 0.0;
};

/// Speed reached after one step of `dt` towards `target` under the profile's limits.
double track_speed(const RobotProfile& profile, double current, double target, double dt);

/// Exact unicycle motion at constant (v, w) for `dt`.
Pose2 integrate_unicycle(const Pose2& pose, double v, double w, double dt);

Polygon robot_footprint(const RobotProfile& profile, const Pose2& pose);

}  // namespace dlf
