#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "dlf/geometry.hpp"
#include "dlf/lambda_core.hpp"
#include "dlf/robot.hpp"
#include "dlf/types.hpp"

namespace dlf {

struct PlannerConfig {
  double r_max = 1.0;  // J
  int v_samples = 11;
  int w_samples = 21;
  double horizon = 3.0;  // s
  double step = 0.1;     // s
  Vec2 goal = Vec2::Zero();
  double source_threshold = 0.05;  // 1/m^2 of dynamic intensity for a cell to be propagated

  void validate() const;
};

/// One obstacle that may occupy a path cell while the robot crosses it.
struct IncomingObstacle {
  ObstacleKind kind = ObstacleKind::StaticCell;
  double lambda = 0.0;  // 1/m^2, already discounted by the probability of reaching the cell
  Vec2 origin = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  double mass = 0.0;  // kg, infinite for the static environment
  double t_arrive = 0.0;
  double t_depart = 0.0;
};

/// What the risk function sees of the robot at a collision.
struct CollisionContext {
  double area = 0.0;  // traversed area before the cell
  double time = 0.0;
  Vec2 position = Vec2::Zero();  // centre of the path cell
  Vec2 robot_velocity = Vec2::Zero();
  double robot_heading = 0.0;
  double robot_mass = 0.0;
};

using RiskFunction = std::function<double(const CollisionContext&, const IncomingObstacle&)>;

/// Largest kinetic-energy change of either body in a perfectly inelastic 1D collision.
/// An infinite obstacle mass stands for the static environment.
double kinetic_energy_risk(double v_robot, double m_robot, double v_obstacle, double m_obstacle);

/// Velocities projected on the axis from the obstacle origin to the cell; along the robot
/// heading for static obstacles or obstacles already in the cell.
double kinetic_energy_risk(const CollisionContext& ctx, const IncomingObstacle& obstacle);

/// The projected kinetic-energy risk as a RiskFunction.
RiskFunction kinetic_energy_risk_fn();

/// (lambda_k / E) (1 - exp(-da E)); 0 when E = 0.
double per_obstacle_collision_probability(double lambda_k, double expected, double area);

/// Obstacles of one path cell; the expected intensity is the sum of their intensities.
struct CellHazard {
  std::vector<IncomingObstacle> obstacles;
  double expected_lambda() const {
    double e = 0.0;
    for (const auto& o : obstacles) e += o.lambda;
    return e;
  }
};

struct RiskReport {
  double expected_risk = 0.0;          // J
  double collision_probability = 0.0;
  bool feasible = true;
  std::vector<double> cell_terms;               // K_i
  std::vector<std::vector<double>> shares;      // K_i * lambda_k / E per obstacle
};

/// Expected risk along a path whose cells are ordered by time.
RiskReport path_risk_expectation(const PathPlan& path, std::span<const CellHazard> hazards,
                                 std::span<const CollisionContext> contexts, const RiskFunction& risk,
                                 double r_max = std::numeric_limits<double>::infinity());

/// Region an obstacle starting in the cell at `center` can reach within `horizon` under
/// the 2-sigma speed and heading box: a fan hull, or a disc when kappa < kKappaMin.
Polygon swept_set(const Vec2& center, double cell_size, const CellVelocityDistribution& dist, double horizon);

/// Robot motion under one command over the horizon.
struct Rollout {
  Command command;
  std::vector<Pose2> poses;     // step 0 .. N
  std::vector<double> speeds;   // speed during step k
  PathPlan path;                // newly covered cells with entry times
  std::vector<double> exit_times;
  std::vector<CollisionContext> contexts;
  double goal_distance = 0.0;
};

Rollout rollout(const LambdaGrid& grid, const RobotProfile& profile, const RobotState& state, const Command& cmd,
                const PlannerConfig& config);

/// Swept sets of the dynamic cells of a snapshot and their intersection with path cells.
class HazardModel {
 public:
  HazardModel(const LambdaGrid& snapshot, const PlannerConfig& config);

  /// Obstacles of one robot cell occupied during [t_in, t_out].
  CellHazard hazard(CellIndex cell, double t_in, double t_out);
  std::vector<CellHazard> hazards(const Rollout& r);

  std::size_t source_count() const { return sources_.size(); }

 private:
  struct Node {
    double t_in, t_out, weight;
  };
  struct Source {
    CellIndex cell;
    Vec2 center;
    CellVelocityDistribution dist;
    Polygon swept;
    Box2 box;
    double v_lo, v_hi;
    std::vector<double> speeds, headings, weights;
  };
  struct Reach {
    std::size_t source;
    double t_arrive, t_depart;
    std::vector<Node> nodes;
  };
  const std::vector<Reach>& reach(CellIndex cell);

  const LambdaGrid& snapshot_;
  PlannerConfig config_;
  std::vector<Source> sources_;
  std::unordered_map<CellIndex, std::vector<Reach>> cache_;
};

struct CandidateResult {
  Command command;
  double risk = 0.0;
  double collision_probability = 0.0;
  double goal_distance = 0.0;
  bool feasible = true;
};

/// Closest-to-goal candidate with risk <= r_max; ties go to lower risk, then lower |w|.
/// Without a feasible candidate the least risky one is returned.
std::size_t select_command(std::span<const CandidateResult> candidates, double r_max);

struct PlanResult {
  Command command;
  std::size_t chosen = 0;
  std::vector<CandidateResult> candidates;
  std::size_t sources = 0;
};

std::vector<Command> sample_commands(const RobotProfile& profile, const PlannerConfig& config);

PlanResult plan(const LambdaGrid& snapshot, const RobotProfile& profile, const RobotState& state,
                const PlannerConfig& config, const RiskFunction& risk = kinetic_energy_risk_fn());

}  // namespace dlf
