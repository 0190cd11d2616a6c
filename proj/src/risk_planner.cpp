#include "dlf/risk_planner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_set>

#include "dlf/velocity_field.hpp"

namespace dlf {

void PlannerConfig::validate() const {
  if (!(r_max > 0.0)) throw DomainError("planner: r_max must be > 0");
  if (v_samples < 1 || w_samples < 1) throw DomainError("planner: sample counts must be >= 1");
  if (!(horizon > 0.0)) throw DomainError("planner: horizon must be > 0");
  if (!(step > 0.0) || step > horizon) throw DomainError("planner: step must lie in (0, horizon]");
  if (!(source_threshold >= 0.0)) throw DomainError("planner: source_threshold must be >= 0");
}

double kinetic_energy_risk(double v_r, double m_r, double v_k, double m_k) {
  if (!(m_r > 0.0) || !(m_k > 0.0)) throw DomainError("kinetic_energy_risk: masses must be > 0");
  if (std::isinf(m_k)) return 0.5 * m_r * (v_r - v_k) * (v_r - v_k);
  const double v_f = (m_r * v_r + m_k * v_k) / (m_r + m_k);
  return std::max(0.5 * m_r * (v_r - v_f) * (v_r - v_f), 0.5 * m_k * (v_k - v_f) * (v_k - v_f));
}

double kinetic_energy_risk(const CollisionContext& ctx, const IncomingObstacle& o) {
  Vec2 axis = heading_vector(ctx.robot_heading);
  const Vec2 d = ctx.position - o.origin;
  if (o.kind != ObstacleKind::StaticCell && d.norm() > 1e-9) axis = d.normalized();
  return kinetic_energy_risk(ctx.robot_velocity.dot(axis), ctx.robot_mass, o.velocity.dot(axis), o.mass);
}

RiskFunction kinetic_energy_risk_fn() {
  return [](const CollisionContext& ctx, const IncomingObstacle& o) { return kinetic_energy_risk(ctx, o); };
}

double per_obstacle_collision_probability(double lambda_k, double expected, double area) {
  if (!(lambda_k >= 0.0) || !(area >= 0.0)) throw DomainError("per_obstacle_collision_probability: negative input");
  if (lambda_k > expected) throw DomainError("per_obstacle_collision_probability: lambda_k exceeds E[lambda]");
  if (expected == 0.0) return 0.0;
  return lambda_k / expected * -std::expm1(-area * expected);
}

RiskReport path_risk_expectation(const PathPlan& path, std::span<const CellHazard> hazards,
                                 std::span<const CollisionContext> contexts, const RiskFunction& risk, double r_max) {
  if (hazards.size() != path.size() || contexts.size() != path.size())
    throw DomainError("path_risk_expectation: one hazard and one context per path cell");
  path.validate();
  RiskReport report;
  report.cell_terms.resize(path.size());
  report.shares.resize(path.size());
  const double da = path.area_step;
  double exposure = 0.0;
  for (std::size_t i = 0; i < path.size(); ++i) {
    const CellHazard& h = hazards[i];
    const double e = h.expected_lambda();
    const double k = std::exp(-exposure) * -std::expm1(-da * e);
    exposure += da * e;
    report.cell_terms[i] = k;
    auto& shares = report.shares[i];
    shares.resize(h.obstacles.size(), 0.0);
    if (!(e > 0.0)) continue;
    for (std::size_t j = 0; j < h.obstacles.size(); ++j) {
      shares[j] = k * (h.obstacles[j].lambda / e);
      if (shares[j] > 0.0) report.expected_risk += shares[j] * risk(contexts[i], h.obstacles[j]);
    }
  }
  report.collision_probability = -std::expm1(-exposure);
  report.feasible = report.expected_risk <= r_max;
  return report;
}

Polygon swept_set(const Vec2& center, double cs, const CellVelocityDistribution& dist, double horizon) {
  const double h = 0.5 * cs;
  const std::array<Vec2, 4> corners = {Vec2(-h, -h), Vec2(h, -h), Vec2(h, h), Vec2(-h, h)};
  const double reach = std::max(0.0, dist.mu_v + 2.0 * dist.sigma_v) * horizon;
  std::vector<Vec2> pts;
  for (const auto& c : corners) pts.push_back(center + c);
  if (reach <= 0.0) return convex_hull(pts);

  const auto sigma = von_mises_to_gaussian(dist.kappa_theta);
  if (!sigma) {
    for (const auto& v : circle_polygon(center, reach + std::sqrt(2.0) * h, 48, true)) pts.push_back(v);
    return convex_hull(pts);
  }
  const double span = std::min(2.0 * *sigma, std::numbers::pi);
  const double max_step = 5.0 * std::numbers::pi / 180.0;
  const int segments = std::max(1, static_cast<int>(std::ceil(2.0 * span / max_step)));
  const double step = 2.0 * span / segments;
  // Vertices pushed out so that the chords circumscribe the arc.
  const double r = reach / std::cos(0.5 * step);
  for (int i = 0; i <= segments; ++i) {
    const Vec2 tip = center + r * heading_vector(dist.mu_theta - span + i * step);
    for (const auto& c : corners) pts.push_back(tip + c);
  }
  return convex_hull(pts);
}

Rollout rollout(const LambdaGrid& grid, const RobotProfile& profile, const RobotState& state, const Command& cmd,
                const PlannerConfig& config) {
  Rollout out;
  out.command = cmd;
  const int n = std::max(1, static_cast<int>(std::lround(config.horizon / config.step)));
  const double dt = config.step;
  const double w = std::clamp(cmd.w, -profile.max_yaw_rate, profile.max_yaw_rate);
  out.poses.reserve(static_cast<std::size_t>(n) + 1);
  out.poses.push_back(state.pose);
  double speed = state.speed;
  for (int k = 0; k < n; ++k) {
    speed = track_speed(profile, speed, cmd.v, dt);
    out.speeds.push_back(speed);
    out.poses.push_back(integrate_unicycle(out.poses.back(), speed, w, dt));
  }
  out.goal_distance = (out.poses.back().position - config.goal).norm();

  out.path.area_step = grid.cell_area();
  out.path.robot_width = profile.width;
  const double cs = grid.cell_size();

  auto cells_in = [&](const Polygon& convex, auto&& visit) {
    const Box2 bb = bounding_box(convex);
    const int x0 = std::max(0, static_cast<int>(std::floor((bb.min.x() - grid.origin().x()) / cs)));
    const int y0 = std::max(0, static_cast<int>(std::floor((bb.min.y() - grid.origin().y()) / cs)));
    const int x1 = std::min(grid.width() - 1, static_cast<int>(std::floor((bb.max.x() - grid.origin().x()) / cs)));
    const int y1 = std::min(grid.height() - 1, static_cast<int>(std::floor((bb.max.y() - grid.origin().y()) / cs)));
    for (int iy = y0; iy <= y1; ++iy)
      for (int ix = x0; ix <= x1; ++ix) {
        const CellIndex c = grid.index(ix, iy);
        if (contains_convex(convex, grid.cell_center(c))) visit(c);
      }
  };

  std::unordered_set<CellIndex> claimed;
  cells_in(robot_footprint(profile, state.pose), [&](CellIndex c) { claimed.insert(c); });

  auto front_edge = [&](const Pose2& p) {
    const Vec2 h = heading_vector(p.heading);
    const Vec2 nrm(-h.y(), h.x());
    const Vec2 f = p.position + 0.5 * profile.length * h;
    return std::pair<Vec2, Vec2>{f - 0.5 * profile.width * nrm, f + 0.5 * profile.width * nrm};
  };

  std::vector<std::pair<double, CellIndex>> fresh;
  std::vector<int> entry_step;
  for (int k = 0; k < n; ++k) {
    const auto [a0, a1] = front_edge(out.poses[static_cast<std::size_t>(k)]);
    const auto [b0, b1] = front_edge(out.poses[static_cast<std::size_t>(k) + 1]);
    const Polygon quad = convex_hull({a0, a1, b0, b1});
    if (quad.size() < 3 || signed_area(quad) < 1e-12) continue;
    const Vec2 h = heading_vector(out.poses[static_cast<std::size_t>(k)].heading);
    const Vec2 fa = 0.5 * (a0 + a1), fb = 0.5 * (b0 + b1);
    const double advance = (fb - fa).dot(h);
    fresh.clear();
    cells_in(quad, [&](CellIndex c) {
      if (!claimed.insert(c).second) return;
      double frac = advance > 1e-12 ? (grid.cell_center(c) - fa).dot(h) / advance : 0.0;
      frac = std::clamp(frac, 0.0, 1.0);
      fresh.emplace_back((k + frac) * dt, c);
    });
    std::sort(fresh.begin(), fresh.end());
    for (const auto& [t, c] : fresh) {
      out.path.steps.push_back({c, t});
      entry_step.push_back(k);
    }
  }

  const double t_end = n * dt;
  out.exit_times.resize(out.path.size(), t_end);
  out.contexts.resize(out.path.size());
  for (std::size_t i = 0; i < out.path.size(); ++i) {
    const CellIndex c = out.path.steps[i].cell;
    const Vec2 center = grid.cell_center(c);
    const int k = entry_step[i];
    for (int j = k + 1; j <= n; ++j) {
      if (!contains_convex(robot_footprint(profile, out.poses[static_cast<std::size_t>(j)]), center)) {
        out.exit_times[i] = std::max(j * dt, out.path.steps[i].time);
        break;
      }
    }
    const Pose2& p = out.poses[static_cast<std::size_t>(k)];
    CollisionContext& ctx = out.contexts[i];
    ctx.area = out.path.abscissa(i) * out.path.robot_width;
    ctx.time = out.path.steps[i].time;
    ctx.position = center;
    ctx.robot_heading = p.heading;
    ctx.robot_velocity = out.speeds[static_cast<std::size_t>(k)] * heading_vector(p.heading);
    ctx.robot_mass = profile.mass;
  }
  return out;
}

HazardModel::HazardModel(const LambdaGrid& snapshot, const PlannerConfig& config)
    : snapshot_(snapshot), config_(config) {
  const double cs = snapshot.cell_size();
  for (CellIndex c = 0; c < snapshot.size(); ++c) {
    double dyn = 0.0;
    for (ObstacleKind k : kDynamicKinds) dyn += snapshot.kind_layer(k)[c];
    if (!(dyn >= config.source_threshold) || dyn == 0.0) continue;
    const auto& dist = snapshot.velocity(c);
    if (!dist) continue;
    Source s;
    s.cell = c;
    s.center = snapshot.cell_center(c);
    s.dist = *dist;
    s.swept = swept_set(s.center, cs, *dist, config.horizon);
    s.box = bounding_box(s.swept);
    s.v_lo = std::max(0.0, dist->mu_v - 2.0 * dist->sigma_v);
    s.v_hi = std::max(0.0, dist->mu_v + 2.0 * dist->sigma_v);

    // Quadrature over the 2-sigma box, Gaussian-weighted.
    const double zs[5] = {-2.0, -1.0, 0.0, 1.0, 2.0};
    std::vector<std::pair<double, double>> speed_nodes;
    for (double z : zs) speed_nodes.emplace_back(std::max(0.0, dist->mu_v + z * dist->sigma_v), std::exp(-0.5 * z * z));
    std::vector<std::pair<double, double>> heading_nodes;
    if (const auto sigma = von_mises_to_gaussian(dist->kappa_theta)) {
      for (int i = 0; i < 9; ++i) {
        const double z = -2.0 + 0.5 * i;
        heading_nodes.emplace_back(dist->mu_theta + z * *sigma, std::exp(-0.5 * z * z));
      }
    } else {
      for (int i = 0; i < 36; ++i) heading_nodes.emplace_back(-std::numbers::pi + i * std::numbers::pi / 18.0, 1.0);
    }
    double total = 0.0;
    for (const auto& [v, wv] : speed_nodes)
      for (const auto& [th, wt] : heading_nodes) {
        s.speeds.push_back(v);
        s.headings.push_back(th);
        s.weights.push_back(wv * wt);
        total += wv * wt;
      }
    for (double& w : s.weights) w /= total;
    sources_.push_back(std::move(s));
  }
}

const std::vector<HazardModel::Reach>& HazardModel::reach(CellIndex cell) {
  if (auto it = cache_.find(cell); it != cache_.end()) return it->second;
  std::vector<Reach> out;
  const double cs = snapshot_.cell_size();
  const double horizon = config_.horizon;
  const Box2 box = snapshot_.cell_box(cell);
  const Polygon poly = box_polygon(box);
  const Vec2 center = snapshot_.cell_center(cell);
  const Box2 grown{center - Vec2::Constant(cs), center + Vec2::Constant(cs)};
  const double margin = std::sqrt(2.0) * cs;
  constexpr double inf = std::numeric_limits<double>::infinity();

  for (std::size_t si = 0; si < sources_.size(); ++si) {
    const Source& s = sources_[si];
    if (!s.box.overlaps(box)) continue;
    if (gjk_distance(s.swept, poly) > 1e-12) continue;
    const double d = (center - s.center).norm();
    const double t_arrive = d <= margin ? 0.0 : (s.v_hi > 0.0 ? (d - margin) / s.v_hi : inf);
    const double t_depart = s.v_lo > 0.0 ? (d + margin) / s.v_lo : inf;
    if (t_arrive > horizon) continue;
    Reach r{si, t_arrive, t_depart, {}};
    for (std::size_t k = 0; k < s.speeds.size(); ++k) {
      const Vec2 vel = s.speeds[k] * heading_vector(s.headings[k]);
      if (s.speeds[k] == 0.0) {
        if (grown.contains(s.center)) r.nodes.push_back({0.0, horizon, s.weights[k]});
      } else if (auto iv = ray_box_interval(s.center, vel, grown, horizon)) {
        r.nodes.push_back({iv->first, iv->second, s.weights[k]});
      }
    }
    if (!r.nodes.empty()) out.push_back(std::move(r));
  }
  return cache_.emplace(cell, std::move(out)).first->second;
}

CellHazard HazardModel::hazard(CellIndex cell, double t_in, double t_out) {
  CellHazard h;
  const double ls = snapshot_.static_layer()[cell];
  const Vec2 center = snapshot_.cell_center(cell);
  if (ls > 0.0) {
    h.obstacles.push_back({ObstacleKind::StaticCell, ls, center, Vec2::Zero(),
                           std::numeric_limits<double>::infinity(), 0.0, config_.horizon});
  }
  for (const Reach& r : reach(cell)) {
    if (r.t_arrive > t_out || r.t_depart < t_in) continue;
    double mass = 0.0;
    for (const Node& n : r.nodes)
      if (n.t_in <= t_out && n.t_out >= t_in) mass += n.weight;
    if (!(mass > 0.0)) continue;
    const Source& s = sources_[r.source];
    const Vec2 vel = s.dist.mu_v * heading_vector(s.dist.mu_theta);
    for (ObstacleKind kind : kDynamicKinds) {
      const double l = snapshot_.kind_layer(kind)[s.cell];
      if (l > 0.0)
        h.obstacles.push_back({kind, l * mass, s.center, vel, default_profile(kind).mass, r.t_arrive, r.t_depart});
    }
  }
  return h;
}

std::vector<CellHazard> HazardModel::hazards(const Rollout& r) {
  std::vector<CellHazard> out;
  out.reserve(r.path.size());
  for (std::size_t i = 0; i < r.path.size(); ++i)
    out.push_back(hazard(r.path.steps[i].cell, r.path.steps[i].time, r.exit_times[i]));
  return out;
}

std::size_t select_command(std::span<const CandidateResult> c, double r_max) {
  if (c.empty()) throw DomainError("select_command: no candidates");
  std::optional<std::size_t> best;
  auto better_feasible = [&](std::size_t a, std::size_t b) {
    if (c[a].goal_distance != c[b].goal_distance) return c[a].goal_distance < c[b].goal_distance;
    if (c[a].risk != c[b].risk) return c[a].risk < c[b].risk;
    return std::abs(c[a].command.w) < std::abs(c[b].command.w);
  };
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c[i].risk <= r_max && (!best || better_feasible(i, *best))) best = i;
  if (best) return *best;
  std::size_t arg = 0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (c[i].risk < c[arg].risk || (c[i].risk == c[arg].risk && better_feasible(i, arg))) arg = i;
  }
  return arg;
}

std::vector<Command> sample_commands(const RobotProfile& profile, const PlannerConfig& config) {
  std::vector<Command> out;
  for (int i = 0; i < config.v_samples; ++i) {
    const double v = config.v_samples > 1 ? profile.max_speed * i / (config.v_samples - 1) : 0.0;
    for (int j = 0; j < config.w_samples; ++j) {
      const double w = config.w_samples > 1
                           ? profile.max_yaw_rate * (2.0 * j / (config.w_samples - 1) - 1.0)
                           : 0.0;
      out.push_back({v, w});
    }
  }
  return out;
}

PlanResult plan(const LambdaGrid& snapshot, const RobotProfile& profile, const RobotState& state,
                const PlannerConfig& config, const RiskFunction& risk) {
  PlanResult out;
  HazardModel model(snapshot, config);
  out.sources = model.source_count();
  for (const Command& cmd : sample_commands(profile, config)) {
    const Rollout r = rollout(snapshot, profile, state, cmd, config);
    const auto hz = model.hazards(r);
    const RiskReport rep = path_risk_expectation(r.path, hz, r.contexts, risk, config.r_max);
    out.candidates.push_back({cmd, rep.expected_risk, rep.collision_probability, r.goal_distance, rep.feasible});
  }
  out.chosen = select_command(out.candidates, config.r_max);
  out.command = out.candidates[out.chosen].command;
  return out;
}

}  // namespace dlf
