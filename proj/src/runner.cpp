#include "dlf/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>

namespace dlf {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string numbered(const char* stem, int cycle, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%06d.%s", stem, cycle, ext);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void emit_snapshot(const DynamicLambdaField& field, int cycle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto os = open_out(dir / numbered("snapshot", cycle, "txt"));
    write_snapshot(os, field.snapshot());
  }
  {
    auto os = open_out(dir / numbered("polar", cycle, "csv"));
    field.write_polar(os);
  }
  {
    auto os = open_out(dir / numbered("particles", cycle, "csv"));
    field.write_particles(os);
  }
}

RunMetrics run_scenario(const Scenario& scenario, const RunOptions& opt) {
  const Scenario& s = scenario;
  const std::uint64_t seed = opt.seed.value_or(s.run.seed);
  const int snapshot_every = opt.snapshot_every.value_or(s.run.snapshot_every);
  Rng rng(seed);

  WorldState world = s.world;
  world.clock = 0.0;
  sync_agents(world);
  DynamicLambdaField field(s.grid.width, s.grid.height, s.grid.cell_size, s.mapping, s.sensor.error_area,
                           world.robot.pose.position);

  std::ofstream risk_out, scan_out;
  if (opt.out_dir) {
    std::filesystem::create_directories(*opt.out_dir);
    if (opt.write_risk) {
      risk_out = open_out(*opt.out_dir / "risk.csv");
      risk_out << "cycle,v,w,risk,collision_probability,goal_distance,feasible,chosen\n" << std::setprecision(10);
    }
    if (opt.write_scans) {
      scan_out = open_out(*opt.out_dir / "scans.log");
      scan_out << "# timestamp x y heading max_range angle_min angle_increment n ranges...\n";
    }
  }

  RunMetrics m;
  const double dt = s.mapping.dt;
  const int cycles = static_cast<int>(std::llround(s.run.duration / dt));
  for (int cycle = 0; cycle < cycles; ++cycle) {
    StageTiming timing;
    CycleRecord rec;
    rec.cycle = cycle;
    rec.time = world.clock;
    rec.pose = world.robot.pose;
    rec.speed = world.robot.speed;
    rec.goal_distance = (world.robot.pose.position - s.planner.goal).norm();

    field.recenter(world.robot.pose.position);
    auto t0 = Clock::now();
    field.evolve(rng);
    timing.evolve = ms_since(t0);

    t0 = Clock::now();
    const LidarScan scan = cast_scan(world, world.robot.pose, s.sensor, world.clock, &rng);
    const ScanClassification cls = classify_cells(scan, field.static_field(), s.sensor);
    timing.sense = ms_since(t0);
    if (scan_out.is_open()) write_scan(scan_out, scan);

    t0 = Clock::now();
    field.update(cls);
    timing.update = ms_since(t0);

    if (opt.out_dir && snapshot_every > 0 && cycle % snapshot_every == 0)
      emit_snapshot(field, cycle, *opt.out_dir / "snapshots");

    for (std::size_t a = 0; a < world.agents.size(); ++a) {
      TrackRecord tr;
      tr.cycle = cycle;
      tr.time = world.clock;
      tr.agent = a;
      tr.truth = ground_truth(world, a);
      tr.estimate = field.estimate_region(agent_footprint(world.agents[a]), s.run.track_margin);
      m.tracks.push_back(tr);
    }

    const bool arrived = s.run.planner && rec.goal_distance <= s.run.goal_tolerance;
    if (s.run.planner && !arrived) {
      t0 = Clock::now();
      const PlanResult plan_result = plan(field.snapshot(), world.robot_profile, world.robot, s.planner);
      timing.plan = ms_since(t0);
      const CandidateResult& chosen = plan_result.candidates[plan_result.chosen];
      rec.command = chosen.command;
      rec.risk = chosen.risk;
      rec.collision_probability = chosen.collision_probability;
      rec.feasible = chosen.feasible;
      if (risk_out.is_open()) {
        for (std::size_t i = 0; i < plan_result.candidates.size(); ++i) {
          const auto& c = plan_result.candidates[i];
          risk_out << cycle << ',' << c.command.v << ',' << c.command.w << ',' << c.risk << ','
                   << c.collision_probability << ',' << c.goal_distance << ',' << int(c.feasible) << ','
                   << int(i == plan_result.chosen) << '\n';
        }
      }
    }

    t0 = Clock::now();
    field.resample(rng);
    timing.resample = ms_since(t0);
    rec.particles = field.particles().size();

    if (arrived) {
      m.goal_reached = true;
      m.goal_time = world.clock;
    }
    if (arrived && s.run.stop_at_goal) {
      m.cycles.push_back(rec);
      m.timing.push_back(timing);
      break;
    }

    world.command = rec.command;
    world = step(world, dt);
    if (robot_in_collision(world)) {
      rec.collision = true;
      m.collided = true;
    }
    m.cycles.push_back(rec);
    m.timing.push_back(timing);
    if (m.collided) break;
  }

  if (opt.out_dir) {
    auto metrics = open_out(*opt.out_dir / "metrics.csv");
    write_metrics_csv(metrics, m);
    auto tracks = open_out(*opt.out_dir / "tracks.csv");
    write_tracks_csv(tracks, m);
    auto timing = open_out(*opt.out_dir / "timing.csv");
    write_timing_csv(timing, m);
    auto summary = open_out(*opt.out_dir / "summary.txt");
    write_summary(summary, s, m);
  }
  return m;
}

void write_metrics_csv(std::ostream& os, const RunMetrics& m) {
  os << "cycle,time,x,y,heading,speed,cmd_v,cmd_w,risk,collision_probability,feasible,collision,goal_distance,"
        "particles\n";
  const auto old = os.precision(10);
  for (const auto& r : m.cycles) {
    os << r.cycle << ',' << r.time << ',' << r.pose.position.x() << ',' << r.pose.position.y() << ','
       << r.pose.heading << ',' << r.speed << ',' << r.command.v << ',' << r.command.w << ',' << r.risk << ','
       << r.collision_probability << ',' << int(r.feasible) << ',' << int(r.collision) << ',' << r.goal_distance
       << ',' << r.particles << '\n';
  }
  os.precision(old);
}

void write_tracks_csv(std::ostream& os, const RunMetrics& m) {
  os << "cycle,time,agent,kind,true_x,true_y,true_speed,true_heading,p_pedestrian,p_car,mu_v,sigma_v,mu_theta,"
        "kappa_theta,cells\n";
  const auto old = os.precision(10);
  for (const auto& t : m.tracks) {
    os << t.cycle << ',' << t.time << ',' << t.agent << ',' << to_string(t.truth.kind) << ',' << t.truth.position.x()
       << ',' << t.truth.position.y() << ',' << t.truth.speed << ',' << t.truth.heading << ','
       << t.estimate.kind_probability[0] << ',' << t.estimate.kind_probability[1] << ',';
    if (t.estimate.velocity) {
      const auto& v = *t.estimate.velocity;
      os << v.mu_v << ',' << v.sigma_v << ',' << v.mu_theta << ',' << v.kappa_theta;
    } else {
      os << ",,,";
    }
    os << ',' << t.estimate.cells << '\n';
  }
  os.precision(old);
}

void write_timing_csv(std::ostream& os, const RunMetrics& m) {
  os << "cycle,evolve_ms,sense_ms,update_ms,resample_ms,plan_ms,total_ms\n";
  const auto old = os.precision(6);
  for (std::size_t i = 0; i < m.timing.size(); ++i) {
    const auto& t = m.timing[i];
    os << m.cycles[i].cycle << ',' << t.evolve << ',' << t.sense << ',' << t.update << ',' << t.resample << ','
       << t.plan << ',' << t.total() << '\n';
  }
  os.precision(old);
}

void write_summary(std::ostream& os, const Scenario& s, const RunMetrics& m) {
  double max_risk = 0.0;
  int stopped = 0;
  for (const auto& r : m.cycles) {
    max_risk = std::max(max_risk, r.risk);
    if (s.run.planner && r.command.v == 0.0) ++stopped;
  }
  std::vector<double> mapping;
  for (const auto& t : m.timing) mapping.push_back(t.mapping());
  os << "scenario = " << s.name << '\n'
     << "cycles = " << m.cycles.size() << '\n'
     << "collision = " << (m.collided ? "true" : "false") << '\n'
     << "goal_reached = " << (m.goal_reached ? "true" : "false") << '\n'
     << "goal_time = " << m.goal_time << '\n'
     << "stopped_cycles = " << stopped << '\n'
     << "max_chosen_risk = " << max_risk << '\n'
     << "median_mapping_ms = " << median(mapping) << '\n';
}

DynamicLambdaField replay_scans(const Scenario& s, std::istream& log, std::uint64_t seed,
                                const std::optional<std::filesystem::path>& snapshot_dir) {
  Rng rng(seed);
  std::optional<DynamicLambdaField> field;
  int cycle = 0;
  while (auto scan = read_scan(log)) {
    if (!field) field.emplace(s.grid.width, s.grid.height, s.grid.cell_size, s.mapping, s.sensor.error_area,
                              scan->pose.position);
    field->recenter(scan->pose.position);
    field->evolve(rng);
    field->update(classify_cells(*scan, field->static_field(), s.sensor));
    if (snapshot_dir && s.run.snapshot_every > 0 && cycle % s.run.snapshot_every == 0)
      emit_snapshot(*field, cycle, *snapshot_dir);
    field->resample(rng);
    ++cycle;
  }
  if (!field) throw std::runtime_error("scan log holds no scans");
  return std::move(*field);
}

namespace {

Scenario bench_scene(std::size_t particles, std::uint64_t seed) {
  Scenario s;
  s.name = "bench";
  s.run.seed = seed;
  s.mapping.population_size = particles;
  s.planner.goal = Vec2(0.0, 12.0);
  s.world.robot.pose.heading = 1.5707963267948966;
  // A street crossing with four building blocks and traffic.
  s.world.static_polygons = {box_polygon({{-15.0, -15.0}, {-3.0, -3.0}}), box_polygon({{3.0, -15.0}, {15.0, -3.0}}),
                             box_polygon({{-15.0, 3.0}, {-3.0, 15.0}}), box_polygon({{3.0, 3.0}, {15.0, 15.0}})};
  auto add = [&](ObstacleKind k, double speed, Vec2 a, Vec2 b) {
    Agent ag;
    ag.kind = k;
    ag.script = {{a, b}, speed, 0.0};
    s.world.agents.push_back(ag);
  };
  add(ObstacleKind::Pedestrian, 1.5, {-2.5, -10.0}, {-2.5, 10.0});
  add(ObstacleKind::Pedestrian, 1.2, {2.5, 10.0}, {2.5, -10.0});
  add(ObstacleKind::Pedestrian, 1.0, {-10.0, 2.5}, {10.0, 2.5});
  add(ObstacleKind::Pedestrian, 1.4, {10.0, -2.5}, {-10.0, -2.5});
  add(ObstacleKind::Car, 3.0, {-14.0, 1.0}, {14.0, 1.0});
  add(ObstacleKind::Car, 2.5, {1.2, -14.0}, {1.2, 14.0});
  sync_agents(s.world);
  return s;
}

}  // namespace

BenchReport bench(std::size_t particles, int cycles, std::uint64_t seed, bool with_planner) {
  const Scenario s = bench_scene(particles, seed);
  Rng rng(seed);
  WorldState world = s.world;
  DynamicLambdaField field(200, 200, 0.15, s.mapping, s.sensor.error_area, world.robot.pose.position);
  std::vector<StageTiming> timings;
  constexpr int warmup = 5;
  for (int c = 0; c < warmup + cycles; ++c) {
    StageTiming t;
    auto t0 = Clock::now();
    field.evolve(rng);
    t.evolve = ms_since(t0);
    t0 = Clock::now();
    const LidarScan scan = cast_scan(world, world.robot.pose, s.sensor, world.clock);
    const auto cls = classify_cells(scan, field.static_field(), s.sensor);
    t.sense = ms_since(t0);
    t0 = Clock::now();
    field.update(cls);
    t.update = ms_since(t0);
    if (with_planner) {
      t0 = Clock::now();
      plan(field.snapshot(), world.robot_profile, world.robot, s.planner);
      t.plan = ms_since(t0);
    }
    t0 = Clock::now();
    field.resample(rng);
    t.resample = ms_since(t0);
    if (c >= warmup) timings.push_back(t);
    world = step(world, s.mapping.dt);
  }
  BenchReport r;
  r.particles = field.particles().size();
  r.pairs = field.pair_count();
  r.cycles = cycles;
  auto med = [&](auto get) {
    std::vector<double> v;
    for (const auto& t : timings) v.push_back(get(t));
    return median(v);
  };
  r.median.evolve = med([](const StageTiming& t) { return t.evolve; });
  r.median.sense = med([](const StageTiming& t) { return t.sense; });
  r.median.update = med([](const StageTiming& t) { return t.update; });
  r.median.resample = med([](const StageTiming& t) { return t.resample; });
  r.median.plan = med([](const StageTiming& t) { return t.plan; });
  r.median_mapping = med([](const StageTiming& t) { return t.mapping(); });
  r.median_total = med([](const StageTiming& t) { return t.total(); });
  return r;
}

void write_bench(std::ostream& os, const BenchReport& r) {
  os << std::fixed << std::setprecision(3) << "particles " << r.particles << "\npairs " << r.pairs << "\ncycles "
     << r.cycles << "\nevolve_ms " << r.median.evolve << "\nsense_ms " << r.median.sense << "\nupdate_ms "
     << r.median.update << "\nresample_ms " << r.median.resample << "\nmapping_cycle_ms " << r.median_mapping
     << "\nplan_ms " << r.median.plan << "\ntotal_ms " << r.median_total << '\n';
  os.unsetf(std::ios::fixed);
}

}  // namespace dlf
