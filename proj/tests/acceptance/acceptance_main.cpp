// Acceptance suite: one PASS/FAIL line per criterion. Long-running; not part of ctest.
#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "dlf/runner.hpp"
#include "dlf/velocity_field.hpp"

using namespace dlf;
namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass = false;
  std::string detail;
  bool report_only = false;
};

std::string fmt(double x, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << x;
  return os.str();
}

void parallel_for(int n, const std::function<void(int)>& body) {
  const int workers = std::max(1, std::min<int>(n, static_cast<int>(std::thread::hardware_concurrency())));
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) body(i);
    });
  for (auto& t : pool) t.join();
}

Scenario fixture(const std::string& name) { return load_scenario_file(std::string(DLF_FIXTURE_DIR) + "/" + name + ".scn"); }

// Runs seeds 1..n of a scenario without writing files.
std::vector<RunMetrics> seeded_runs(const Scenario& s, int n) {
  std::vector<RunMetrics> out(static_cast<std::size_t>(n));
  parallel_for(n, [&](int i) {
    RunOptions o;
    o.seed = static_cast<std::uint64_t>(i + 1);
    out[static_cast<std::size_t>(i)] = run_scenario(s, o);
  });
  return out;
}

const TrackRecord* track_at(const RunMetrics& m, double t, std::size_t agent = 0) {
  for (const auto& tr : m.tracks)
    if (tr.agent == agent && std::abs(tr.time - t) < 1e-6) return &tr;
  return nullptr;
}

// --- 1 ---------------------------------------------------------------------

Outcome tessellation() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int w = 8 + int(u(rng) * 32), h = 8 + int(u(rng) * 32);
    const double cs = 0.05 + 0.35 * u(rng);
    LambdaGrid g(w, h, cs, Vec2(10 * u(rng) - 5, 10 * u(rng) - 5));
    for (CellIndex c = 0; c < g.size(); ++c) {
      CellState s;
      if (u(rng) < 0.2) s.lambda_static = 1000.0 * u(rng);
      if (u(rng) < 0.4) s.lambda_by_kind = {200.0 * u(rng), u(rng) < 0.5 ? 50.0 * u(rng) : 0.0};
      if (s.total_dynamic() > 0) s.velocity = CellVelocityDistribution{1.0, 0.2, 0.0, 4.0};
      g.set_cell(c, s);
    }
    const LambdaGrid fine = refine_grid(g, 2);

    // Axis-aligned straight strip one cell wide, either direction.
    const bool along_x = u(rng) < 0.5;
    const int len = along_x ? w : h;
    int a = int(u(rng) * len), b = int(u(rng) * len);
    if (a == b) b = (a + 1) % len;
    const int fixed = int(u(rng) * (along_x ? h : w));
    const int dir = b > a ? 1 : -1;

    PathPlan pc, pf;
    pc.area_step = g.cell_area();
    pf.area_step = g.cell_area() / 4.0;
    pc.robot_width = pf.robot_width = cs;
    double t = 0.0;
    for (int i = a; i != b + dir; i += dir, t += 0.1) {
      const int ix = along_x ? i : fixed, iy = along_x ? fixed : i;
      pc.steps.push_back({g.index(ix, iy), t});
      for (int sub = 0; sub < 2; ++sub) {
        const int along = dir > 0 ? sub : 1 - sub;
        for (int across = 0; across < 2; ++across) {
          const int fx = along_x ? 2 * ix + along : 2 * ix + across;
          const int fy = along_x ? 2 * iy + across : 2 * iy + along;
          pf.steps.push_back({fine.index(fx, fy), t});
        }
      }
    }
    worst = std::max(worst, std::abs(path_collision_probability(pc, g) - path_collision_probability(pf, fine)));
  }
  return {worst < 1e-9, "max |P(da) - P(da/4)| = " + fmt(worst) + " over 100 fields"};
}

// --- 2 ---------------------------------------------------------------------

Outcome telescoping() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const RiskFunction unit = [](const CollisionContext&, const IncomingObstacle&) { return 1.0; };
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + std::size_t(u(rng) * 80);
    const double cs = 0.05 + 0.25 * u(rng);
    PathPlan p;
    p.area_step = cs * cs;
    p.robot_width = cs;
    std::vector<CellHazard> hz(n);
    std::vector<CollisionContext> ctx(n);
    Eigen::ArrayXd e(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      p.steps.push_back({CellIndex(i), 0.05 * double(i)});
      const int k = int(u(rng) * 5);
      for (int j = 0; j < k; ++j) {
        IncomingObstacle o;
        o.kind = j == 0 && u(rng) < 0.3 ? ObstacleKind::StaticCell : ObstacleKind::Pedestrian;
        o.lambda = (u(rng) < 0.1 ? 1000.0 : 60.0) * u(rng);
        o.mass = o.kind == ObstacleKind::StaticCell ? kInf : 80.0;
        hz[i].obstacles.push_back(o);
      }
      e[static_cast<Eigen::Index>(i)] = hz[i].expected_lambda();
    }
    const RiskReport r = path_risk_expectation(p, hz, ctx, unit);
    worst = std::max(worst, std::abs(r.expected_risk - path_collision_probability(e, p.area_step)));
  }
  return {worst < 1e-12, "max |E[r=1] - P_coll| = " + fmt(worst) + " over 1000 paths"};
}

// --- 3 ---------------------------------------------------------------------

Outcome decomposition() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 20000; ++trial) {
    const int n = 1 + trial % 8;
    const double area = std::pow(0.05 + 0.3 * u(rng), 2);
    std::vector<double> l(static_cast<std::size_t>(n));
    double e = 0.0;
    for (auto& x : l) e += (x = (u(rng) < 0.1 ? 1000.0 : 80.0) * u(rng));
    double sum = 0.0;
    for (double x : l) sum += per_obstacle_collision_probability(x, e, area);
    worst = std::max(worst, std::abs(sum - cell_collision_probability(e, area)));
  }
  return {worst < 1e-12, "max |sum of shares - P_cell| = " + fmt(worst) + " for 1..8 obstacles"};
}

// --- 4 ---------------------------------------------------------------------

Outcome monte_carlo() {
  const int n = 1000000;
  std::mt19937_64 rng(404);
  std::string detail;
  bool ok = true;

  // Path: each cell holds Poisson(lambda * da) obstacles; any obstacle on the path is a collision.
  Eigen::ArrayXd l(16);
  l << 0.5, 3, 0, 8, 1, 12, 0.2, 0, 4, 6, 2, 1, 20, 0, 7, 0.3;
  const double area = 0.0225;
  std::vector<std::poisson_distribution<int>> cells;
  for (double x : l) cells.emplace_back(std::max(x * area, 1e-300));
  int hits = 0;
  for (int t = 0; t < n; ++t) {
    bool hit = false;
    for (std::size_t i = 0; i < cells.size() && !hit; ++i) hit = l[Eigen::Index(i)] > 0 && cells[i](rng) > 0;
    hits += hit;
  }
  const double p = path_collision_probability(l, area);
  const double se_p = std::sqrt(p * (1 - p) / n);
  const double zp = (double(hits) / n - p) / se_p;
  ok = ok && std::abs(zp) < 3.0;
  detail += "path z = " + fmt(zp, 3);

  // Single cell: obstacles race with Exp(lambda_k) arrivals over the traversed area; the first
  // arrival inside the cell is the collision and costs its kinetic-energy risk.
  PathPlan cell;
  cell.area_step = 0.09;
  cell.robot_width = 0.3;
  cell.steps = {{0, 0.0}};
  CellHazard hz;
  auto add = [&](ObstacleKind k, double lambda, Vec2 v, double mass) {
    IncomingObstacle o;
    o.kind = k;
    o.lambda = lambda;
    o.origin = {1.0, -1.0};
    o.velocity = v;
    o.mass = mass;
    hz.obstacles.push_back(o);
  };
  add(ObstacleKind::StaticCell, 2.0, Vec2::Zero(), kInf);
  add(ObstacleKind::Pedestrian, 5.0, {0.0, 1.4}, 80.0);
  add(ObstacleKind::Car, 3.0, {-1.0, 1.0}, 500.0);
  add(ObstacleKind::Pedestrian, 1.0, {0.5, 0.5}, 80.0);
  CollisionContext ctx;
  ctx.position = {1.0, 0.0};
  ctx.robot_velocity = {0.5, 0.0};
  ctx.robot_mass = 150.0;
  const std::vector<CellHazard> hzs{hz};
  const std::vector<CollisionContext> ctxs{ctx};
  const double exact = path_risk_expectation(cell, hzs, ctxs, kinetic_energy_risk_fn()).expected_risk;
  std::vector<double> cost;
  std::vector<std::exponential_distribution<double>> arrive;
  for (const auto& o : hz.obstacles) {
    cost.push_back(kinetic_energy_risk(ctx, o));
    arrive.emplace_back(o.lambda);
  }
  double s1 = 0, s2 = 0;
  for (int t = 0; t < n; ++t) {
    double best = kInf;
    std::size_t who = 0;
    for (std::size_t k = 0; k < arrive.size(); ++k) {
      const double a = arrive[k](rng);
      if (a < best) best = a, who = k;
    }
    const double c = best < cell.area_step ? cost[who] : 0.0;
    s1 += c;
    s2 += c * c;
  }
  const double mean = s1 / n, se = std::sqrt((s2 / n - mean * mean) / n);
  const double zr = (mean - exact) / se;
  ok = ok && std::abs(zr) < 3.0;
  detail += ", cell risk z = " + fmt(zr, 3) + " (1e6 trials each)";
  return {ok, detail};
}

// --- 5 and 6 -----------------------------------------------------------------

struct ConvergenceRuns {
  std::vector<RunMetrics> ped, car;
  double seconds = 0.0;
};

double heading_error(const CellVelocityDistribution& d, double truth) { return wrap_angle(d.mu_theta - truth); }

Outcome velocity_convergence(const ConvergenceRuns& runs) {
  bool ok = runs.seconds < 300.0;
  std::string detail;
  for (const auto* set : {&runs.ped, &runs.car}) {
    const bool is_ped = set == &runs.ped;
    double sum_v = 0, sum_c = 0, sum_s = 0;
    int with = 0, per_run = 0;
    long band_v = 0, band_t = 0, total = 0;
    for (const RunMetrics& m : *set) {
      const TrackRecord* tr = track_at(m, 2.0);
      if (tr && tr->estimate.velocity) {
        const auto& d = *tr->estimate.velocity;
        const double dv = d.mu_v - tr->truth.speed, dt = heading_error(d, tr->truth.heading);
        sum_v += dv;
        sum_c += std::cos(dt);
        sum_s += std::sin(dt);
        ++with;
        per_run += std::abs(dv) <= 0.3 && std::abs(dt) <= 15.0 * std::numbers::pi / 180.0;
      }
      for (const auto& t : m.tracks) {
        if (t.agent != 0 || t.time <= 2.0 + 1e-9) continue;
        ++total;
        if (!t.estimate.velocity) continue;
        const auto& d = *t.estimate.velocity;
        band_v += std::abs(d.mu_v - t.truth.speed) <= 2.0 * d.sigma_v;
        const auto sigma = von_mises_to_gaussian(d.kappa_theta);
        band_t += !sigma || std::abs(heading_error(d, t.truth.heading)) <= 2.0 * *sigma;
      }
    }
    const double mean_dv = with ? sum_v / with : kInf;
    const double mean_dt = std::abs(std::atan2(sum_s, sum_c)) * 180.0 / std::numbers::pi;
    const double cov_v = total ? double(band_v) / total : 0.0, cov_t = total ? double(band_t) / total : 0.0;
    ok = ok && with == int(set->size()) && std::abs(mean_dv) <= 0.3 && mean_dt <= 15.0 && cov_v >= 0.95 &&
         cov_t >= 0.95;
    detail += std::string(is_ped ? "pedestrian" : "car") + ": mean dv " + fmt(mean_dv, 3) + " m/s, mean dtheta " +
              fmt(mean_dt, 3) + " deg, per-run " + std::to_string(per_run) + "/" + std::to_string(set->size()) +
              ", band speed " + fmt(100 * cov_v, 3) + "% heading " + fmt(100 * cov_t, 3) + "%; ";
  }
  detail += "runtime " + fmt(runs.seconds, 3) + " s";
  return {ok, detail};
}

Outcome class_convergence(const ConvergenceRuns& runs) {
  const int n = int(runs.ped.size());
  const int need = (9 * n + 9) / 10;
  int ped_ok = 0, car_ok = 0;
  std::vector<double> pcar;
  for (const auto& m : runs.ped) {
    const TrackRecord* tr = track_at(m, 2.0);
    ped_ok += tr && tr->estimate.kind_probability[0] > 0.8;
  }
  for (const auto& m : runs.car) {
    const TrackRecord* tr = track_at(m, 5.0);
    const double p = tr ? tr->estimate.kind_probability[1] : 0.0;
    pcar.push_back(p);
    car_ok += p >= 0.25 && p <= 0.75;
  }
  std::sort(pcar.begin(), pcar.end());
  const double median = pcar.empty() ? 0.0 : pcar[pcar.size() / 2];
  return {ped_ok >= need && car_ok >= need,
          "P(pedestrian) > 0.8 at 2 s in " + std::to_string(ped_ok) + "/" + std::to_string(n) +
              "; P(car) in [0.25, 0.75] at 5 s in " + std::to_string(car_ok) + "/" + std::to_string(runs.car.size()) +
              " (median " + fmt(median, 3) + ")"};
}

// --- 7 ---------------------------------------------------------------------

Outcome crossing(int n) {
  const Scenario s = fixture("crossroad_crossing");
  std::size_t ped = 0;
  for (std::size_t i = 0; i < s.world.agents.size(); ++i)
    if (s.world.agents[i].kind == ObstacleKind::Pedestrian) ped = i;
  const double corridor = 1.25;  // half the lane width around the robot's line
  const auto t0 = std::chrono::steady_clock::now();
  const auto runs = seeded_runs(s, n);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  int good = 0, collisions = 0, arrived = 0, stopped = 0;
  for (const auto& m : runs) {
    collisions += m.collided;
    arrived += m.goal_reached;
    std::vector<bool> in_corridor(m.cycles.size(), false);
    for (const auto& t : m.tracks) {
      if (t.agent != ped || t.cycle >= int(m.cycles.size())) continue;
      const Pose2& r = m.cycles[std::size_t(t.cycle)].pose;
      in_corridor[std::size_t(t.cycle)] =
          std::abs(t.truth.position.x() - r.position.x()) <= corridor && t.truth.position.y() > r.position.y();
    }
    // Contiguous stops of at least two cycles that overlap the crossing.
    bool stop_during = false;
    double stop_end = 0.0;
    for (std::size_t i = 0; i < m.cycles.size();) {
      if (m.cycles[i].command.v != 0.0) {
        ++i;
        continue;
      }
      std::size_t j = i;
      bool overlap = false;
      for (; j < m.cycles.size() && m.cycles[j].command.v == 0.0; ++j)
        if (in_corridor[j]) overlap = true;
      if (j - i >= 2 && overlap) {
        stop_during = true;
        stop_end = m.cycles[j - 1].time;
      }
      i = j;
    }
    stopped += stop_during;
    good += stop_during && !m.collided && m.goal_reached && m.goal_time > stop_end;
  }
  const int need = (9 * n + 9) / 10;
  return {good >= need, std::to_string(good) + "/" + std::to_string(n) + " seeds pass (stop while crossing " +
                            std::to_string(stopped) + ", collisions " + std::to_string(collisions) + ", goal " +
                            std::to_string(arrived) + "); runtime " + fmt(secs, 3) + " s"};
}

// --- 8 ---------------------------------------------------------------------

Outcome energy_units() {
  const double wall = kinetic_energy_risk(0.5, 150.0, 0.0, kInf);
  const double ped = kinetic_energy_risk(0.5, 150.0, 0.0, 80.0);
  // Perfectly inelastic collision: shared final velocity, largest kinetic-energy change of the two.
  const double vf = 150.0 * 0.5 / (150.0 + 80.0);
  const double ped_oracle = std::max(0.5 * 150.0 * (0.5 - vf) * (0.5 - vf), 0.5 * 80.0 * vf * vf);
  bool ok = std::abs(wall - 18.75) < 1e-6 && std::abs(ped - ped_oracle) < 1e-6 && std::abs(ped - 4.2533) < 1e-4;

  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checks = 0, same = 0;
  for (int trial = 0; trial < 5; ++trial) {
    LambdaGrid g(100, 100, 0.15, Vec2(-7.5, -7.5));
    for (CellIndex c = 0; c < g.size(); ++c) {
      if (u(rng) < 0.03) {
        g.set_kind(c, u(rng) < 0.7 ? ObstacleKind::Pedestrian : ObstacleKind::Car, 120.0 * u(rng));
        g.set_velocity(c, CellVelocityDistribution{1.5 * u(rng), 0.3 * u(rng), 6.28 * u(rng), 0.5 + 20 * u(rng)});
      } else if (u(rng) < 0.02) {
        g.set_static(c, 500.0 * u(rng));
      }
    }
    RobotProfile rp;
    RobotState st;
    st.speed = 0.5 * u(rng);
    PlannerConfig cfg;
    cfg.goal = {8.0 * u(rng) - 4.0, 5.0};
    cfg.r_max = 0.2 + 2.0 * u(rng);
    const std::size_t base = plan(g, rp, st, cfg).chosen;
    for (double k : {2.0, 0.25, 1024.0, 1e-3}) {
      PlannerConfig scaled = cfg;
      scaled.r_max = cfg.r_max * k;
      const RiskFunction f = [k](const CollisionContext& c, const IncomingObstacle& o) {
        return k * kinetic_energy_risk(c, o);
      };
      ++checks;
      same += plan(g, rp, st, scaled, f).chosen == base;
    }
  }
  ok = ok && same == checks;
  return {ok, "wall " + fmt(wall, 10) + " J, pedestrian " + fmt(ped, 10) + " J (oracle " + fmt(ped_oracle, 10) +
                  "), argmin unchanged in " + std::to_string(same) + "/" + std::to_string(checks) + " scalings"};
}

// --- 9 ---------------------------------------------------------------------

Outcome performance(std::size_t particles) {
  const BenchReport r = bench(particles, 20, 1, false);
  return {r.median_mapping <= 100.0,
          "median mapping cycle " + fmt(r.median_mapping, 4) + " ms at " + std::to_string(r.particles) +
              " particles, 200x200 grid, " + std::to_string(std::thread::hardware_concurrency()) + " hardware thread(s)",
          true};
}

// --- 10 --------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "dlf_acceptance_determinism";
  fs::remove_all(root);
  Scenario cross = fixture("crossroad_crossing");
  cross.run.duration = 20.0;
  int compared = 0, equal = 0;
  for (const Scenario& s : {fixture("convergence_pedestrian"), cross}) {
    for (const char* run : {"a", "b"}) {
      RunOptions o;
      o.out_dir = root / s.name / run;
      o.seed = 7;
      o.snapshot_every = 25;
      run_scenario(s, o);
    }
    for (const auto& entry : fs::recursive_directory_iterator(root / s.name / "a")) {
      if (!entry.is_regular_file()) continue;
      const fs::path rel = fs::relative(entry.path(), root / s.name / "a");
      // Timing files hold wall-clock measurements.
      if (rel == "timing.csv" || rel == "summary.txt") continue;
      ++compared;
      equal += slurp(entry.path()) == slurp(root / s.name / "b" / rel);
    }
  }
  fs::remove_all(root);
  return {compared > 0 && equal == compared,
          std::to_string(equal) + "/" + std::to_string(compared) + " output files byte-identical across two runs"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria for the dynamic lambda-field"};
  int runs = 50;
  std::size_t bench_particles = 20000;
  std::vector<int> only;
  app.add_option("--runs", runs, "Seeded runs per fixture for criteria 5-7")->check(CLI::PositiveNumber);
  app.add_option("--bench-particles", bench_particles, "Population for criterion 9");
  app.add_option("--only", only, "Criteria to run (default all)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);
  const std::set<int> chosen(only.begin(), only.end());
  auto wanted = [&](int k) { return chosen.empty() || chosen.count(k); };

  ConvergenceRuns conv;
  if (wanted(5) || wanted(6)) {
    const auto t0 = std::chrono::steady_clock::now();
    conv.ped = seeded_runs(fixture("convergence_pedestrian"), runs);
    conv.car = seeded_runs(fixture("convergence_car"), runs);
    conv.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"tessellation invariance", [] {
         const auto t0 = std::chrono::steady_clock::now();
         Outcome o = tessellation();
         const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
         o.pass = o.pass && s < 1.0;
         o.detail += ", " + fmt(s, 3) + " s";
         return o;
       }},
      {"telescoping identity", [] {
         const auto t0 = std::chrono::steady_clock::now();
         Outcome o = telescoping();
         const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
         o.pass = o.pass && s < 1.0;
         o.detail += ", " + fmt(s, 3) + " s";
         return o;
       }},
      {"per-obstacle decomposition", decomposition},
      {"Monte Carlo oracle", [] {
         const auto t0 = std::chrono::steady_clock::now();
         Outcome o = monte_carlo();
         const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
         o.pass = o.pass && s < 30.0;
         o.detail += ", " + fmt(s, 3) + " s";
         return o;
       }},
      {"velocity and orientation convergence", [&] { return velocity_convergence(conv); }},
      {"class convergence", [&] { return class_convergence(conv); }},
      {"crossing pedestrian", [&] { return crossing(runs); }},
      {"kinetic-energy risk units", energy_units},
      {"mapping performance", [&] { return performance(bench_particles); }},
      {"determinism", determinism},
  };

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int k = int(i) + 1;
    if (!wanted(k)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::cout << "criterion " << k << " " << (o.pass ? "PASS" : "FAIL") << " " << criteria[i].first << ": "
              << o.detail << (o.report_only ? " [report only]" : "") << std::endl;
    if (!o.pass && !o.report_only) all = false;
  }
  return all ? 0 : 1;
}
