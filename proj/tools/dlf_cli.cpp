#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "dlf/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Dynamic lambda-field simulator"};
  std::string scenario_path, out_dir, replay_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> snapshot_every;
  bool fail_on_collision = false, run_bench = false;
  std::size_t bench_particles = 20000;
  int bench_cycles = 20;

  app.add_option("--scenario", scenario_path, "Scenario file");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--seed", seed, "Random seed (overrides run.seed)");
  app.add_option("--snapshot-every", snapshot_every, "Write a grid snapshot every K cycles (0 = never)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--fail-on-collision", fail_on_collision, "Exit with status 2 if the robot collides");
  app.add_flag("--bench", run_bench, "Time mapping cycles on a 200x200 grid and exit");
  app.add_option("--bench-particles", bench_particles, "Population size for --bench");
  app.add_option("--bench-cycles", bench_cycles, "Timed cycles for --bench")->check(CLI::PositiveNumber);
  app.add_option("--replay", replay_path, "Map a scan log instead of simulating (needs --scenario for settings)");
  CLI11_PARSE(app, argc, argv);

  try {
    if (run_bench) {
      dlf::write_bench(std::cout, dlf::bench(bench_particles, bench_cycles, seed.value_or(1)));
      return 0;
    }
    if (scenario_path.empty()) {
      std::cerr << "error: --scenario is required\n";
      return 1;
    }
    dlf::Scenario scenario = dlf::load_scenario_file(scenario_path);
    for (const auto& key : dlf::apply_env_overrides(scenario)) std::cerr << "override " << key << '\n';

    if (!replay_path.empty()) {
      std::ifstream log(replay_path);
      if (!log) throw std::runtime_error("cannot open " + replay_path);
      std::optional<std::filesystem::path> dir;
      if (!out_dir.empty()) dir = std::filesystem::path(out_dir) / "snapshots";
      if (snapshot_every) scenario.run.snapshot_every = *snapshot_every;
      const auto field = dlf::replay_scans(scenario, log, seed.value_or(scenario.run.seed), dir);
      if (dir) {
        std::filesystem::create_directories(*dir);
        std::ofstream os(*dir / "final_snapshot.txt");
        dlf::write_snapshot(os, field.snapshot());
      }
      std::cout << "replayed; particles " << field.particles().size() << '\n';
      return 0;
    }

    dlf::RunOptions options;
    if (!out_dir.empty()) options.out_dir = out_dir;
    options.seed = seed;
    options.snapshot_every = snapshot_every;
    const dlf::RunMetrics metrics = dlf::run_scenario(scenario, options);
    dlf::write_summary(std::cout, scenario, metrics);
    if (metrics.collided && fail_on_collision) return 2;
    return 0;
  } catch (const dlf::ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
