#include "dlf/sensor.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace dlf {

void SensorModel::validate() const {
  if (beam_count <= 0) throw DomainError("sensor: beam_count must be > 0");
  if (!(fov > 0.0) || fov > 2.0 * 3.14159265358979323846) throw DomainError("sensor: fov must lie in (0, 2pi]");
  if (!(max_range > 0.0)) throw DomainError("sensor: max_range must be > 0");
  if (!(error_area > 0.0)) throw DomainError("sensor: error_area must be > 0");
  if (!(range_noise >= 0.0)) throw DomainError("sensor: range_noise must be >= 0");
}

LidarScan cast_scan(const WorldState& world, const Pose2& pose, const SensorModel& model, double timestamp,
                    Rng* rng) {
  LidarScan scan;
  scan.timestamp = timestamp;
  scan.pose = pose;
  scan.max_range = model.max_range;
  scan.angle_min = model.angle_min();
  scan.angle_increment = model.angle_increment();
  scan.ranges.resize(static_cast<std::size_t>(model.beam_count));
  std::normal_distribution<double> noise(0.0, model.range_noise);
  for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
    double r = raycast(world, pose.position, heading_vector(scan.angle(i)), model.max_range);
    if (r < model.max_range && model.range_noise > 0.0 && rng) r = std::clamp(r + noise(*rng), 1e-6, model.max_range);
    scan.ranges[i] = r;
  }
  return scan;
}

namespace {

void region_cells(const LambdaGrid& grid, const Vec2& center, double side, std::vector<WeightedCell>& out) {
  const double h = 0.5 * side;
  const double cs = grid.cell_size();
  const Vec2 lo = center - Vec2::Constant(h) - grid.origin();
  const Vec2 hi = center + Vec2::Constant(h) - grid.origin();
  const int x0 = std::max(0, static_cast<int>(std::floor(lo.x() / cs)));
  const int y0 = std::max(0, static_cast<int>(std::floor(lo.y() / cs)));
  const int x1 = std::min(grid.width() - 1, static_cast<int>(std::floor(hi.x() / cs)));
  const int y1 = std::min(grid.height() - 1, static_cast<int>(std::floor(hi.y() / cs)));
  const double area = side * side;
  for (int iy = y0; iy <= y1; ++iy) {
    const double oy = std::min(hi.y(), (iy + 1) * cs) - std::max(lo.y(), iy * cs);
    if (oy <= 0.0) continue;
    for (int ix = x0; ix <= x1; ++ix) {
      const double ox = std::min(hi.x(), (ix + 1) * cs) - std::max(lo.x(), ix * cs);
      if (ox <= 0.0) continue;
      const double w = ox * oy / area;
      if (w > 1e-9) out.push_back({grid.index(ix, iy), w});
    }
  }
}

}  // namespace

ScanClassification classify_cells(const LidarScan& scan, const LambdaGrid& grid, const SensorModel& model) {
  if (!grid.locate(scan.pose.position)) throw DomainError("classify_cells: scan pose outside the grid");
  ScanClassification out;
  std::vector<double> miss_count(static_cast<std::size_t>(grid.size()), 0.0);
  std::vector<CellIndex> touched;
  const double side = model.error_side();
  const Box2 bounds = grid.bounds();

  for (std::size_t i = 0; i < scan.size(); ++i) {
    const Vec2 end = scan.endpoint(i);
    HitRegion region;
    if (scan.is_hit(i) && bounds.contains(end)) {
      region.center = end;
      region.side = side;
      region_cells(grid, end, side, region.cells);
    }
    for_each_cell_on_segment(grid, scan.pose.position, end, [&](CellIndex c, double, double) {
      for (const auto& wc : region.cells)
        if (wc.cell == c) return;
      if (miss_count[static_cast<std::size_t>(c)] == 0.0) touched.push_back(c);
      miss_count[static_cast<std::size_t>(c)] += 1.0;
    });
    if (!region.cells.empty()) out.hits.push_back(std::move(region));
  }

  std::sort(touched.begin(), touched.end());
  out.misses.reserve(touched.size());
  for (CellIndex c : touched) out.misses.push_back({c, miss_count[static_cast<std::size_t>(c)]});
  return out;
}

void write_scan(std::ostream& os, const LidarScan& scan) {
  const auto old = os.precision(17);
  os << scan.timestamp << ' ' << scan.pose.position.x() << ' ' << scan.pose.position.y() << ' '
     << scan.pose.heading << ' ' << scan.max_range << ' ' << scan.angle_min << ' ' << scan.angle_increment << ' '
     << scan.ranges.size();
  for (double r : scan.ranges) os << ' ' << r;
  os << '\n';
  os.precision(old);
}

std::optional<LidarScan> read_scan(std::istream& is) {
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    LidarScan scan;
    std::size_t n = 0;
    if (!(ls >> scan.timestamp >> scan.pose.position.x() >> scan.pose.position.y() >> scan.pose.heading >>
          scan.max_range >> scan.angle_min >> scan.angle_increment >> n))
      throw std::runtime_error("scan log: malformed header fields");
    scan.ranges.resize(n);
    for (auto& r : scan.ranges)
      if (!(ls >> r)) throw std::runtime_error("scan log: expected " + std::to_string(n) + " ranges");
    return scan;
  }
  return std::nullopt;
}

}  // namespace dlf
