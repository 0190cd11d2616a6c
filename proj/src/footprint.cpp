#include "dlf/footprint.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace dlf {

Polygon footprint_polygon(ObstacleKind kind, const Vec2& center, double heading, double cell_size) {
  const KindProfile& p = default_profile(kind);
  switch (p.shape) {
    case FootprintShape::Circle: return circle_polygon(center, 0.5 * p.length, 128);
    case FootprintShape::Rectangle: return oriented_rectangle(center, p.length, p.width, heading);
    case FootprintShape::Cell: break;
  }
  return oriented_rectangle(center, cell_size, cell_size, 0.0);
}

std::vector<CellOffset> rasterize_footprint(ObstacleKind kind, const Vec2& center_in_cell,
                                            double heading, double cell_size) {
  if (default_profile(kind).shape == FootprintShape::Cell) return {CellOffset{}};
  const Polygon shape = footprint_polygon(kind, center_in_cell, heading, cell_size);
  const Box2 bb = bounding_box(shape);
  const int x0 = static_cast<int>(std::floor(bb.min.x() / cell_size));
  const int x1 = static_cast<int>(std::floor(bb.max.x() / cell_size));
  const int y0 = static_cast<int>(std::floor(bb.min.y() / cell_size));
  const int y1 = static_cast<int>(std::floor(bb.max.y() / cell_size));
  const double half_cell = 0.5 * cell_size * cell_size;

  std::vector<CellOffset> out;
  for (int iy = y0; iy <= y1; ++iy) {
    for (int ix = x0; ix <= x1; ++ix) {
      const Box2 cell{Vec2(ix * cell_size, iy * cell_size), Vec2((ix + 1) * cell_size, (iy + 1) * cell_size)};
      if (overlap_area(box_polygon(cell), shape) >= half_cell)
        out.push_back({static_cast<std::int16_t>(ix), static_cast<std::int16_t>(iy)});
    }
  }
  if (out.empty()) out.push_back(CellOffset{});
  return out;
}

FootprintTable::FootprintTable(double cell_size, int offset_bins, int heading_bins)
    : cell_size_(cell_size), offset_bins_(offset_bins) {
  circle_ = build(ObstacleKind::Pedestrian, 1);
  rectangle_ = build(ObstacleKind::Car, heading_bins);
}

FootprintTable::Table FootprintTable::build(ObstacleKind kind, int heading_bins) const {
  Table t;
  t.heading_bins = heading_bins;
  const int q = offset_bins_;
  t.begin.reserve(static_cast<std::size_t>(heading_bins * q * q + 1));
  t.begin.push_back(0);
  for (int h = 0; h < heading_bins; ++h) {
    // Rectangles are symmetric under a half turn: bins span [0, pi).
    const double heading = (h + 0.5) * std::numbers::pi / heading_bins;
    for (int qy = 0; qy < q; ++qy) {
      for (int qx = 0; qx < q; ++qx) {
        const Vec2 c((qx + 0.5) / q * cell_size_, (qy + 0.5) / q * cell_size_);
        const auto cells = rasterize_footprint(kind, c, heading, cell_size_);
        t.offsets.insert(t.offsets.end(), cells.begin(), cells.end());
        t.begin.push_back(static_cast<std::uint32_t>(t.offsets.size()));
      }
    }
  }
  return t;
}

std::span<const CellOffset> FootprintTable::lookup(ObstacleKind kind, double fx, double fy,
                                                   double heading) const {
  static const CellOffset kSelf{};
  if (kind == ObstacleKind::StaticCell) return {&kSelf, 1};
  const Table& t = kind == ObstacleKind::Car ? rectangle_ : circle_;
  const int q = offset_bins_;
  const int qx = std::clamp(static_cast<int>(fx * q), 0, q - 1);
  const int qy = std::clamp(static_cast<int>(fy * q), 0, q - 1);
  int h = 0;
  if (t.heading_bins > 1) {
    double a = std::fmod(heading, std::numbers::pi);
    if (a < 0.0) a += std::numbers::pi;
    h = std::min(static_cast<int>(a / std::numbers::pi * t.heading_bins), t.heading_bins - 1);
  }
  const std::size_t slot = static_cast<std::size_t>((h * q + qy) * q + qx);
  return {t.offsets.data() + t.begin[slot], t.begin[slot + 1] - t.begin[slot]};
}

const FootprintTable& FootprintTable::shared(double cell_size) {
  static std::mutex mutex;
  static std::map<double, std::unique_ptr<FootprintTable>> tables;
  std::lock_guard lock(mutex);
  auto& slot = tables[cell_size];
  if (!slot) slot = std::make_unique<FootprintTable>(cell_size);
  return *slot;
}

}  // namespace dlf
