#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dlf/geometry.hpp"
#include "dlf/types.hpp"

namespace dlf {

struct CellOffset {
  std::int16_t dx = 0;
  std::int16_t dy = 0;
  friend bool operator==(const CellOffset&, const CellOffset&) = default;
};

/// Cells covered by an obstacle footprint: every cell whose area overlaps the footprint
/// by at least half. When no cell qualifies the cell holding the centre is used.
/// Offsets are relative to the cell containing the footprint centre.
std::vector<CellOffset> rasterize_footprint(ObstacleKind kind, const Vec2& center_in_cell,
                                            double heading, double cell_size);

Polygon footprint_polygon(ObstacleKind kind, const Vec2& center, double heading, double cell_size);

/// Lookup tables of `rasterize_footprint` over quantized sub-cell offsets and headings,
/// built once per cell size.
class FootprintTable {
 public:
  explicit FootprintTable(double cell_size, int offset_bins = 8, int heading_bins = 72);

  /// `fx`, `fy` are the centre's fractional position inside its cell in [0, 1).
  std::span<const CellOffset> lookup(ObstacleKind kind, double fx, double fy, double heading) const;

  double cell_size() const { return cell_size_; }

  /// Process-wide table for a cell size.
  static const FootprintTable& shared(double cell_size);

 private:
  struct Table {
    int heading_bins = 1;
    std::vector<std::uint32_t> begin;
    std::vector<CellOffset> offsets;
  };
  Table build(ObstacleKind kind, int heading_bins) const;

  double cell_size_;
  int offset_bins_;
  Table circle_;
  Table rectangle_;
};

}  // namespace dlf
