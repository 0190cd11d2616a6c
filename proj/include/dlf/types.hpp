#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dlf {

enum class ObstacleKind : std::uint8_t { StaticCell = 0, Pedestrian = 1, Car = 2 };

inline constexpr std::size_t kNumDynamicKinds = 2;
inline constexpr std::array<ObstacleKind, kNumDynamicKinds> kDynamicKinds = {ObstacleKind::Pedestrian,
                                                                            ObstacleKind::Car};

/// Slot of a dynamic kind inside per-kind arrays.
constexpr std::size_t dynamic_slot(ObstacleKind kind) {
  return kind == ObstacleKind::Pedestrian ? 0 : 1;
}

std::string_view to_string(ObstacleKind kind);
ObstacleKind parse_kind(std::string_view text);

enum class FootprintShape : std::uint8_t { Cell, Circle, Rectangle };

/// Physical and motion profile of an obstacle class. Footprint dimensions are in metres
/// and do not depend on the grid resolution.
struct KindProfile {
  FootprintShape shape = FootprintShape::Cell;
  double length = 0.0;  // rectangle extent along heading, or circle diameter
  double width = 0.0;
  double max_speed = 0.0;    // m/s
  double accel_sigma = 0.0;  // m/s^2, isotropic
  double mass = 0.0;         // kg; infinite for the static environment
};

/// Defaults: 40 cm pedestrian disc, 2 m x 1 m car, 80 kg / 500 kg.
const KindProfile& default_profile(ObstacleKind kind);

/// Per-cell velocity model: normal speed, Von Mises heading.
struct CellVelocityDistribution {
  double mu_v = 0.0;
  double sigma_v = 0.0;
  double mu_theta = 0.0;
  double kappa_theta = 0.0;
};

/// Error raised when an argument lies outside an operation's mathematical domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace dlf
