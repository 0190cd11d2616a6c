#include "dlf/lambda_core.hpp"

#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace dlf {

std::string_view to_string(ObstacleKind kind) {
  switch (kind) {
    case ObstacleKind::StaticCell: return "static";
    case ObstacleKind::Pedestrian: return "pedestrian";
    case ObstacleKind::Car: return "car";
  }
  return "unknown";
}

ObstacleKind parse_kind(std::string_view text) {
  if (text == "static") return ObstacleKind::StaticCell;
  if (text == "pedestrian") return ObstacleKind::Pedestrian;
  if (text == "car") return ObstacleKind::Car;
  throw std::invalid_argument("unknown obstacle kind '" + std::string(text) + "'");
}

const KindProfile& default_profile(ObstacleKind kind) {
  static const KindProfile kStatic{FootprintShape::Cell, 0.0, 0.0, 0.0, 0.0,
                                   std::numeric_limits<double>::infinity()};
  static const KindProfile kPedestrian{FootprintShape::Circle, 0.40, 0.40, 3.0, 1.0, 80.0};
  static const KindProfile kCar{FootprintShape::Rectangle, 2.0, 1.0, 15.0, 0.5, 500.0};
  switch (kind) {
    case ObstacleKind::Pedestrian: return kPedestrian;
    case ObstacleKind::Car: return kCar;
    default: return kStatic;
  }
}

void PathPlan::validate() const {
  if (!(area_step >= 0.0)) throw DomainError("PathPlan: negative area step");
  if (!(robot_width > 0.0)) throw DomainError("PathPlan: robot width must be positive");
  for (std::size_t i = 1; i < steps.size(); ++i) {
    if (steps[i].time < steps[i - 1].time) throw DomainError("PathPlan: traversal times decrease");
  }
}

Eigen::ArrayXd path_expected_lambdas(const PathPlan& path, const LambdaGrid& field) {
  Eigen::ArrayXd lambdas(static_cast<Eigen::Index>(path.size()));
  for (std::size_t i = 0; i < path.size(); ++i) {
    const CellIndex c = path.steps[i].cell;
    if (!field.contains(c)) throw DomainError("path cell outside the grid");
    lambdas[static_cast<Eigen::Index>(i)] = field.expected_lambda(c);
  }
  return lambdas;
}

double path_collision_probability(const PathPlan& path, const LambdaGrid& field) {
  return path_collision_probability(path_expected_lambdas(path, field), path.area_step);
}

namespace {
constexpr const char* kMagic = "dlf-lambda-grid";
}

void write_snapshot(std::ostream& os, const LambdaGrid& grid) {
  os << kMagic << " 1\n";
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "width " << grid.width() << "\nheight " << grid.height() << "\ncell_size " << grid.cell_size()
     << "\norigin " << grid.origin().x() << ' ' << grid.origin().y() << '\n';
  os << "# lambda_static lambda_pedestrian lambda_car mu_v sigma_v mu_theta kappa_theta\n";
  for (CellIndex i = 0; i < grid.size(); ++i) {
    const CellState s = grid.cell(i);
    os << s.lambda_static << ' ' << s.lambda_by_kind[0] << ' ' << s.lambda_by_kind[1];
    if (s.velocity) {
      os << ' ' << s.velocity->mu_v << ' ' << s.velocity->sigma_v << ' ' << s.velocity->mu_theta << ' '
         << s.velocity->kappa_theta << '\n';
    } else {
      os << " - - - -\n";
    }
  }
}

LambdaGrid read_snapshot(std::istream& is) {
  auto fail = [](const std::string& what) -> void { throw std::runtime_error("snapshot: " + what); };
  std::string magic;
  int version = 0;
  is >> magic >> version;
  if (magic != kMagic || version != 1) fail("bad header");
  std::string key;
  int width = 0, height = 0;
  double cell_size = 0.0, ox = 0.0, oy = 0.0;
  is >> key >> width;
  if (key != "width") fail("expected width");
  is >> key >> height;
  if (key != "height") fail("expected height");
  is >> key >> cell_size;
  if (key != "cell_size") fail("expected cell_size");
  is >> key >> ox >> oy;
  if (key != "origin" || !is) fail("expected origin");
  is >> std::ws;
  std::string line;
  std::getline(is, line);  // column legend

  LambdaGrid grid(width, height, cell_size, Eigen::Vector2d(ox, oy));
  for (CellIndex i = 0; i < grid.size(); ++i) {
    if (!std::getline(is, line)) fail("truncated cell records");
    std::istringstream row(line);
    CellState s;
    row >> s.lambda_static >> s.lambda_by_kind[0] >> s.lambda_by_kind[1];
    if (!row) fail("bad cell record " + std::to_string(i));
    std::string first;
    row >> first;
    if (first != "-") {
      CellVelocityDistribution d;
      d.mu_v = std::stod(first);
      row >> d.sigma_v >> d.mu_theta >> d.kappa_theta;
      if (!row) fail("bad velocity record " + std::to_string(i));
      s.velocity = d;
    }
    grid.set_cell(i, s);
  }
  return grid;
}

}  // namespace dlf
