#include "sphereflow/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <stdexcept>

namespace sphereflow {

namespace {
constexpr double kDeg = std::numbers::pi / 180.0;
}

UnitVector from_lon_lat(double lon_deg, double lat_deg) {
  const double lon = lon_deg * kDeg;
  const double lat = lat_deg * kDeg;
  return UnitVector(std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat));
}

void to_lon_lat(const UnitVector& x, double& lon_deg, double& lat_deg) {
  lon_deg = std::atan2(x[1], x[0]) / kDeg;
  lat_deg = std::asin(std::clamp(x[2], -1.0, 1.0)) / kDeg;
}

QuadratureGrid build_grid(std::size_t nodes) {
  if (nodes < 1) throw std::invalid_argument("build_grid: resolution must be >= 1");
  QuadratureGrid grid;
  grid.nodes.reserve(nodes);
  const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
  const double m = double(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    const double z = 1.0 - (2.0 * double(i) + 1.0) / m;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden_angle * double(i);
    grid.nodes.push_back(UnitVector(r * std::cos(phi), r * std::sin(phi), z));
  }
  grid.weights.assign(nodes, 4.0 * std::numbers::pi / m);
  return grid;
}

double integrate(const DensityField& field, const QuadratureGrid& grid) {
  double total = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = field.evaluate(grid.nodes[i]);
    if (!std::isfinite(v)) throw std::runtime_error("integrate: field '" + field.label + "' is not finite");
    total += grid.weights[i] * v;
  }
  return total;
}

double l1_distance(const DensityField& f, const DensityField& g, const QuadratureGrid& grid) {
  double total = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double a = f.evaluate(grid.nodes[i]);
    const double b = g.evaluate(grid.nodes[i]);
    if (!std::isfinite(a) || !std::isfinite(b)) {
      throw std::runtime_error("l1_distance: non-finite density ('" + f.label + "' vs '" + g.label + "')");
    }
    total += grid.weights[i] * std::abs(a - b);
  }
  return total;
}

std::vector<RasterCell> export_density_grid(const DensityField& field, std::size_t lon_steps,
                                            std::size_t lat_steps) {
  if (lon_steps < 2 || lat_steps < 2) throw std::invalid_argument("export_density_grid: steps must be >= 2");
  std::vector<RasterCell> out;
  out.reserve(lon_steps * lat_steps);
  for (std::size_t j = 0; j < lat_steps; ++j) {
    const double lat = -90.0 + 180.0 * double(j) / double(lat_steps - 1);
    for (std::size_t i = 0; i < lon_steps; ++i) {
      const double lon = -180.0 + 360.0 * double(i) / double(lon_steps);
      const double d = field.evaluate(from_lon_lat(lon, lat));
      out.push_back({lon, lat, d, d * 4.0 * std::numbers::pi});
    }
  }
  return out;
}

double raster_cell_solid_angle(std::size_t j, std::size_t lon_steps, std::size_t lat_steps) {
  const double step = 180.0 / double(lat_steps - 1);
  const double lat = -90.0 + step * double(j);
  const double lo = std::max(-90.0, lat - step / 2) * kDeg;
  const double hi = std::min(90.0, lat + step / 2) * kDeg;
  return (2.0 * std::numbers::pi / double(lon_steps)) * (std::sin(hi) - std::sin(lo));
}

void write_raster(const std::string& path, const std::vector<RasterCell>& cells) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "lon,lat,density,relative_density\n" << std::setprecision(17);
  for (const auto& c : cells) {
    out << c.lon_deg << ',' << c.lat_deg << ',' << c.density << ',' << c.relative_density << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace sphereflow
