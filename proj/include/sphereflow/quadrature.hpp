#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "sphereflow/geometry.hpp"

namespace sphereflow {

struct QuadratureGrid {
  std::vector<UnitVector> nodes;
  std::vector<double> weights;  // steradians

  std::size_t size() const { return nodes.size(); }
};

struct DensityField {
  std::function<double(const UnitVector&)> evaluate;
  std::string label;
};

// Fibonacci lattice with `nodes` points and equal weights 4 pi / nodes.
QuadratureGrid build_grid(std::size_t nodes);

// sum_m w_m field(node_m). Throws if the field returns a non-finite value.
double integrate(const DensityField& field, const QuadratureGrid& grid);

double l1_distance(const DensityField& f, const DensityField& g, const QuadratureGrid& grid);

struct RasterCell {
  double lon_deg;
  double lat_deg;
  double density;
  double relative_density;  // density * 4 pi
};

// Regular lon/lat raster: lon_i = -180 + 360 i / lon_steps (i < lon_steps),
// lat_j = -90 + 180 j / (lat_steps - 1) (j < lat_steps). Rows are ordered
// with latitude outermost.
std::vector<RasterCell> export_density_grid(const DensityField& field, std::size_t lon_steps,
                                            std::size_t lat_steps);

// Solid angle of the raster cell centred on latitude row j.
double raster_cell_solid_angle(std::size_t j, std::size_t lon_steps, std::size_t lat_steps);

// Writes the raster with header `lon,lat,density,relative_density`.
void write_raster(const std::string& path, const std::vector<RasterCell>& cells);

UnitVector from_lon_lat(double lon_deg, double lat_deg);
void to_lon_lat(const UnitVector& x, double& lon_deg, double& lat_deg);

}  // namespace sphereflow
