#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "sphereflow/geometry.hpp"

namespace sphereflow {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LonLat {
  double lon;
  double lat;
};

// N event locations on the unit sphere plus where they came from.
struct EventDataset {
  std::vector<UnitVector> points;
  std::string source;
  std::vector<LonLat> original_rows;

  std::size_t size() const { return points.size(); }
};

// Reads a CSV with header `lon,lat` (degrees). Rows map to
// (cos lat cos lon, cos lat sin lon, sin lat). Duplicate locations are kept.
// Throws ParseError naming the offending line.
EventDataset load_events(const std::string& path);
EventDataset parse_events(std::istream& in, const std::string& source);

// Writes `lon,lat` rows with 17 significant digits.
void write_events(const std::string& path, const std::vector<UnitVector>& points);

}  // namespace sphereflow
