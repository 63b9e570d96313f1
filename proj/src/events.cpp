#include "sphereflow/events.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string_view>

#include "sphereflow/quadrature.hpp"

namespace sphereflow {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
  throw ParseError(source + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

EventDataset parse_events(std::istream& in, const std::string& source) {
  EventDataset data;
  data.source = source;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (!have_header) {
      if (row.empty()) continue;
      std::string header(row);
      header.erase(std::remove(header.begin(), header.end(), ' '), header.end());
      if (header != "lon,lat") fail(source, line_no, "expected header 'lon,lat', got '" + std::string(row) + "'");
      have_header = true;
      continue;
    }
    if (row.empty()) continue;
    const auto comma = row.find(',');
    if (comma == std::string_view::npos || row.find(',', comma + 1) != std::string_view::npos) {
      fail(source, line_no, "expected two comma-separated values");
    }
    LonLat ll{};
    if (!parse_double(row.substr(0, comma), ll.lon)) fail(source, line_no, "missing or malformed lon");
    if (!parse_double(row.substr(comma + 1), ll.lat)) fail(source, line_no, "missing or malformed lat");
    if (ll.lat < -90.0 || ll.lat > 90.0) fail(source, line_no, "lat outside [-90, 90]");
    if (ll.lon < -360.0 || ll.lon > 360.0) fail(source, line_no, "lon outside [-360, 360]");
    data.original_rows.push_back(ll);
    data.points.push_back(from_lon_lat(ll.lon, ll.lat));
  }
  if (!have_header) fail(source, line_no, "empty file");
  if (data.points.empty()) fail(source, line_no, "no event rows");
  return data;
}

EventDataset load_events(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  return parse_events(in, path);
}

void write_events(const std::string& path, const std::vector<UnitVector>& points) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "lon,lat\n" << std::setprecision(17);
  for (const auto& x : points) {
    double lon, lat;
    to_lon_lat(x, lon, lat);
    out << lon << ',' << lat << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace sphereflow
