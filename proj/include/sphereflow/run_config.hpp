#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "sphereflow/mixture.hpp"
#include "sphereflow/optimizer.hpp"

namespace sphereflow {

enum class Algorithm { soft, hard, committee };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

// Everything a `fit` run needs. Loaded from flat `key = value` text; `#`
// starts a comment. Unknown keys are rejected.
struct RunConfig {
  int components = 20;  // G
  FlowShape shape;      // K = 20, p = 1
  Algorithm algorithm = Algorithm::hard;
  SgdConfig sgd;
  EmConfig em;
  std::uint64_t seed = 0;
  std::size_t grid_resolution = 20000;
  int committee_members = 50;
  bool prune = true;

  void set(const std::string& key, const std::string& value);
  void validate() const;
  // Every key with its current value, in a fixed order.
  std::vector<std::pair<std::string, std::string>> entries() const;
};

RunConfig parse_run_config(std::istream& in, const std::string& source);
RunConfig load_run_config(const std::string& path);
std::string run_config_to_text(const RunConfig& cfg);

}  // namespace sphereflow
