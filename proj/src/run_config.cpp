#include "sphereflow/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sphereflow/events.hpp"

namespace sphereflow {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw std::invalid_argument("config key '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw std::invalid_argument("config key '" + key + "': expected true/false, got '" + value + "'");
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::soft: return "soft";
    case Algorithm::hard: return "hard";
    case Algorithm::committee: return "committee";
  }
  return "hard";
}

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "soft") return Algorithm::soft;
  if (s == "hard") return Algorithm::hard;
  if (s == "committee") return Algorithm::committee;
  throw std::invalid_argument("unknown algorithm '" + s + "' (expected soft, hard or committee)");
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "G") components = parse_number<int>(key, value);
  else if (key == "K") shape.layers = parse_number<int>(key, value);
  else if (key == "p") shape.basis = parse_number<int>(key, value);
  else if (key == "beta_cap") shape.beta_cap = parse_number<double>(key, value);
  else if (key == "init_beta") shape.init_beta = parse_number<double>(key, value);
  else if (key == "algorithm") algorithm = algorithm_from_string(value);
  else if (key == "learning_rate") sgd.learning_rate = parse_number<double>(key, value);
  else if (key == "batch_size") sgd.batch_size = parse_number<std::size_t>(key, value);
  else if (key == "epochs_per_mstep") sgd.epochs_per_mstep = parse_number<int>(key, value);
  else if (key == "momentum") sgd.momentum = parse_number<double>(key, value);
  else if (key == "backtracking") sgd.backtracking = parse_bool(key, value);
  else if (key == "tol") em.tol = parse_number<double>(key, value);
  else if (key == "max_iters") em.max_iters = parse_number<int>(key, value);
  else if (key == "init_kmeans_iters") em.init_kmeans_iters = parse_number<int>(key, value);
  else if (key == "threads") em.threads = parse_number<int>(key, value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "grid_resolution") grid_resolution = parse_number<std::size_t>(key, value);
  else if (key == "committee_members") committee_members = parse_number<int>(key, value);
  else if (key == "prune") prune = parse_bool(key, value);
  else throw std::invalid_argument("unknown config key '" + key + "'");
}

void RunConfig::validate() const {
  if (components < 1) throw std::invalid_argument("config: G must be >= 1");
  if (shape.layers < 1) throw std::invalid_argument("config: K must be >= 1");
  if (shape.basis < 1) throw std::invalid_argument("config: p must be >= 1");
  if (!(shape.beta_cap > 0.0)) throw std::invalid_argument("config: beta_cap must be positive");
  if (!(shape.init_beta > 0.0 && shape.init_beta < shape.beta_cap)) {
    throw std::invalid_argument("config: init_beta must lie in (0, beta_cap)");
  }
  if (grid_resolution < 1) throw std::invalid_argument("config: grid_resolution must be >= 1");
  if (committee_members < 1) throw std::invalid_argument("config: committee_members must be >= 1");
  sgd.validate();
  em.validate();
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  return {
      {"G", std::to_string(components)},
      {"K", std::to_string(shape.layers)},
      {"p", std::to_string(shape.basis)},
      {"beta_cap", format_double(shape.beta_cap)},
      {"init_beta", format_double(shape.init_beta)},
      {"algorithm", to_string(algorithm)},
      {"learning_rate", format_double(sgd.learning_rate)},
      {"batch_size", std::to_string(sgd.batch_size)},
      {"epochs_per_mstep", std::to_string(sgd.epochs_per_mstep)},
      {"momentum", format_double(sgd.momentum)},
      {"backtracking", sgd.backtracking ? "true" : "false"},
      {"tol", format_double(em.tol)},
      {"max_iters", std::to_string(em.max_iters)},
      {"init_kmeans_iters", std::to_string(em.init_kmeans_iters)},
      {"threads", std::to_string(em.threads)},
      {"seed", std::to_string(seed)},
      {"grid_resolution", std::to_string(grid_resolution)},
      {"committee_members", std::to_string(committee_members)},
      {"prune", prune ? "true" : "false"},
  };
}

RunConfig parse_run_config(std::istream& in, const std::string& source) {
  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    try {
      cfg.set(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  return parse_run_config(in, path);
}

std::string run_config_to_text(const RunConfig& cfg) {
  std::ostringstream out;
  for (const auto& [k, v] : cfg.entries()) out << k << " = " << v << '\n';
  return out.str();
}

}  // namespace sphereflow
