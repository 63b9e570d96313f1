#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "sphereflow/mixture.hpp"
#include "sphereflow/vmf.hpp"

namespace sphereflow {

inline constexpr int kModelFormatVersion = 1;
inline constexpr int kTruthFormatVersion = 1;

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A fitted density as stored on disk. `kind` is "mixture" for EM fits and
// "committee" for equal-weight ensembles; both evaluate as a mixture.
struct ModelDocument {
  std::string kind = "mixture";
  MixtureModel model;
  std::uint64_t seed = 0;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
};

// JSON text; every double is written in shortest round-trip form so a
// save/load cycle reproduces all parameters bit for bit.
std::string model_to_text(const ModelDocument& doc);
ModelDocument model_from_text(const std::string& text);
void save_model(const std::string& path, const ModelDocument& doc);
ModelDocument load_model(const std::string& path);

std::string truth_to_text(const VmfMixture& truth, const nlohmann::ordered_json& setting);
VmfMixture truth_from_text(const std::string& text);
void save_truth(const std::string& path, const VmfMixture& truth, const nlohmann::ordered_json& setting);
VmfMixture load_truth(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace sphereflow
