#include "sphereflow/model_io.hpp"

#include <fstream>
#include <sstream>

namespace sphereflow {

using nlohmann::ordered_json;

namespace {

ordered_json vec_json(const UnitVector& u) { return ordered_json::array({u[0], u[1], u[2]}); }

UnitVector vec_from(const ordered_json& j) {
  if (!j.is_array() || j.size() != 3) throw FormatError("expected a 3-vector");
  const Vec3 v(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
  if (std::abs(v.norm() - 1.0) > 1e-12) throw FormatError("stored direction is not a unit vector");
  return UnitVector::from_normalized(v);
}

const ordered_json& field(const ordered_json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw FormatError(std::string("missing field '") + key + "'");
  return *it;
}

void check_header(const ordered_json& doc, const char* format, int version) {
  if (!doc.is_object() || field(doc, "format") != format) {
    throw FormatError(std::string("not a ") + format + " document");
  }
  const int found = field(doc, "version").get<int>();
  if (found != version) {
    throw FormatError(std::string(format) + " version " + std::to_string(found) + " is not supported (expected " +
                      std::to_string(version) + ")");
  }
}

}  // namespace

std::string model_to_text(const ModelDocument& doc) {
  doc.model.validate();
  const auto& first = doc.model.components.front();
  ordered_json j;
  j["format"] = "sphereflow-model";
  j["version"] = kModelFormatVersion;
  j["kind"] = doc.kind;
  j["G"] = doc.model.size();
  j["K"] = first.layers.size();
  j["p"] = first.layers.front().size();
  j["seed"] = doc.seed;
  j["weights"] = doc.model.weights;
  ordered_json comps = ordered_json::array();
  for (const auto& comp : doc.model.components) {
    ordered_json layers = ordered_json::array();
    for (const auto& layer : comp.layers) {
      ordered_json centers = ordered_json::array();
      for (const auto& m : layer.centers) centers.push_back(vec_json(m));
      layers.push_back({{"betas", layer.betas}, {"centers", centers}, {"etas", layer.etas}});
    }
    comps.push_back({{"layers", layers}});
  }
  j["components"] = comps;
  j["metadata"] = doc.metadata;
  return j.dump(1) + "\n";
}

ModelDocument model_from_text(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model file is not valid JSON: ") + e.what());
  }
  check_header(j, "sphereflow-model", kModelFormatVersion);
  try {
    ModelDocument doc;
    doc.kind = field(j, "kind").get<std::string>();
    doc.seed = field(j, "seed").get<std::uint64_t>();
    doc.model.weights = field(j, "weights").get<std::vector<double>>();
    for (const auto& c : field(j, "components")) {
      ComponentParams comp;
      for (const auto& l : field(c, "layers")) {
        LayerParams layer;
        layer.betas = field(l, "betas").get<std::vector<double>>();
        layer.etas = field(l, "etas").get<std::vector<double>>();
        for (const auto& m : field(l, "centers")) layer.centers.push_back(vec_from(m));
        comp.layers.push_back(std::move(layer));
      }
      doc.model.components.push_back(std::move(comp));
    }
    if (j.contains("metadata")) doc.metadata = j["metadata"];
    if (field(j, "G").get<std::size_t>() != doc.model.size()) throw FormatError("G does not match component count");
    doc.model.validate();
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid model parameters: ") + e.what());
  }
}

std::string truth_to_text(const VmfMixture& truth, const ordered_json& setting) {
  truth.validate();
  ordered_json j;
  j["format"] = "sphereflow-vmf-mixture";
  j["version"] = kTruthFormatVersion;
  j["weights"] = truth.weights;
  ordered_json comps = ordered_json::array();
  for (const auto& c : truth.components) {
    comps.push_back({{"mean_direction", vec_json(c.mean_direction)}, {"concentration", c.concentration}});
  }
  j["components"] = comps;
  j["setting"] = setting;
  return j.dump(1) + "\n";
}

VmfMixture truth_from_text(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("truth file is not valid JSON: ") + e.what());
  }
  check_header(j, "sphereflow-vmf-mixture", kTruthFormatVersion);
  try {
    VmfMixture truth;
    truth.weights = field(j, "weights").get<std::vector<double>>();
    for (const auto& c : field(j, "components")) {
      truth.components.push_back({vec_from(field(c, "mean_direction")), field(c, "concentration").get<double>()});
    }
    truth.validate();
    return truth;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed truth file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid truth parameters: ") + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path);
}

void save_model(const std::string& path, const ModelDocument& doc) { write_file(path, model_to_text(doc)); }
ModelDocument load_model(const std::string& path) { return model_from_text(read_file(path)); }

void save_truth(const std::string& path, const VmfMixture& truth, const ordered_json& setting) {
  write_file(path, truth_to_text(truth, setting));
}
VmfMixture load_truth(const std::string& path) { return truth_from_text(read_file(path)); }

}  // namespace sphereflow
