#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowvmc/errors.hpp"
#include "flowvmc/flow.hpp"

namespace flowvmc {

namespace {

using nlohmann::json;

json require(const json& j, const char* key) {
  if (!j.contains(key))
    throw MissingFieldError(std::string("checkpoint missing field: ") + key);
  return j.at(key);
}

}  // namespace

void save_flow(const FlowModel& model, bool symmetrized,
               const std::string& path) {
  json layers = json::array();
  for (const LayerSpec& ls : model.layers()) {
    if (ls.kind == LayerKind::kAffine) {
      layers.push_back({{"kind", "affine"}});
    } else {
      layers.push_back({{"kind", "coupling"},
                        {"parity", ls.parity},
                        {"hidden_width", ls.scale.width},
                        {"hidden_depth", ls.scale.depth}});
    }
  }
  std::vector<double> params(model.parameters().data(),
                             model.parameters().data() + model.param_count());
  const json j = {{"format_version", 1},
                  {"dim", model.dim()},
                  {"symmetrized", symmetrized},
                  {"layers", layers},
                  {"parameters", params}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

LoadedFlow load_flow(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed checkpoint " + path + ": " + e.what());
  }
  if (require(j, "format_version").get<int>() != 1)
    throw DomainError("unsupported checkpoint format version");
  const int dim = require(j, "dim").get<int>();
  const bool symmetrized = require(j, "symmetrized").get<bool>();

  std::vector<LayerSpec> layers;
  for (const json& lj : require(j, "layers")) {
    const std::string kind = require(lj, "kind").get<std::string>();
    if (kind == "affine") {
      layers.push_back(affine_layer());
    } else if (kind == "coupling") {
      layers.push_back(coupling_layer(dim, require(lj, "parity").get<int>(),
                                      require(lj, "hidden_width").get<int>(),
                                      require(lj, "hidden_depth").get<int>()));
    } else {
      throw DomainError("unknown layer kind in checkpoint: " + kind);
    }
  }

  LoadedFlow loaded{FlowModel(dim, std::move(layers)), symmetrized};
  const std::vector<double> params =
      require(j, "parameters").get<std::vector<double>>();
  if (static_cast<int>(params.size()) != loaded.model.param_count())
    throw DomainError("checkpoint parameter count does not match layout");
  loaded.model.set_parameters(
      Eigen::Map<const Eigen::VectorXd>(params.data(), params.size()));
  return loaded;
}

}  // namespace flowvmc
