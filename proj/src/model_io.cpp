#include "evadex/model_io.hpp"

#include <fstream>
#include <sstream>

#include "evadex/error.hpp"
#include "evadex/models.hpp"
#include "json.hpp"

namespace evadex {

using nlohmann::json;

std::string serialize_model(const PredictionModel& model, std::uint64_t seed) {
  json out;
  out["version"] = kModelFileVersion;
  out["k"] = model.num_classes();
  out["d"] = model.dim();
  out["seed"] = seed;
  json params;
  if (const auto* lr = dynamic_cast<const LogRegModel*>(&model)) {
    out["model_kind"] = to_string(ModelKind::LogReg);
    params["weights"] = lr->weights();
    params["bias"] = lr->bias();
  } else if (const auto* mlp = dynamic_cast<const MlpModel*>(&model)) {
    out["model_kind"] = to_string(ModelKind::Mlp);
    std::vector<std::size_t> sizes{mlp->dim()};
    json weights = json::array(), biases = json::array();
    for (const auto& layer : mlp->layers()) {
      sizes.push_back(layer.outputs);
      weights.push_back(layer.weights);
      biases.push_back(layer.bias);
    }
    params["layer_sizes"] = sizes;
    params["weights"] = std::move(weights);
    params["biases"] = std::move(biases);
  } else if (const auto* tree = dynamic_cast<const TreeModel*>(&model)) {
    out["model_kind"] = to_string(ModelKind::Tree);
    std::vector<int> feature, left, right;
    std::vector<double> threshold, distribution;
    for (const auto& node : tree->nodes()) {
      feature.push_back(node.feature);
      threshold.push_back(node.threshold);
      left.push_back(node.left);
      right.push_back(node.right);
      if (node.is_leaf()) {
        distribution.insert(distribution.end(), node.distribution.begin(),
                            node.distribution.end());
      } else {
        distribution.insert(distribution.end(), model.num_classes(), 0.0);
      }
    }
    params["feature"] = feature;
    params["threshold"] = threshold;
    params["left"] = left;
    params["right"] = right;
    params["distribution"] = distribution;
  } else {
    throw Error(ErrorCode::InvalidConfig, "model type cannot be serialized");
  }
  out["parameters"] = std::move(params);
  return out.dump(2) + "\n";
}

void save_model(const std::filesystem::path& path, const PredictionModel& model,
                std::uint64_t seed) {
  const std::string text = serialize_model(model, seed);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::MissingFile, "cannot write '" + path.string() + "'");
  }
  out << text;
}

namespace {

template <class T>
T field(const json& obj, const char* name) {
  if (!obj.is_object() || !obj.contains(name)) {
    throw Error(ErrorCode::Corrupt, std::string("missing field '") + name + "'");
  }
  try {
    return obj.at(name).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::Corrupt, std::string("bad field '") + name + "'");
  }
}

std::shared_ptr<const PredictionModel> build_model(ModelKind kind,
                                                   std::size_t k, std::size_t d,
                                                   const json& params) {
  switch (kind) {
    case ModelKind::LogReg:
      return std::make_shared<LogRegModel>(
          k, d, field<std::vector<double>>(params, "weights"),
          field<std::vector<double>>(params, "bias"));
    case ModelKind::Mlp: {
      const auto sizes = field<std::vector<std::size_t>>(params, "layer_sizes");
      const auto weights =
          field<std::vector<std::vector<double>>>(params, "weights");
      const auto biases = field<std::vector<std::vector<double>>>(params, "biases");
      if (sizes.size() < 3 || weights.size() != sizes.size() - 1 ||
          biases.size() != weights.size() || sizes.front() != d ||
          sizes.back() != k) {
        throw Error(ErrorCode::Corrupt, "mlp layer layout is inconsistent");
      }
      std::vector<DenseLayer> layers;
      for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        layers.push_back(DenseLayer{sizes[l], sizes[l + 1], weights[l], biases[l]});
      }
      return std::make_shared<MlpModel>(std::move(layers));
    }
    case ModelKind::Tree: {
      const auto feature = field<std::vector<int>>(params, "feature");
      const auto threshold = field<std::vector<double>>(params, "threshold");
      const auto left = field<std::vector<int>>(params, "left");
      const auto right = field<std::vector<int>>(params, "right");
      const auto dist = field<std::vector<double>>(params, "distribution");
      const std::size_t n = feature.size();
      if (threshold.size() != n || left.size() != n || right.size() != n ||
          dist.size() != n * k) {
        throw Error(ErrorCode::Corrupt, "tree arrays differ in length");
      }
      std::vector<TreeNode> nodes(n);
      for (std::size_t i = 0; i < n; ++i) {
        nodes[i].feature = feature[i];
        nodes[i].threshold = threshold[i];
        nodes[i].left = left[i];
        nodes[i].right = right[i];
        if (nodes[i].is_leaf()) {
          nodes[i].distribution.assign(dist.begin() + i * k,
                                       dist.begin() + (i + 1) * k);
        }
      }
      return std::make_shared<TreeModel>(k, d, std::move(nodes));
    }
  }
  throw Error(ErrorCode::Corrupt, "unknown model kind");
}

}  // namespace

ModelFile parse_model(std::string_view text,
                      std::optional<std::size_t> expected_dim) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Corrupt, std::string("model file: ") + e.what());
  }
  const int version = field<int>(doc, "version");
  if (version != kModelFileVersion) {
    throw Error(ErrorCode::VersionMismatch,
                "model file version " + std::to_string(version) +
                    ", expected " + std::to_string(kModelFileVersion));
  }
  ModelFile file;
  try {
    file.kind = model_kind_from_string(field<std::string>(doc, "model_kind"));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig) {
      throw Error(ErrorCode::Corrupt, e.what());
    }
    throw;
  }
  file.num_classes = field<std::size_t>(doc, "k");
  file.dim = field<std::size_t>(doc, "d");
  file.seed = field<std::uint64_t>(doc, "seed");
  if (!doc.contains("parameters")) {
    throw Error(ErrorCode::Corrupt, "missing field 'parameters'");
  }
  try {
    file.model = build_model(file.kind, file.num_classes, file.dim,
                             doc.at("parameters"));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Corrupt) throw;
    throw Error(ErrorCode::Corrupt, e.what());
  }
  if (expected_dim && *expected_dim != file.dim) {
    throw Error(ErrorCode::ShapeMismatch,
                "model expects d=" + std::to_string(file.dim) +
                    ", dataset has d=" + std::to_string(*expected_dim));
  }
  return file;
}

ModelFile load_model(const std::filesystem::path& path,
                     std::optional<std::size_t> expected_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::MissingFile, "cannot open '" + path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_model(buffer.str(), expected_dim);
}

}  // namespace evadex
