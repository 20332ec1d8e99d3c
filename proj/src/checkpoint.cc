#include "ria/checkpoint.h"

#include <fstream>

#include "ria/errors.h"

namespace ria {

using nlohmann::json;

void Checkpoint::Add(std::string name, Matrix2D values) {
  if (Has(name)) throw ConfigError("duplicate checkpoint tensor '" + name + "'");
  tensors.push_back({std::move(name), std::move(values)});
}

bool Checkpoint::Has(const std::string& name) const {
  for (const NamedTensor& t : tensors) {
    if (t.name == name) return true;
  }
  return false;
}

const Matrix2D& Checkpoint::Get(const std::string& name) const {
  for (const NamedTensor& t : tensors) {
    if (t.name == name) return t.values;
  }
  throw LoadError("checkpoint has no tensor '" + name + "'");
}

void Checkpoint::AddMlp(const std::string& prefix, const Mlp& net) {
  meta["networks"][prefix] = {
      {"layer_dims", net.layer_dims()},
      {"activation", ToString(net.activation())},
      {"output_activation", ToString(net.output_activation())}};
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    Add(prefix + "/w" + std::to_string(i), net.weights()[i]);
    Add(prefix + "/b" + std::to_string(i), Matrix2D(net.biases()[i]));
  }
}

Mlp Checkpoint::GetMlp(const std::string& prefix) const {
  if (!meta.contains("networks") || !meta["networks"].contains(prefix)) {
    throw LoadError("checkpoint has no network '" + prefix + "'");
  }
  const json& arch = meta["networks"][prefix];
  Mlp net;
  try {
    net = Mlp(arch.at("layer_dims").get<std::vector<int>>(),
              ActivationFromString(arch.at("activation").get<std::string>()),
              OutputActivationFromString(
                  arch.at("output_activation").get<std::string>()));
  } catch (const json::exception& e) {
    throw LoadError("malformed architecture for '" + prefix + "': " + e.what());
  } catch (const ConfigError& e) {
    throw LoadError("invalid architecture for '" + prefix + "': " + e.what());
  }
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    const Matrix2D& w = Get(prefix + "/w" + std::to_string(i));
    const Matrix2D& b = Get(prefix + "/b" + std::to_string(i));
    if (w.rows() != net.weights()[i].rows() ||
        w.cols() != net.weights()[i].cols() || b.rows() != 1 ||
        b.cols() != net.biases()[i].size()) {
      throw LoadError("tensor shape mismatch in network '" + prefix + "'");
    }
    net.weights()[i] = w;
    net.biases()[i] = b.row(0);
  }
  return net;
}

json CheckpointToJson(const Checkpoint& checkpoint) {
  json tensors = json::array();
  for (const NamedTensor& t : checkpoint.tensors) {
    std::vector<double> values(t.values.data(), t.values.data() + t.values.size());
    tensors.push_back({{"name", t.name},
                       {"shape", {t.values.rows(), t.values.cols()}},
                       {"values", std::move(values)}});
  }
  return {{"format", "ria-checkpoint"},
          {"version", 1},
          {"meta", checkpoint.meta},
          {"tensors", std::move(tensors)}};
}

Checkpoint CheckpointFromJson(const json& doc) {
  Checkpoint checkpoint;
  try {
    if (doc.at("format").get<std::string>() != "ria-checkpoint") {
      throw LoadError("not a ria checkpoint");
    }
    if (doc.at("version").get<int>() != 1) {
      throw LoadError("unsupported checkpoint version");
    }
    checkpoint.meta = doc.at("meta");
    for (const json& t : doc.at("tensors")) {
      const auto shape = t.at("shape").get<std::vector<Eigen::Index>>();
      const auto values = t.at("values").get<std::vector<double>>();
      if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0 ||
          static_cast<std::size_t>(shape[0] * shape[1]) != values.size()) {
        throw LoadError("tensor '" + t.at("name").get<std::string>() +
                        "' has inconsistent shape");
      }
      Matrix2D m(shape[0], shape[1]);
      std::copy(values.begin(), values.end(), m.data());
      checkpoint.Add(t.at("name").get<std::string>(), std::move(m));
    }
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed checkpoint: ") + e.what());
  }
  return checkpoint;
}

void SaveCheckpoint(const Checkpoint& checkpoint,
                    const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());
  out << CheckpointToJson(checkpoint).dump() << '\n';
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open checkpoint " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw LoadError("cannot parse checkpoint " + path.string() + ": " + e.what());
  }
  return CheckpointFromJson(doc);
}

}  // namespace ria
