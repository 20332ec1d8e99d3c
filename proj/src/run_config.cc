#include "ria/run_config.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "ria/errors.h"

namespace ria {

nlohmann::json ToJson(const TrainConfig& c) {
  return {
      {"method", ToString(c.method)},
      {"seed", c.seed},
      {"epochs", c.epochs},
      {"trajectories_per_epoch", c.trajectories_per_epoch},
      {"grad_steps_per_epoch", c.grad_steps_per_epoch},
      {"batch_size", c.batch_size},
      {"k", c.k},
      {"context_dim", c.context_dim},
      {"learning_rate", c.learning_rate},
      {"clip_norm", c.clip_norm},
      {"encoder_hidden", c.encoder_hidden},
      {"encoder_layers", c.encoder_layers},
      {"head_hidden", c.head_hidden},
      {"head_layers", c.head_layers},
      {"relational_hidden", c.relational_hidden},
      {"exploration_fraction", c.exploration_fraction},
      {"metric_transitions", c.metric_transitions},
      {"cde",
       {{"beta", c.cde.beta},
        {"mediator_batch", c.cde.mediator_batch},
        {"normalize_by_batch_variance", c.cde.normalize_by_batch_variance}}},
      {"cem",
       {{"horizon", c.cem.horizon},
        {"candidates", c.cem.candidates},
        {"iterations", c.cem.iterations},
        {"elites", c.cem.elites},
        {"init_std", c.cem.init_std},
        {"action_low", c.cem.action_low},
        {"action_high", c.cem.action_high},
        {"gamma", c.cem.gamma}}},
  };
}

TrainConfig TrainConfigFromJson(const nlohmann::json& doc) {
  TrainConfig c;
  try {
    c.method = MethodFromString(doc.at("method").get<std::string>());
    c.seed = doc.at("seed").get<std::uint64_t>();
    c.epochs = doc.at("epochs").get<int>();
    c.trajectories_per_epoch = doc.at("trajectories_per_epoch").get<int>();
    c.grad_steps_per_epoch = doc.at("grad_steps_per_epoch").get<int>();
    c.batch_size = doc.at("batch_size").get<int>();
    c.k = doc.at("k").get<int>();
    c.context_dim = doc.at("context_dim").get<int>();
    c.learning_rate = doc.at("learning_rate").get<double>();
    c.clip_norm = doc.at("clip_norm").get<double>();
    c.encoder_hidden = doc.at("encoder_hidden").get<int>();
    c.encoder_layers = doc.at("encoder_layers").get<int>();
    c.head_hidden = doc.at("head_hidden").get<int>();
    c.head_layers = doc.at("head_layers").get<int>();
    c.relational_hidden = doc.at("relational_hidden").get<int>();
    c.exploration_fraction = doc.at("exploration_fraction").get<double>();
    c.metric_transitions = doc.at("metric_transitions").get<int>();
    const nlohmann::json& cde = doc.at("cde");
    c.cde.beta = cde.at("beta").get<double>();
    c.cde.mediator_batch = cde.at("mediator_batch").get<int>();
    c.cde.normalize_by_batch_variance = cde.at("normalize_by_batch_variance").get<bool>();
    const nlohmann::json& cem = doc.at("cem");
    c.cem.horizon = cem.at("horizon").get<int>();
    c.cem.candidates = cem.at("candidates").get<int>();
    c.cem.iterations = cem.at("iterations").get<int>();
    c.cem.elites = cem.at("elites").get<int>();
    c.cem.init_std = cem.at("init_std").get<double>();
    c.cem.action_low = cem.at("action_low").get<double>();
    c.cem.action_high = cem.at("action_high").get<double>();
    c.cem.gamma = cem.at("gamma").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed train config: ") + e.what());
  }
  c.Validate();
  return c;
}

nlohmann::json ToJson(const RunConfig& config) {
  return {{"family", config.family}, {"out_dir", config.out_dir}, {"train", ToJson(config.train)}};
}

RunConfig RunConfigFromJson(const nlohmann::json& doc) {
  RunConfig config;
  try {
    config.family = doc.at("family").get<std::string>();
    config.out_dir = doc.value("out_dir", std::string());
    config.train = TrainConfigFromJson(doc.at("train"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed run config: ") + e.what());
  }
  FamilyByName(config.family);  // rejects unknown families
  return config;
}

void WriteRunConfig(const RunConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << ToJson(config).dump(2) << "\n";
}

RunConfig ReadRunConfig(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return RunConfigFromJson(doc);
}

void ApplyDeskProfile(TrainConfig& config) {
  config.epochs = 10;
  config.grad_steps_per_epoch = 100;
  config.batch_size = 128;
  config.encoder_hidden = 64;
  config.head_hidden = 64;
  config.metric_transitions = 500;
  config.cem.horizon = 15;
  config.cem.candidates = 100;
  config.cem.iterations = 3;
  config.cem.elites = 10;
}

std::string FormatNumber(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", value);
  return buf;
}

}  // namespace ria
