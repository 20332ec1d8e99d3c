#ifndef RIA_RUN_CONFIG_H_
#define RIA_RUN_CONFIG_H_

#include <filesystem>
#include <string>

#include "json.hpp"
#include "ria/environments.h"
#include "ria/trainer.h"

namespace ria {

// Everything needed to reproduce one run.
struct RunConfig {
  std::string family = "pendulum";
  TrainConfig train;
  std::string out_dir;
};

nlohmann::json ToJson(const TrainConfig& config);
TrainConfig TrainConfigFromJson(const nlohmann::json& doc);
nlohmann::json ToJson(const RunConfig& config);
RunConfig RunConfigFromJson(const nlohmann::json& doc);

void WriteRunConfig(const RunConfig& config, const std::filesystem::path& path);
RunConfig ReadRunConfig(const std::filesystem::path& path);

// Reduced network widths, planner budget and run length that keep a full
// pendulum run within a few minutes on one CPU core.
void ApplyDeskProfile(TrainConfig& config);

// Fixed-precision number formatting used by every CSV writer.
std::string FormatNumber(double value);

}  // namespace ria

#endif  // RIA_RUN_CONFIG_H_
