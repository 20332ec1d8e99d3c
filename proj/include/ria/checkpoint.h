#ifndef RIA_CHECKPOINT_H_
#define RIA_CHECKPOINT_H_

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "ria/matrix.h"
#include "ria/mlp.h"

namespace ria {

struct NamedTensor {
  std::string name;
  Matrix2D values;
};

// A checkpoint is free-form metadata plus an ordered list of named, shaped,
// row-major tensors. On disk:
//   {"format": "ria-checkpoint", "version": 1, "meta": {...},
//    "tensors": [{"name": ..., "shape": [rows, cols], "values": [...]}]}
// Doubles are written in shortest round-trip form so loading is bit-exact.
struct Checkpoint {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedTensor> tensors;

  void Add(std::string name, Matrix2D values);
  bool Has(const std::string& name) const;
  const Matrix2D& Get(const std::string& name) const;

  // Stores weights/biases as "<prefix>/w<i>", "<prefix>/b<i>" and the
  // architecture under meta["networks"][prefix].
  void AddMlp(const std::string& prefix, const Mlp& net);
  Mlp GetMlp(const std::string& prefix) const;
};

nlohmann::json CheckpointToJson(const Checkpoint& checkpoint);
Checkpoint CheckpointFromJson(const nlohmann::json& doc);

void SaveCheckpoint(const Checkpoint& checkpoint,
                    const std::filesystem::path& path);
// Throws LoadError if the file is missing or malformed.
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace ria

#endif  // RIA_CHECKPOINT_H_
