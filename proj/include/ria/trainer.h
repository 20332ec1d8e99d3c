#ifndef RIA_TRAINER_H_
#define RIA_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ria/adam.h"
#include "ria/checkpoint.h"
#include "ria/dynamics.h"
#include "ria/environments.h"
#include "ria/intervention.h"
#include "ria/mlp.h"
#include "ria/planner.h"
#include "ria/segments.h"

namespace ria {

enum class Method {
  kContextFree,     // z = 0, prediction loss only
  kVanillaContext,  // learned z, prediction loss only
  kRelationOnly,    // + relation loss on trajectory labels
  kRiaFull,         // + intervention relation loss and same-trajectory CDE loss
  kTrueLabel,       // + relation loss on ground-truth environment labels
};

std::string ToString(Method method);
Method MethodFromString(const std::string& name);
bool UsesContext(Method method);
bool UsesEnvLabels(Method method);

struct TrainConfig {
  Method method = Method::kRiaFull;
  std::uint64_t seed = 0;

  int epochs = 20;
  int trajectories_per_epoch = 10;
  int grad_steps_per_epoch = 200;
  int batch_size = 256;
  int k = kDefaultSegmentLength;
  int context_dim = kDefaultContextDim;

  double learning_rate = 1e-3;
  double clip_norm = 10.0;

  int encoder_hidden = 128;
  int encoder_layers = 3;
  int head_hidden = 200;
  int head_layers = 4;
  int relational_hidden = 10;

  // Std of exploration noise on executed actions during collection, as a
  // fraction of the action range.
  double exploration_fraction = 0.1;
  // Held-out transitions per split for the per-epoch train/test MSE.
  int metric_transitions = 1000;

  CdeConfig cde;
  CemConfig cem;

  void Validate() const;
};

// Defaults for a family: beta and action bounds come from the family.
TrainConfig DefaultTrainConfig(const EnvFamily& family);

// The three learnable functions and their optimizer.
struct Agent {
  EnvKind kind = EnvKind::kPendulum;
  Method method = Method::kRiaFull;
  int k = kDefaultSegmentLength;

  Mlp encoder;
  DynamicsModel dynamics;
  Mlp relational;
  Adam adam;

  int context_dim() const { return dynamics.context_dim(); }
  // Contexts for a batch of segments (zeros for context-free agents).
  Matrix2D EncodeContexts(std::span<const TransitionSegment> segments) const;
};

Agent MakeAgent(EnvKind kind, const TrainConfig& config, std::mt19937_64& rng);
Checkpoint AgentToCheckpoint(const Agent& agent);
// Throws LoadError on missing tensors or inconsistent metadata.
Agent AgentFromCheckpoint(const Checkpoint& checkpoint);

// Append-only store of collected trajectories.
class ReplayBuffer {
 public:
  void Add(Trajectory trajectory);
  const std::vector<Trajectory>& trajectories() const { return trajectories_; }
  std::size_t size() const { return trajectories_.size(); }
  std::size_t num_transitions() const { return total_transitions_; }

  // Mediator (s_t, a_t) pairs sampled uniformly over all stored transitions.
  MediatorBatch SampleMediators(int count, std::mt19937_64& rng) const;

 private:
  std::vector<Trajectory> trajectories_;
  std::vector<std::size_t> cumulative_;
  std::size_t total_transitions_ = 0;
};

struct LossBreakdown {
  double pred = 0.0;
  double relation = 0.0;  // L^relation or L^{i-relation}, depending on method
  double dist = 0.0;
  double total = 0.0;
};

// Segments and targets of one training minibatch: batch_size / 2
// trajectories, two segments each, plus the transition right after each
// segment.
struct TrainingBatch {
  std::vector<TransitionSegment> segments;
  std::vector<std::int64_t> trajectory_ids;
  TransitionBatch transitions;
};

TrainingBatch SampleTrainingBatch(const ReplayBuffer& buffer, int batch_size,
                                  int k, std::mt19937_64& rng);

// Loss values and gradients of every active term of the agent's method on
// one batch. Parameters are not changed. Labels for true_label are read
// before the unsupervised scope is entered.
struct StepGradients {
  LossBreakdown losses;
  MlpGradients encoder;
  MlpGradients head;
  MlpGradients relational;
};

StepGradients ComputeStepGradients(Agent& agent, const TrainingBatch& batch,
                                   const ReplayBuffer& buffer, const TrainConfig& config,
                                   std::mt19937_64& rng);

// Losses of the agent's method on one batch without updating anything.
LossBreakdown EvaluateLosses(Agent& agent, const TrainingBatch& batch,
                             const ReplayBuffer& buffer, const TrainConfig& config,
                             std::mt19937_64& rng);

// One joint Adam step on encoder, dynamics head and relational head.
// Throws DivergedTraining on a non-finite total loss.
LossBreakdown TrainStep(Agent& agent, const ReplayBuffer& buffer,
                        const TrainConfig& config, std::mt19937_64& rng);

struct EpochMetrics {
  int epoch = 0;
  // Absent for epoch 0, which measures the untrained agent.
  std::optional<LossBreakdown> losses;
  double train_mse = 0.0;
  double test_mse = 0.0;
  std::optional<double> mean_return_train_envs;
};

struct TrainResult {
  Agent agent;
  ReplayBuffer buffer;
  std::vector<EpochMetrics> metrics;
};

struct RunOutputs {
  // When set, config.json, metrics.csv, trajectories.ndjson and
  // checkpoints/epoch_<n>.json are written under this directory.
  std::optional<std::filesystem::path> out_dir;
  bool checkpoint_every_epoch = true;
  std::function<void(const EpochMetrics&)> on_epoch;
};

TrainResult TrainRun(const EnvFamily& family, const TrainConfig& config,
                     const RunOutputs& outputs = {});

std::string MetricsCsvHeader();
std::string MetricsCsvRow(const EpochMetrics& row);

}  // namespace ria

#endif  // RIA_TRAINER_H_
