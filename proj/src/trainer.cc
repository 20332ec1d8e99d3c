#include "ria/trainer.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ria/errors.h"
#include "ria/evaluation.h"
#include "ria/logging.h"
#include "ria/relational.h"
#include "ria/run_config.h"
#include "ria/seeding.h"

namespace ria {
namespace {

constexpr std::pair<Method, const char*> kMethodNames[] = {
    {Method::kContextFree, "context_free"},
    {Method::kVanillaContext, "vanilla_context"},
    {Method::kRelationOnly, "relation_only"},
    {Method::kRiaFull, "ria_full"},
    {Method::kTrueLabel, "true_label"},
};

bool UsesRelation(Method method) {
  return method == Method::kRelationOnly || method == Method::kRiaFull ||
         method == Method::kTrueLabel;
}

Matrix2D RowToMatrix(const RowVector& row) {
  Matrix2D m = row;
  return m;
}

RowVector MatrixToRow(const Matrix2D& m, Eigen::Index expected, const std::string& name) {
  if (m.rows() != 1 || m.cols() != expected) {
    throw LoadError("checkpoint tensor '" + name + "' has the wrong shape");
  }
  return m.row(0);
}

}  // namespace

StepGradients ComputeStepGradients(Agent& agent, const TrainingBatch& batch,
                                   const ReplayBuffer& buffer, const TrainConfig& config,
                                   std::mt19937_64& rng) {
  // Ground-truth labels are read before the unsupervised region and only by
  // the method that is allowed to see them.
  std::vector<std::int64_t> relation_ids;
  if (agent.method == Method::kTrueLabel) {
    for (const TransitionSegment& seg : batch.segments) relation_ids.push_back(seg.env_label());
  }

  UnsupervisedScope scope;
  if (agent.method != Method::kTrueLabel) relation_ids = batch.trajectory_ids;

  StepGradients out;
  out.encoder = agent.encoder.ZeroGradients();
  out.relational = agent.relational.ZeroGradients();

  const Eigen::Index n = static_cast<Eigen::Index>(batch.segments.size());
  Matrix2D contexts;
  if (UsesContext(agent.method)) {
    contexts = agent.encoder.Forward(FlattenSegments(batch.segments));
  } else {
    contexts = Matrix2D::Zero(n, agent.context_dim());
  }

  PredictionLossResult pred = PredictionLossWithGrad(agent.dynamics, batch.transitions, contexts);
  out.losses.pred = pred.loss;
  out.head = std::move(pred.head);
  Matrix2D context_grad = std::move(pred.context_grad);

  if (UsesRelation(agent.method)) {
    const Matrix2D labels = SameGroupLabels(relation_ids);
    std::optional<InterventionStep> intervention;
    if (agent.method == Method::kRiaFull) {
      const MediatorBatch mediators = buffer.SampleMediators(config.cde.mediator_batch, rng);
      intervention = ComputeInterventionStep(agent.dynamics, contexts, batch.trajectory_ids,
                                             mediators, config.cde, true, true);
      out.losses.dist = intervention->dist_loss;
      out.head += intervention->head;
      context_grad += intervention->context_grad;
    }
    RelationLossResult rel = RelationLossWithGrad(
        agent.relational, contexts, labels,
        intervention ? &intervention->similarity.w : nullptr);
    out.losses.relation = rel.loss;
    out.relational = std::move(rel.head);
    context_grad += rel.context_grad;
  }

  if (UsesContext(agent.method)) {
    out.encoder = agent.encoder.Backward(context_grad);
    agent.encoder.ClearCache();
  }
  out.losses.total = out.losses.pred + out.losses.relation + out.losses.dist;
  if (!std::isfinite(out.losses.total)) {
    throw DivergedTraining("total loss is not finite");
  }
  return out;
}

namespace {

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

void AppendTextFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string ToString(Method method) {
  for (const auto& [m, name] : kMethodNames) {
    if (m == method) return name;
  }
  throw UsageError("unknown method");
}

Method MethodFromString(const std::string& name) {
  for (const auto& [m, n] : kMethodNames) {
    if (name == n) return m;
  }
  throw ConfigError("unknown method '" + name +
                    "' (expected context_free, vanilla_context, relation_only, "
                    "ria_full or true_label)");
}

bool UsesContext(Method method) { return method != Method::kContextFree; }

bool UsesEnvLabels(Method method) { return method == Method::kTrueLabel; }

void TrainConfig::Validate() const {
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (trajectories_per_epoch < 1) throw ConfigError("trajectories_per_epoch must be positive");
  if (grad_steps_per_epoch < 0) throw ConfigError("grad_steps_per_epoch must be non-negative");
  if (batch_size < 2 || batch_size % 2 != 0) {
    throw ConfigError("batch_size must be even and at least 2");
  }
  if (k < 1) throw ConfigError("k must be positive");
  if (context_dim < 1) throw ConfigError("context_dim must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (encoder_hidden < 1 || encoder_layers < 1 || head_hidden < 1 || head_layers < 1 ||
      relational_hidden < 1) {
    throw ConfigError("network widths and depths must be positive");
  }
  if (exploration_fraction < 0.0) throw ConfigError("exploration_fraction must be non-negative");
  if (metric_transitions < 1) throw ConfigError("metric_transitions must be positive");
  cde.Validate();
  cem.Validate();
}

TrainConfig DefaultTrainConfig(const EnvFamily& family) {
  TrainConfig config;
  config.cde.beta = family.beta;
  config.cem = CemConfigFor(family.kind);
  return config;
}

Matrix2D Agent::EncodeContexts(std::span<const TransitionSegment> segments) const {
  if (!UsesContext(method)) {
    return Matrix2D::Zero(static_cast<Eigen::Index>(segments.size()), context_dim());
  }
  if (segments.empty()) return Matrix2D(0, context_dim());
  return EncodeBatch(segments, encoder);
}

Agent MakeAgent(EnvKind kind, const TrainConfig& config, std::mt19937_64& rng) {
  config.Validate();
  const int sd = StateDim(kind);
  const int ad = ActionDim(kind);
  Agent agent;
  agent.kind = kind;
  agent.method = config.method;
  agent.k = config.k;
  agent.encoder = MakeEncoder(config.k, sd, ad, config.context_dim, config.encoder_hidden,
                              config.encoder_layers);
  agent.dynamics =
      DynamicsModel(sd, ad, config.context_dim, config.head_hidden, config.head_layers);
  agent.relational = MakeRelationalHead(config.context_dim, config.relational_hidden);
  agent.encoder.InitGlorot(rng);
  agent.dynamics.net().InitGlorot(rng);
  agent.relational.InitGlorot(rng);
  AdamConfig adam;
  adam.learning_rate = config.learning_rate;
  adam.clip_norm = config.clip_norm;
  agent.adam = Adam(adam);
  return agent;
}

Checkpoint AgentToCheckpoint(const Agent& agent) {
  Checkpoint ckpt;
  ckpt.meta["kind"] = ToString(agent.kind);
  ckpt.meta["method"] = ToString(agent.method);
  ckpt.meta["k"] = agent.k;
  ckpt.meta["state_dim"] = agent.dynamics.state_dim();
  ckpt.meta["action_dim"] = agent.dynamics.action_dim();
  ckpt.meta["context_dim"] = agent.context_dim();
  ckpt.meta["normalizer_count"] = agent.dynamics.normalizer().count;
  ckpt.AddMlp("encoder", agent.encoder);
  ckpt.AddMlp("dynamics", agent.dynamics.net());
  ckpt.AddMlp("relational", agent.relational);
  const Normalizer& norm = agent.dynamics.normalizer();
  ckpt.Add("normalizer/state_mean", RowToMatrix(norm.state_mean));
  ckpt.Add("normalizer/state_std", RowToMatrix(norm.state_std));
  ckpt.Add("normalizer/action_mean", RowToMatrix(norm.action_mean));
  ckpt.Add("normalizer/action_std", RowToMatrix(norm.action_std));
  ckpt.Add("normalizer/delta_std", RowToMatrix(norm.delta_std));
  return ckpt;
}

Agent AgentFromCheckpoint(const Checkpoint& checkpoint) {
  Agent agent;
  int sd = 0, ad = 0, cd = 0;
  try {
    const nlohmann::json& meta = checkpoint.meta;
    agent.kind = EnvKindFromString(meta.at("kind").get<std::string>());
    agent.method = MethodFromString(meta.at("method").get<std::string>());
    agent.k = meta.at("k").get<int>();
    sd = meta.at("state_dim").get<int>();
    ad = meta.at("action_dim").get<int>();
    cd = meta.at("context_dim").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("checkpoint metadata is incomplete: ") + e.what());
  } catch (const ConfigError& e) {
    throw LoadError(std::string("checkpoint metadata is invalid: ") + e.what());
  }
  if (sd != StateDim(agent.kind) || ad != ActionDim(agent.kind) || cd < 1 || agent.k < 1) {
    throw LoadError("checkpoint dimensions do not match its environment kind");
  }

  Normalizer norm;
  norm.state_mean = MatrixToRow(checkpoint.Get("normalizer/state_mean"), sd, "state_mean");
  norm.state_std = MatrixToRow(checkpoint.Get("normalizer/state_std"), sd, "state_std");
  norm.action_mean = MatrixToRow(checkpoint.Get("normalizer/action_mean"), ad, "action_mean");
  norm.action_std = MatrixToRow(checkpoint.Get("normalizer/action_std"), ad, "action_std");
  norm.delta_std = MatrixToRow(checkpoint.Get("normalizer/delta_std"), sd, "delta_std");
  norm.count = checkpoint.meta.value("normalizer_count", std::int64_t{0});

  agent.encoder = checkpoint.GetMlp("encoder");
  Mlp head = checkpoint.GetMlp("dynamics");
  agent.relational = checkpoint.GetMlp("relational");
  if (agent.encoder.input_dim() != agent.k * (sd + ad) || agent.encoder.output_dim() != cd) {
    throw LoadError("encoder shape does not match the checkpoint metadata");
  }
  if (head.input_dim() != sd + ad + cd || head.output_dim() != sd) {
    throw LoadError("dynamics head shape does not match the checkpoint metadata");
  }
  if (agent.relational.input_dim() != 2 * cd || agent.relational.output_dim() != 1) {
    throw LoadError("relational head shape does not match the checkpoint metadata");
  }
  agent.dynamics = DynamicsModel(std::move(head), std::move(norm), sd, ad, cd);
  return agent;
}

void ReplayBuffer::Add(Trajectory trajectory) {
  if (!trajectory.IsConsistent()) throw ConfigError("inconsistent trajectory");
  total_transitions_ += trajectory.num_steps();
  cumulative_.push_back(total_transitions_);
  trajectories_.push_back(std::move(trajectory));
}

MediatorBatch ReplayBuffer::SampleMediators(int count, std::mt19937_64& rng) const {
  if (count < 1) throw ConfigError("mediator count must be positive");
  if (total_transitions_ == 0) throw ConfigError("cannot sample mediators from an empty buffer");
  const Eigen::Index sd = trajectories_.front().states.front().size();
  const Eigen::Index ad = trajectories_.front().actions.front().size();
  MediatorBatch batch{Matrix2D(count, sd), Matrix2D(count, ad)};
  std::uniform_int_distribution<std::size_t> pick(0, total_transitions_ - 1);
  for (int i = 0; i < count; ++i) {
    const std::size_t flat = pick(rng);
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), flat);
    const std::size_t traj = static_cast<std::size_t>(it - cumulative_.begin());
    const std::size_t before = traj == 0 ? 0 : cumulative_[traj - 1];
    const std::size_t t = flat - before;
    batch.states.row(i) = trajectories_[traj].states[t].transpose();
    batch.actions.row(i) = trajectories_[traj].actions[t].transpose();
  }
  return batch;
}

TrainingBatch SampleTrainingBatch(const ReplayBuffer& buffer, int batch_size, int k,
                                  std::mt19937_64& rng) {
  if (batch_size < 2 || batch_size % 2 != 0) {
    throw ConfigError("batch_size must be even and at least 2");
  }
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    if (static_cast<int>(buffer.trajectories()[i].num_steps()) >= k + 1) eligible.push_back(i);
  }
  if (eligible.empty()) {
    throw ConfigError("replay buffer has no trajectory with at least k + 1 steps");
  }

  const std::size_t wanted = static_cast<std::size_t>(batch_size / 2);
  std::vector<std::size_t> chosen;
  chosen.reserve(wanted);
  if (eligible.size() >= wanted) {
    // Partial Fisher-Yates: distinct trajectories when the buffer allows it.
    for (std::size_t i = 0; i < wanted; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, eligible.size() - 1);
      std::swap(eligible[i], eligible[pick(rng)]);
      chosen.push_back(eligible[i]);
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
    for (std::size_t i = 0; i < wanted; ++i) chosen.push_back(eligible[pick(rng)]);
  }

  const Trajectory& first = buffer.trajectories()[chosen.front()];
  const Eigen::Index sd = first.states.front().size();
  const Eigen::Index ad = first.actions.front().size();
  TrainingBatch batch;
  batch.segments.reserve(batch_size);
  batch.trajectory_ids.reserve(batch_size);
  batch.transitions.states.resize(batch_size, sd);
  batch.transitions.actions.resize(batch_size, ad);
  batch.transitions.next_states.resize(batch_size, sd);
  Eigen::Index row = 0;
  for (std::size_t idx : chosen) {
    const Trajectory& traj = buffer.trajectories()[idx];
    for (TransitionSegment& seg : BuildSegments(traj, k, 2, rng, /*require_target=*/true)) {
      const int t = seg.anchor_t();
      batch.transitions.states.row(row) = traj.states[t].transpose();
      batch.transitions.actions.row(row) = traj.actions[t].transpose();
      batch.transitions.next_states.row(row) = traj.states[t + 1].transpose();
      batch.trajectory_ids.push_back(traj.id());
      batch.segments.push_back(std::move(seg));
      ++row;
    }
  }
  return batch;
}

LossBreakdown EvaluateLosses(Agent& agent, const TrainingBatch& batch,
                             const ReplayBuffer& buffer, const TrainConfig& config,
                             std::mt19937_64& rng) {
  return ComputeStepGradients(agent, batch, buffer, config, rng).losses;
}

LossBreakdown TrainStep(Agent& agent, const ReplayBuffer& buffer, const TrainConfig& config,
                        std::mt19937_64& rng) {
  const TrainingBatch batch = SampleTrainingBatch(buffer, config.batch_size, agent.k, rng);
  StepGradients grads = ComputeStepGradients(agent, batch, buffer, config, rng);
  std::vector<ParamSlot> slots = agent.encoder.Slots(grads.encoder);
  for (const ParamSlot& s : agent.dynamics.net().Slots(grads.head)) slots.push_back(s);
  for (const ParamSlot& s : agent.relational.Slots(grads.relational)) slots.push_back(s);
  agent.adam.Step(slots);
  agent.dynamics.net().ClearCache();
  agent.relational.ClearCache();
  return grads.losses;
}

TrainResult TrainRun(const EnvFamily& family, const TrainConfig& config,
                     const RunOutputs& outputs) {
  family.Validate();
  config.Validate();
  if (family.episode_length < config.k + 1) {
    throw ConfigError("episodes must be longer than the segment length");
  }

  std::mt19937_64 init_rng(DeriveSeed(config.seed, SeedStream::kInit));
  std::mt19937_64 env_rng(DeriveSeed(config.seed, SeedStream::kEnvSampling));
  std::mt19937_64 batch_rng(DeriveSeed(config.seed, SeedStream::kBatches));
  const std::uint64_t collection_seed = DeriveSeed(config.seed, SeedStream::kCollection);

  TrainResult result{MakeAgent(family.kind, config, init_rng), {}, {}};
  Agent& agent = result.agent;
  const HeldOutSet train_set =
      CollectHeldOut(family.train_params, config.metric_transitions, config.k,
                     family.episode_length, DeriveSeed(config.seed, SeedStream::kHeldOutTrain));
  const HeldOutSet test_set =
      CollectHeldOut(family.test_params, config.metric_transitions, config.k,
                     family.episode_length, DeriveSeed(config.seed, SeedStream::kHeldOutTest));

  std::filesystem::path dir;
  if (outputs.out_dir) {
    dir = *outputs.out_dir;
    std::filesystem::create_directories(dir / "checkpoints");
    RunConfig run{family.name, config, dir.string()};
    nlohmann::json doc = ToJson(run);
    doc["resolved_seeds"] = {
        {"init", DeriveSeed(config.seed, SeedStream::kInit)},
        {"env_sampling", DeriveSeed(config.seed, SeedStream::kEnvSampling)},
        {"collection", collection_seed},
        {"batches", DeriveSeed(config.seed, SeedStream::kBatches)},
        {"held_out_train", DeriveSeed(config.seed, SeedStream::kHeldOutTrain)},
        {"held_out_test", DeriveSeed(config.seed, SeedStream::kHeldOutTest)},
    };
    WriteTextFile(dir / "config.json", doc.dump(2) + "\n");
    WriteTextFile(dir / "metrics.csv", MetricsCsvHeader() + "\n");
    WriteTextFile(dir / "trajectories.ndjson", "");
  }

  auto save_checkpoint = [&](int epoch) {
    if (!outputs.out_dir || !outputs.checkpoint_every_epoch) return;
    Checkpoint ckpt = AgentToCheckpoint(agent);
    ckpt.meta["family"] = family.name;
    ckpt.meta["epoch"] = epoch;
    ckpt.meta["train_config"] = ToJson(config);
    SaveCheckpoint(ckpt, dir / "checkpoints" / ("epoch_" + std::to_string(epoch) + ".json"));
  };
  auto record = [&](const EpochMetrics& row) {
    result.metrics.push_back(row);
    if (outputs.out_dir) AppendTextFile(dir / "metrics.csv", MetricsCsvRow(row) + "\n");
    if (outputs.on_epoch) outputs.on_epoch(row);
  };

  {
    EpochMetrics row;
    row.epoch = 0;
    row.train_mse = HeldOutMse(agent, train_set);
    row.test_mse = HeldOutMse(agent, test_set);
    record(row);
    save_checkpoint(0);
  }

  MpcOptions mpc;
  mpc.k = config.k;
  mpc.use_context = UsesContext(config.method);
  mpc.exploration_fraction = config.exploration_fraction;
  mpc.episode_length = family.episode_length;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const std::size_t first_new = result.buffer.size();
    double return_sum = 0.0;
    for (int i = 0; i < config.trajectories_per_epoch; ++i) {
      const std::int64_t id =
          static_cast<std::int64_t>(epoch - 1) * config.trajectories_per_epoch + i;
      const std::size_t env_index = SampleTrainingEnvIndex(family, env_rng);
      mpc.trajectory_id = id;
      mpc.env_label = static_cast<int>(env_index);
      Trajectory traj = MpcEpisode(family.train_params[env_index], agent.dynamics,
                                   agent.encoder, config.cem,
                                   DeriveSeed(collection_seed, static_cast<std::uint64_t>(id)), mpc);
      return_sum += traj.Return();
      result.buffer.Add(std::move(traj));
    }
    agent.dynamics.normalizer() = Normalizer::Fit(result.buffer.trajectories(),
                                                  agent.dynamics.state_dim(),
                                                  agent.dynamics.action_dim());

    LossBreakdown mean;
    for (int step = 0; step < config.grad_steps_per_epoch; ++step) {
      const LossBreakdown l = TrainStep(agent, result.buffer, config, batch_rng);
      mean.pred += l.pred;
      mean.relation += l.relation;
      mean.dist += l.dist;
    }
    if (config.grad_steps_per_epoch > 0) {
      const double n = static_cast<double>(config.grad_steps_per_epoch);
      mean.pred /= n;
      mean.relation /= n;
      mean.dist /= n;
    }
    mean.total = mean.pred + mean.relation + mean.dist;

    EpochMetrics row;
    row.epoch = epoch;
    row.losses = mean;
    row.train_mse = HeldOutMse(agent, train_set);
    row.test_mse = HeldOutMse(agent, test_set);
    row.mean_return_train_envs = return_sum / config.trajectories_per_epoch;
    record(row);

    if (outputs.out_dir) {
      std::ofstream out(dir / "trajectories.ndjson", std::ios::binary | std::ios::app);
      const auto& all = result.buffer.trajectories();
      WriteTrajectoriesNdjson(out, std::span<const Trajectory>(all).subspan(first_new));
    }
    save_checkpoint(epoch);
    std::ostringstream msg;
    msg << ToString(config.method) << " epoch " << epoch << "/" << config.epochs
        << ": loss " << FormatNumber(mean.total) << ", test mse "
        << FormatNumber(row.test_mse) << ", return " << FormatNumber(*row.mean_return_train_envs);
    Info(msg.str());
  }
  return result;
}

std::string MetricsCsvHeader() {
  return "epoch,l_pred,l_relation,l_dist,l_total,train_mse,test_mse,mean_return_train_envs";
}

std::string MetricsCsvRow(const EpochMetrics& row) {
  std::string out = std::to_string(row.epoch);
  auto field = [&out](const std::optional<double>& v) {
    out += ',';
    if (v) out += FormatNumber(*v);
  };
  const std::optional<LossBreakdown>& l = row.losses;
  field(l ? std::optional<double>(l->pred) : std::nullopt);
  field(l ? std::optional<double>(l->relation) : std::nullopt);
  field(l ? std::optional<double>(l->dist) : std::nullopt);
  field(l ? std::optional<double>(l->total) : std::nullopt);
  field(row.train_mse);
  field(row.test_mse);
  field(row.mean_return_train_envs);
  return out;
}

}  // namespace ria
