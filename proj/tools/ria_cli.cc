// Command-line entry point: train, eval, ablate and export.
//
// Exit codes: 0 success, 1 unexpected failure, 2 usage / configuration /
// checkpoint error, 3 diverged training. Failures print a one-line JSON error
// record to stderr (and to <out>/error.json when an output directory is known).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ria/checkpoint.h"
#include "ria/environments.h"
#include "ria/errors.h"
#include "ria/evaluation.h"
#include "ria/experiment.h"
#include "ria/logging.h"
#include "ria/run_config.h"
#include "ria/segments.h"
#include "ria/trainer.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;

// Overrides shared by train and ablate; only flags given on the command line
// are applied.
struct Overrides {
  std::string profile = "paper";
  int epochs = 0, k = 0, batch_size = 0, horizon = 0, candidates = 0, grad_steps = 0;
  int trajectories = 0, iterations = 0, elites = 0, head_hidden = 0, encoder_hidden = 0;
  int mediators = 0, metric_transitions = 0;
  double beta = 0.0, lr = 0.0, exploration = 0.0;
  std::vector<std::pair<CLI::Option*, std::function<void(ria::TrainConfig&)>>> setters;

  void Register(CLI::App* cmd) {
    cmd->add_option("--profile", profile, "paper (defaults) or desk (reduced budget)")
        ->check(CLI::IsMember({"paper", "desk"}));
    auto add = [&](const char* flag, auto& field, const char* help, auto apply) {
      setters.emplace_back(cmd->add_option(flag, field, help), apply);
    };
    add("--epochs", epochs, "training epochs", [this](auto& c) { c.epochs = epochs; });
    add("--grad-steps", grad_steps, "gradient steps per epoch",
        [this](auto& c) { c.grad_steps_per_epoch = grad_steps; });
    add("--trajectories", trajectories, "trajectories collected per epoch",
        [this](auto& c) { c.trajectories_per_epoch = trajectories; });
    add("--batch-size", batch_size, "segments per minibatch (even)",
        [this](auto& c) { c.batch_size = batch_size; });
    add("--k", k, "segment length", [this](auto& c) { c.k = k; });
    add("--beta", beta, "similarity temperature", [this](auto& c) { c.cde.beta = beta; });
    add("--mediators", mediators, "mediator batch size",
        [this](auto& c) { c.cde.mediator_batch = mediators; });
    add("--lr", lr, "learning rate", [this](auto& c) { c.learning_rate = lr; });
    add("--horizon", horizon, "planning horizon", [this](auto& c) { c.cem.horizon = horizon; });
    add("--candidates", candidates, "CEM candidates per iteration",
        [this](auto& c) { c.cem.candidates = candidates; });
    add("--iterations", iterations, "CEM iterations",
        [this](auto& c) { c.cem.iterations = iterations; });
    add("--elites", elites, "CEM elites", [this](auto& c) { c.cem.elites = elites; });
    add("--head-hidden", head_hidden, "dynamics head width",
        [this](auto& c) { c.head_hidden = head_hidden; });
    add("--encoder-hidden", encoder_hidden, "encoder width",
        [this](auto& c) { c.encoder_hidden = encoder_hidden; });
    add("--exploration", exploration, "collection noise std as a fraction of the action range",
        [this](auto& c) { c.exploration_fraction = exploration; });
    add("--metric-transitions", metric_transitions, "held-out transitions per split",
        [this](auto& c) { c.metric_transitions = metric_transitions; });
  }

  void Apply(ria::TrainConfig& config) const {
    if (profile == "desk") ria::ApplyDeskProfile(config);
    for (const auto& [option, apply] : setters) {
      if (option->count() > 0) apply(config);
    }
  }
};

struct EvalFlags {
  int episodes = 10;
  std::uint64_t seed = 0;
  int transitions = 5000;
  int segments_per_env = 32;
  int max_cluster_envs = 8;

  void Register(CLI::App* cmd, int default_episodes) {
    episodes = default_episodes;
    cmd->add_option("--episodes", episodes, "evaluation episodes per test environment")
        ->capture_default_str();
    cmd->add_option("--eval-seed", seed, "evaluation seed")->capture_default_str();
    cmd->add_option("--transitions", transitions, "held-out transitions per split")
        ->capture_default_str();
    cmd->add_option("--segments-per-env", segments_per_env, "contexts per environment")
        ->capture_default_str();
    cmd->add_option("--max-cluster-envs", max_cluster_envs,
                    "training environments used for cluster metrics")
        ->capture_default_str();
  }

  ria::EvalOptions ToOptions() const {
    ria::EvalOptions o;
    o.episodes = episodes;
    o.seed = seed;
    o.prediction_transitions = transitions;
    o.segments_per_env = segments_per_env;
    o.max_cluster_envs = max_cluster_envs;
    return o;
  }
};

std::optional<fs::path> g_error_dir;

void ReportError(int code, const std::string& type, const std::string& message) {
  const nlohmann::json record = {
      {"status", "error"}, {"exit_code", code}, {"type", type}, {"message", message}};
  std::cerr << record.dump() << std::endl;
  if (g_error_dir) {
    std::error_code ec;
    fs::create_directories(*g_error_dir, ec);
    std::ofstream out(*g_error_dir / "error.json", std::ios::trunc);
    if (out) out << record.dump(2) << '\n';
  }
}

ria::EnvFamily FamilyFor(const std::string& name) {
  try {
    return ria::FamilyByName(name);
  } catch (const ria::ConfigError&) {
    throw ria::UsageError("unknown environment family '" + name +
                          "' (expected pendulum, pendulum4 or springmass)");
  }
}

std::optional<fs::path> LatestCheckpoint(const fs::path& run_dir) {
  std::optional<fs::path> best;
  int best_epoch = -1;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(run_dir / "checkpoints", ec)) {
    const std::string name = entry.path().stem().string();
    if (name.rfind("epoch_", 0) != 0) continue;
    const int epoch = std::atoi(name.c_str() + 6);
    if (epoch > best_epoch) {
      best_epoch = epoch;
      best = entry.path();
    }
  }
  return best;
}

ria::Checkpoint LoadExisting(const fs::path& path) {
  if (!fs::exists(path)) throw ria::UsageError("checkpoint not found: " + path.string());
  return ria::LoadCheckpoint(path);
}

// Family and planner/intervention settings for a loaded checkpoint.
ria::TrainConfig SettingsFor(const ria::Checkpoint& ckpt, const ria::EnvFamily& family) {
  if (ckpt.meta.contains("train_config")) {
    try {
      return ria::TrainConfigFromJson(ckpt.meta["train_config"]);
    } catch (const ria::ConfigError& e) {
      throw ria::LoadError(std::string("checkpoint carries an invalid config: ") + e.what());
    }
  }
  return ria::DefaultTrainConfig(family);
}

ria::EnvFamily ResolveFamily(const ria::Checkpoint& ckpt, const std::string& env_flag,
                             const ria::Agent& agent) {
  std::string name = env_flag;
  if (name.empty()) name = ckpt.meta.value("family", std::string());
  if (name.empty()) throw ria::UsageError("--env is required for this checkpoint");
  ria::EnvFamily family = FamilyFor(name);
  if (family.kind != agent.kind) {
    throw ria::LoadError("checkpoint was trained on " + ria::ToString(agent.kind) +
                         " but --env selects " + ria::ToString(family.kind));
  }
  return family;
}

int CmdTrain(const std::string& env, const std::string& method, std::uint64_t seed,
             const std::string& out, const std::string& config_path, const Overrides& overrides) {
  ria::EnvFamily family;
  ria::TrainConfig config;
  if (!config_path.empty()) {
    const ria::RunConfig run = ria::ReadRunConfig(config_path);
    family = FamilyFor(run.family);
    config = run.train;
  } else {
    family = FamilyFor(env);
    config = ria::DefaultTrainConfig(family);
    config.method = ria::MethodFromString(method);
    config.seed = seed;
    overrides.Apply(config);
  }
  config.Validate();
  ria::RunOutputs outputs;
  outputs.out_dir = fs::path(out);
  const ria::TrainResult result = ria::TrainRun(family, config, outputs);
  const ria::EpochMetrics& last = result.metrics.back();
  nlohmann::json summary = {{"status", "ok"},
                            {"out", out},
                            {"epochs", last.epoch},
                            {"train_mse", last.train_mse},
                            {"test_mse", last.test_mse}};
  if (auto ckpt = LatestCheckpoint(out)) summary["checkpoint"] = ckpt->string();
  std::cout << summary.dump() << std::endl;
  return kExitOk;
}

int CmdEval(const std::string& checkpoint_path, const std::string& env, const std::string& out,
            const EvalFlags& flags) {
  const ria::Checkpoint ckpt = LoadExisting(checkpoint_path);
  const ria::Agent agent = ria::AgentFromCheckpoint(ckpt);
  const ria::EnvFamily family = ResolveFamily(ckpt, env, agent);
  const ria::TrainConfig settings = SettingsFor(ckpt, family);

  ria::EvalOptions options = flags.ToOptions();
  options.cem = settings.cem;
  options.cde = settings.cde;
  const ria::EvalReport report = ria::Evaluate(agent, family, options);
  fs::create_directories(out);
  ria::WriteReportJson(report, fs::path(out) / "report.json");
  ria::WritePcaCsv(report, fs::path(out) / "pca.csv");
  ria::WriteSimilarityCsv(report, fs::path(out) / "similarity.csv");
  nlohmann::json summary = {{"status", "ok"}, {"out", out},
                            {"test_mse", report.prediction.test_mse}};
  if (report.returns) summary["mean_return"] = ria::MeanReturn(*report.returns);
  std::cout << summary.dump() << std::endl;
  return kExitOk;
}

int CmdAblate(const std::string& env, const std::vector<std::uint64_t>& seeds,
              const std::vector<std::string>& methods, const std::string& out,
              const Overrides& overrides, const EvalFlags& flags) {
  const ria::EnvFamily family = FamilyFor(env);
  ria::TrainConfig base = ria::DefaultTrainConfig(family);
  overrides.Apply(base);
  base.Validate();

  ria::SweepOptions sweep;
  if (!methods.empty()) {
    sweep.methods.clear();
    for (const std::string& m : methods) sweep.methods.push_back(ria::MethodFromString(m));
  }
  if (seeds.empty()) throw ria::UsageError("--seeds needs at least one seed");
  sweep.seeds = seeds;
  sweep.threads = ria::ThreadsFromEnvironment();
  sweep.out_dir = fs::path(out);
  sweep.eval = flags.ToOptions();

  fs::create_directories(out);
  ria::ResetLabelAccessViolations();
  const std::vector<ria::AblationRow> rows = ria::RunSweep(family, base, sweep);
  ria::WriteAblationCsv(rows, fs::path(out) / "ablation.csv");
  const std::int64_t violations = ria::LabelAccessViolations();
  std::cout << nlohmann::json{{"status", violations == 0 ? "ok" : "error"},
                              {"rows", rows.size()},
                              {"label_access_violations", violations}}
                   .dump()
            << std::endl;
  if (violations != 0) {
    ReportError(kExitFailure, "label_access_violation",
                std::to_string(violations) + " environment-label reads inside training");
    return kExitFailure;
  }
  return kExitOk;
}

int CmdExport(const std::string& checkpoint_path, const std::string& trajectories_path,
              const std::string& out, int stride) {
  if (stride < 1) throw ria::UsageError("--stride must be positive");
  const ria::Checkpoint ckpt = LoadExisting(checkpoint_path);
  const ria::Agent agent = ria::AgentFromCheckpoint(ckpt);
  std::ifstream in(trajectories_path, std::ios::binary);
  if (!in) throw ria::UsageError("cannot open trajectory dump " + trajectories_path);
  const std::vector<ria::Trajectory> trajectories =
      ria::ReadTrajectoriesNdjson(in, agent.kind);

  std::vector<ria::TransitionSegment> segments;
  std::vector<int> labels;
  for (const ria::Trajectory& traj : trajectories) {
    for (int t = agent.k; t <= static_cast<int>(traj.num_steps()); t += stride) {
      segments.push_back(ria::SegmentAt(traj, agent.k, t));
      labels.push_back(traj.env_label());
    }
  }
  if (segments.size() < 3) throw ria::UsageError("trajectory dump yields fewer than 3 segments");
  const ria::PcaResult pca = ria::PcaProject(agent.EncodeContexts(segments));
  fs::create_directories(out);
  std::ofstream csv(fs::path(out) / "pca.csv", std::ios::binary | std::ios::trunc);
  csv << "x,y,env_label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    csv << ria::FormatNumber(pca.projection(i, 0)) << ','
        << ria::FormatNumber(pca.projection(i, 1)) << ',' << labels[i] << '\n';
  }
  std::cout << nlohmann::json{{"status", "ok"}, {"points", labels.size()}}.dump() << std::endl;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relational intervention model-based RL: train, evaluate and compare agents"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "suppress progress and warnings");

  // train
  std::string train_env = "pendulum", train_method = "ria_full", train_out, train_config;
  std::uint64_t train_seed = 0;
  Overrides train_overrides;
  CLI::App* train = app.add_subcommand("train", "train one agent");
  train->add_option("--env", train_env, "pendulum, pendulum4 or springmass")->capture_default_str();
  train->add_option("--method", train_method,
                    "context_free, vanilla_context, relation_only, ria_full or true_label")
      ->capture_default_str();
  train->add_option("--seed", train_seed, "run seed")->capture_default_str();
  train->add_option("--out", train_out, "run directory")->required();
  train->add_option("--config", train_config, "rerun from a saved config.json");
  train_overrides.Register(train);

  // eval
  std::string eval_ckpt, eval_env, eval_out;
  EvalFlags eval_flags;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval->add_option("--env", eval_env, "family (defaults to the checkpoint's)");
  eval->add_option("--out", eval_out, "output directory")->required();
  eval_flags.Register(eval, 10);

  // ablate
  std::string ablate_env = "pendulum", ablate_out;
  std::vector<std::uint64_t> ablate_seeds;
  std::vector<std::string> ablate_methods;
  Overrides ablate_overrides;
  EvalFlags ablate_flags;
  CLI::App* ablate = app.add_subcommand("ablate", "train and evaluate methods x seeds");
  ablate->add_option("--env", ablate_env, "pendulum, pendulum4 or springmass")
      ->capture_default_str();
  ablate->add_option("--seeds", ablate_seeds, "comma-separated seeds")
      ->delimiter(',')
      ->required();
  ablate->add_option("--methods", ablate_methods, "comma-separated methods (default: all four)")
      ->delimiter(',');
  ablate->add_option("--out", ablate_out, "sweep directory")->required();
  ablate_overrides.Register(ablate);
  ablate_flags.Register(ablate, 1);

  // export
  std::string export_ckpt, export_traj, export_out;
  int export_stride = 10;
  CLI::App* exp = app.add_subcommand("export", "PCA of contexts from a trajectory dump");
  exp->add_option("--checkpoint", export_ckpt, "checkpoint file")->required();
  exp->add_option("--trajectories", export_traj, "trajectories.ndjson")->required();
  exp->add_option("--out", export_out, "output directory")->required();
  exp->add_option("--stride", export_stride, "anchor spacing")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    ReportError(kExitUsage, "usage", e.what());
    return kExitUsage;
  }
  ria::SetQuiet(quiet);

  try {
    if (*train) {
      g_error_dir = fs::path(train_out);
      return CmdTrain(train_env, train_method, train_seed, train_out, train_config,
                      train_overrides);
    }
    if (*eval) {
      g_error_dir = fs::path(eval_out);
      return CmdEval(eval_ckpt, eval_env, eval_out, eval_flags);
    }
    if (*ablate) {
      g_error_dir = fs::path(ablate_out);
      return CmdAblate(ablate_env, ablate_seeds, ablate_methods, ablate_out, ablate_overrides,
                       ablate_flags);
    }
    if (*exp) {
      g_error_dir = fs::path(export_out);
      return CmdExport(export_ckpt, export_traj, export_out, export_stride);
    }
  } catch (const ria::DivergedTraining& e) {
    ReportError(kExitDiverged, "diverged_training", e.what());
    return kExitDiverged;
  } catch (const ria::UsageError& e) {
    ReportError(kExitUsage, "usage", e.what());
    return kExitUsage;
  } catch (const ria::ConfigError& e) {
    ReportError(kExitUsage, "config", e.what());
    return kExitUsage;
  } catch (const ria::LoadError& e) {
    ReportError(kExitUsage, "load", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    ReportError(kExitFailure, "internal", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}
