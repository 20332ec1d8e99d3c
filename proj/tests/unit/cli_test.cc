#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include "json.hpp"
#include "test_util.h"

namespace ria {
namespace {

namespace fs = std::filesystem;

const std::string kTiny =
    " --epochs 1 --trajectories 1 --grad-steps 2 --batch-size 8 --head-hidden 16"
    " --encoder-hidden 16 --horizon 3 --candidates 10 --iterations 1 --elites 2"
    " --metric-transitions 40 --mediators 8";

int RunCli(const std::string& args, const fs::path& log) {
  const std::string cmd =
      std::string(RIA_CLI_PATH) + " -q " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json ReadJson(const fs::path& p) { return nlohmann::json::parse(testing::ReadFile(p)); }

TEST(Cli, TrainEvalExportRoundTrip) {
  const fs::path dir = testing::TempDir("cli_train");
  ASSERT_EQ(RunCli("train --env springmass --method ria_full --seed 4 --out " +
                    (dir / "run").string() + kTiny,
                dir / "train.log"),
            0)
      << testing::ReadFile(dir / "train.log");
  for (const char* f : {"config.json", "metrics.csv", "trajectories.ndjson",
                        "checkpoints/epoch_1.json"}) {
    EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
  }
  const nlohmann::json config = ReadJson(dir / "run" / "config.json");
  EXPECT_EQ(config["train"]["method"], "ria_full");
  EXPECT_EQ(config["train"]["seed"], 4);
  EXPECT_TRUE(config.contains("resolved_seeds"));

  const std::string ckpt = (dir / "run" / "checkpoints" / "epoch_1.json").string();
  ASSERT_EQ(RunCli("eval --checkpoint " + ckpt + " --out " + (dir / "eval").string() +
                    " --episodes 0 --transitions 40 --segments-per-env 3 --max-cluster-envs 3",
                dir / "eval.log"),
            0)
      << testing::ReadFile(dir / "eval.log");
  const nlohmann::json report = ReadJson(dir / "eval" / "report.json");
  EXPECT_EQ(report["family"], "springmass");
  EXPECT_EQ(report["method"], "ria_full");
  EXPECT_FALSE(report.contains("returns"));
  EXPECT_TRUE(fs::exists(dir / "eval" / "pca.csv"));

  EXPECT_EQ(RunCli("eval --checkpoint " + ckpt + " --env pendulum --out " +
                    (dir / "eval_bad").string(),
                dir / "bad_env.log"),
            2);

  ASSERT_EQ(RunCli("export --checkpoint " + ckpt + " --trajectories " +
                    (dir / "run" / "trajectories.ndjson").string() + " --out " +
                    (dir / "export").string() + " --stride 10",
                dir / "export.log"),
            0)
      << testing::ReadFile(dir / "export.log");
  const std::string pca = testing::ReadFile(dir / "export" / "pca.csv");
  // One trajectory of 200 steps, anchors 10, 20, ..., 200.
  EXPECT_EQ(std::count(pca.begin(), pca.end(), '\n'), 1 + 20);
}

TEST(Cli, SameSeedGivesIdenticalMetrics) {
  const fs::path dir = testing::TempDir("cli_determinism");
  for (const char* name : {"a", "b"}) {
    ASSERT_EQ(RunCli("train --env pendulum --method relation_only --seed 9 --out " +
                      (dir / name).string() + kTiny,
                  dir / (std::string(name) + ".log")),
              0);
  }
  EXPECT_EQ(testing::ReadFile(dir / "a" / "metrics.csv"),
            testing::ReadFile(dir / "b" / "metrics.csv"));
  EXPECT_EQ(testing::ReadFile(dir / "a" / "checkpoints" / "epoch_1.json"),
            testing::ReadFile(dir / "b" / "checkpoints" / "epoch_1.json"));
}

TEST(Cli, UsageAndConfigErrorsExitTwo) {
  const fs::path dir = testing::TempDir("cli_errors");
  EXPECT_EQ(RunCli("train --env cartpole --out " + (dir / "x").string(), dir / "1.log"), 2);
  EXPECT_EQ(RunCli("train --method magic --out " + (dir / "y").string(), dir / "2.log"), 2);
  EXPECT_EQ(RunCli("train --batch-size 7 --out " + (dir / "z").string(), dir / "3.log"), 2);
  EXPECT_EQ(RunCli("eval --checkpoint " + (dir / "none.json").string() + " --out " +
                    (dir / "e").string(),
                dir / "4.log"),
            2);
  EXPECT_EQ(RunCli("frobnicate", dir / "5.log"), 2);
  EXPECT_EQ(RunCli("", dir / "6.log"), 2);
  // The error record names the failure.
  const nlohmann::json err = ReadJson(dir / "z" / "error.json");
  EXPECT_EQ(err["exit_code"], 2);
  EXPECT_EQ(err["status"], "error");
}

TEST(Cli, DivergenceExitsThree) {
  const fs::path dir = testing::TempDir("cli_diverge");
  EXPECT_EQ(RunCli("train --env springmass --method vanilla_context --lr 1e300 --out " +
                    (dir / "run").string() + kTiny,
                dir / "run.log"),
            3)
      << testing::ReadFile(dir / "run.log");
  EXPECT_EQ(ReadJson(dir / "run" / "error.json")["exit_code"], 3);
}

TEST(Cli, AblateWritesOneRowPerRun) {
  const fs::path dir = testing::TempDir("cli_ablate");
  ASSERT_EQ(RunCli("ablate --env springmass --seeds 1,2 --methods context_free,ria_full --out " +
                    dir.string() + kTiny +
                    " --episodes 0 --transitions 40 --segments-per-env 2 --max-cluster-envs 3",
                dir / "ablate.log"),
            0)
      << testing::ReadFile(dir / "ablate.log");
  const std::string csv = testing::ReadFile(dir / "ablation.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 4);
  EXPECT_NE(csv.find("\ncontext_free,1,"), std::string::npos);
  EXPECT_NE(csv.find("\nria_full,2,"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "ria_full_seed2" / "eval" / "report.json"));
}

}  // namespace
}  // namespace ria
