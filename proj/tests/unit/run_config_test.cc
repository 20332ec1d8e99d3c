#include "ria/run_config.h"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "ria/errors.h"
#include "test_util.h"

namespace ria {
namespace {

TEST(RunConfig, JsonRoundTripKeepsEveryField) {
  RunConfig config;
  config.family = "springmass";
  config.out_dir = "/tmp/x";
  config.train = DefaultTrainConfig(SpringMassFamily());
  config.train.method = Method::kTrueLabel;
  config.train.seed = 1234567890123ULL;
  config.train.learning_rate = 3e-4;
  config.train.cde.mediator_batch = 17;
  config.train.cde.normalize_by_batch_variance = false;
  config.train.cem.init_std = 0.7;
  config.train.exploration_fraction = 0.0;
  const RunConfig back = RunConfigFromJson(ToJson(config));
  EXPECT_EQ(ToJson(back), ToJson(config));
  EXPECT_EQ(back.train.seed, 1234567890123ULL);
  EXPECT_EQ(back.train.cde.beta, 1.0);
  EXPECT_FALSE(back.train.cde.normalize_by_batch_variance);

  const auto dir = testing::TempDir("run_config");
  WriteRunConfig(config, dir / "c.json");
  EXPECT_EQ(ToJson(ReadRunConfig(dir / "c.json")), ToJson(config));
}

TEST(RunConfig, StrictParsing) {
  nlohmann::json doc = ToJson(DefaultTrainConfig(PendulumFamily()));
  doc.erase("batch_size");
  EXPECT_THROW(TrainConfigFromJson(doc), ConfigError);
  doc = ToJson(DefaultTrainConfig(PendulumFamily()));
  doc["method"] = "oracle";
  EXPECT_THROW(TrainConfigFromJson(doc), ConfigError);
  doc = ToJson(DefaultTrainConfig(PendulumFamily()));
  doc["cem"]["elites"] = 500;
  EXPECT_THROW(TrainConfigFromJson(doc), ConfigError);
  const auto dir = testing::TempDir("run_config_bad");
  std::ofstream(dir / "bad.json") << "[1, 2";
  EXPECT_THROW(ReadRunConfig(dir / "bad.json"), ConfigError);
}

TEST(RunConfig, DeskProfileStaysValid) {
  TrainConfig c = DefaultTrainConfig(PendulumFamily());
  ApplyDeskProfile(c);
  EXPECT_NO_THROW(c.Validate());
  EXPECT_LE(c.cem.horizon * c.cem.candidates * c.cem.iterations, 30 * 200 * 5);
}

TEST(FormatNumber, RoundTripsAndSpecialValues) {
  EXPECT_EQ(FormatNumber(0.5), "0.5");
  EXPECT_EQ(FormatNumber(-3.0), "-3");
  EXPECT_EQ(FormatNumber(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(FormatNumber(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(FormatNumber(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_NEAR(std::stod(FormatNumber(1.0 / 3.0)), 1.0 / 3.0, 1e-10);
}

}  // namespace
}  // namespace ria
