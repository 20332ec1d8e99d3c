#include "ria/evaluation.h"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "ria/errors.h"
#include "ria/logging.h"
#include "test_util.h"

namespace ria {
namespace {

using testing::RandomMatrix;

// Direct transcription of the silhouette definition, one point at a time.
double OracleSilhouette(const Matrix2D& x, const std::vector<int>& labels) {
  const int n = static_cast<int>(labels.size());
  std::vector<int> distinct = labels;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) return 0.0;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    auto mean_to = [&](int label, bool skip_self) {
      double sum = 0.0;
      int count = 0;
      for (int j = 0; j < n; ++j) {
        if (labels[j] != label || (skip_self && j == i)) continue;
        sum += std::sqrt((x.row(i) - x.row(j)).squaredNorm());
        ++count;
      }
      return count == 0 ? std::nan("") : sum / count;
    };
    const double a = mean_to(labels[i], true);
    if (std::isnan(a)) continue;
    double b = INFINITY;
    for (int l : distinct) {
      if (l != labels[i]) b = std::min(b, mean_to(l, false));
    }
    if (std::max(a, b) > 0) total += (b - a) / std::max(a, b);
  }
  return total / n;
}

TEST(Silhouette, HandComputedLine) {
  Matrix2D x(4, 1);
  x << 0, 1, 10, 11;
  const std::vector<int> labels = {0, 0, 1, 1};
  // Point 0: a = 1, b = 10.5; point 1: a = 1, b = 9.5; symmetric for the rest.
  const double expected = 0.5 * ((1 - 1 / 10.5) + (1 - 1 / 9.5));
  EXPECT_NEAR(Silhouette(x, labels), expected, 1e-15);
}

TEST(Silhouette, EdgeCases) {
  Matrix2D x(3, 2);
  x << 0, 0, 1, 0, 5, 5;
  EXPECT_EQ(Silhouette(x, std::vector<int>{2, 2, 2}), 0.0);
  // The singleton scores 0 but still counts in the mean.
  const double two = Silhouette(x, std::vector<int>{0, 0, 1});
  EXPECT_NEAR(two, OracleSilhouette(x, {0, 0, 1}), 1e-15);
  EXPECT_EQ(Silhouette(Matrix2D::Zero(4, 2), std::vector<int>{0, 0, 1, 1}), 0.0);
  EXPECT_THROW(Silhouette(x, std::vector<int>{0, 1}), ConfigError);
}

TEST(Silhouette, MatchesOracleOnRandomClusters) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 4 + trial % 9;
    const int k = 2 + trial % 3;
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = static_cast<int>(rng() % k);
    Matrix2D x = RandomMatrix(n, 3, rng);
    for (int i = 0; i < n; ++i) x(i, 0) += 3.0 * labels[i];
    const double s = Silhouette(x, labels);
    EXPECT_NEAR(s, OracleSilhouette(x, labels), 1e-12);
    EXPECT_GE(s, -1.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(Pca, AgreesWithDenseEigensolver) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 3 + trial;
    Matrix2D x = RandomMatrix(40, d, rng);
    x.col(0) *= 5.0;
    x.col(1) *= 2.5;
    x.col(2) += 0.5 * x.col(0);
    const PcaResult pca = PcaProject(x);
    const Matrix2D centered = x.rowwise() - x.colwise().mean();
    const Eigen::MatrixXd cov = centered.transpose() * centered / 39.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    const Eigen::VectorXd vals = solver.eigenvalues();
    for (int c = 0; c < 2; ++c) {
      EXPECT_NEAR(pca.variances[c], vals[d - 1 - c], 1e-7 * vals[d - 1]);
      Eigen::VectorXd ref = solver.eigenvectors().col(d - 1 - c);
      Eigen::Index lead = 0;
      ref.cwiseAbs().maxCoeff(&lead);
      if (ref[lead] < 0) ref = -ref;
      EXPECT_LT((pca.components.row(c).transpose() - ref).cwiseAbs().maxCoeff(), 1e-6);
      EXPECT_NEAR(pca.components.row(c).norm(), 1.0, 1e-12);
    }
    EXPECT_LT((pca.projection - centered * pca.components.transpose()).cwiseAbs().maxCoeff(),
              1e-12);
  }
}

TEST(Pca, CollinearAndConstantInputs) {
  Matrix2D x(5, 3);
  for (int i = 0; i < 5; ++i) x.row(i) << i, 2.0 * i, -i;
  const PcaResult pca = PcaProject(x);
  EXPECT_NEAR(pca.variances[0], 6.0 * 2.5, 1e-9);
  EXPECT_EQ(pca.variances[1], 0.0);
  SetQuiet(true);
  const PcaResult flat = PcaProject(Matrix2D::Ones(4, 3));
  SetQuiet(false);
  EXPECT_TRUE(flat.projection.isZero(0.0));
  EXPECT_THROW(PcaProject(Matrix2D::Ones(2, 3)), ConfigError);
}

TEST(Pca, InvariantUnderIsometriesAndRowOrder) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix2D x = RandomMatrix(25, 4, rng);
    x.col(1) *= 3.0;
    x.col(3) *= 1.7;
    const PcaResult base = PcaProject(x);
    // Random rotation via QR plus a shift.
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(RandomMatrix(4, 4, rng))
                                  .householderQ();
    const Matrix2D moved = (x * q).rowwise() + RandomMatrix(1, 4, rng).row(0);
    const PcaResult rotated = PcaProject(moved);
    EXPECT_NEAR(rotated.variances[0], base.variances[0], 1e-8);
    EXPECT_NEAR(rotated.variances[1], base.variances[1], 1e-8);
    for (int c = 0; c < 2; ++c) {
      const double flip =
          rotated.projection.col(c).dot(base.projection.col(c)) < 0 ? -1.0 : 1.0;
      EXPECT_LT((rotated.projection.col(c) * flip - base.projection.col(c)).cwiseAbs().maxCoeff(),
                1e-6);
    }
    std::vector<int> perm(25);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix2D shuffled(25, 4);
    for (int i = 0; i < 25; ++i) shuffled.row(i) = x.row(perm[i]);
    const PcaResult reordered = PcaProject(shuffled);
    for (int i = 0; i < 25; ++i) {
      EXPECT_LT((reordered.projection.row(i) - base.projection.row(perm[i])).cwiseAbs().maxCoeff(),
                1e-8);
    }
  }
}

TEST(HeldOut, LayoutAndOracleError) {
  const EnvFamily family = PendulumFamily();
  const std::vector<EnvParams> envs = {family.test_params[0], family.test_params[5]};
  const HeldOutSet set = CollectHeldOut(envs, 101, 10, 200, 3);
  ASSERT_EQ(set.transitions.size(), 101);
  ASSERT_EQ(set.segments.size(), 101u);
  for (std::size_t i = 0; i < set.segments.size(); ++i) {
    EXPECT_GE(set.segments[i].anchor_t(), 10);
    EXPECT_EQ(set.segments[i].env_label(), i < 51 ? 0 : 1);
  }
  // The true dynamics of a single environment predict its own transitions exactly.
  const HeldOutSet one = CollectHeldOut({&envs[0], 1}, 60, 10, 200, 4);
  EXPECT_LT(HeldOutMse(TrueDynamics(envs[0]), one, Matrix2D::Zero(60, 1)), 1e-20);
  EXPECT_GT(HeldOutMse(TrueDynamics(envs[1]), one, Matrix2D::Zero(60, 1)), 1e-6);
  // A predictor that never moves scores the relative spread of deltas around 0.
  const Matrix2D deltas = one.transitions.next_states - one.transitions.states;
  const double expected =
      (deltas.array().rowwise() / one.delta_scale.array()).square().mean();
  struct Still : NextStatePredictor {
    Matrix2D PredictNext(const Matrix2D& s, const Matrix2D&, const Matrix2D&) const override {
      return s;
    }
    int state_dim() const override { return 3; }
  } still;
  EXPECT_NEAR(HeldOutMse(still, one, Matrix2D::Zero(60, 1)), expected, 1e-12);
}

TEST(Returns, RandomPolicySummaries) {
  const EnvFamily family = testing::ShortFamily("springmass", 20);
  const std::vector<EnvReturns> r = EvaluatePolicyReturns(
      UniformRandomPolicy(family.kind), family.test_params, 3, 20, 7);
  ASSERT_EQ(r.size(), family.test_params.size());
  double grand = 0.0;
  for (const EnvReturns& e : r) {
    ASSERT_EQ(e.returns.size(), 3u);
    const double mean = (e.returns[0] + e.returns[1] + e.returns[2]) / 3.0;
    EXPECT_NEAR(e.mean, mean, 1e-12);
    double var = 0.0;
    for (double v : e.returns) var += (v - mean) * (v - mean);
    EXPECT_NEAR(e.std, std::sqrt(var / 3.0), 1e-12);
    grand += e.mean;
  }
  EXPECT_NEAR(MeanReturn(r), grand / r.size(), 1e-12);
}

TEST(ClusterMetrics, NeedsTwoUsableGroups) {
  std::mt19937_64 rng(1);
  const Matrix2D z = RandomMatrix(4, 2, rng);
  const TrueDynamics model(EnvParams::SpringMass(1, 1));
  const MediatorBatch med{RandomMatrix(3, 2, rng), RandomMatrix(3, 1, rng)};
  EXPECT_FALSE(ComputeClusterMetrics(z, std::vector<int>{0, 0, 1, 2}, model, med, CdeConfig{}));
  EXPECT_TRUE(ComputeClusterMetrics(z, std::vector<int>{0, 0, 1, 1}, model, med, CdeConfig{}));
}

class EvalReportTest : public ::testing::Test {
 protected:
  static EvalReport Run(int episodes) {
    SetQuiet(true);
    const EnvFamily family = testing::ShortFamily("pendulum4");
    const TrainConfig config = testing::TinyConfig(family, Method::kRiaFull, 2);
    const TrainResult trained = TrainRun(family, config);
    EvalOptions options;
    options.episodes = episodes;
    options.prediction_transitions = 40;
    options.segments_per_env = 4;
    options.seed = 3;
    options.cem = config.cem;
    options.cde = config.cde;
    options.cde.mediator_batch = 8;
    EvalReport r = Evaluate(trained.agent, family, options);
    SetQuiet(false);
    return r;
  }
};

TEST_F(EvalReportTest, SchemaAndOptionalReturns) {
  const EvalReport with = Run(1);
  ASSERT_TRUE(with.returns.has_value());
  EXPECT_EQ(with.returns->size(), PendulumFourEnvFamily().test_params.size());
  ASSERT_TRUE(with.cluster.has_value());
  EXPECT_EQ(with.pca_points.size(), 16u);
  EXPECT_EQ(with.similarity.size(), 16u * 15 / 2);
  const nlohmann::json doc = ReportToJson(with);
  EXPECT_TRUE(ValidateReportJson(doc).empty());
  EXPECT_EQ(doc["returns"]["per_env"].size(), with.returns->size());

  const EvalReport without = Run(0);
  EXPECT_FALSE(without.returns.has_value());
  const nlohmann::json doc0 = ReportToJson(without);
  EXPECT_FALSE(doc0.contains("returns"));
  EXPECT_TRUE(ValidateReportJson(doc0).empty());
  EXPECT_EQ(with.prediction.test_mse, without.prediction.test_mse);

  nlohmann::json broken = doc;
  broken["pca"].erase("points");
  EXPECT_FALSE(ValidateReportJson(broken).empty());
  EXPECT_GE(doc["relational"]["score_asymmetry"].get<double>(), 0.0);
  broken = doc;
  broken["relational"]["score_asymmetry"] = -1.0;
  EXPECT_FALSE(ValidateReportJson(broken).empty());
  broken = doc;
  broken["family"] = 3;
  EXPECT_FALSE(ValidateReportJson(broken).empty());

  const auto dir = testing::TempDir("eval_report");
  WritePcaCsv(with, dir / "pca.csv");
  WriteSimilarityCsv(with, dir / "sim.csv");
  const std::string pca = testing::ReadFile(dir / "pca.csv");
  EXPECT_EQ(pca.substr(0, pca.find('\n')), "x,y,env_label");
  EXPECT_EQ(std::count(pca.begin(), pca.end(), '\n'), 17);
  const std::string sim = testing::ReadFile(dir / "sim.csv");
  EXPECT_EQ(sim.substr(0, sim.find('\n')), "i,j,d,w,same_env");
}

TEST(Families, TestEnvironmentsAreUniqueAndDisjoint) {
  for (const std::string name : {"pendulum", "pendulum4", "springmass"}) {
    const EnvFamily f = FamilyByName(name);
    EXPECT_NO_THROW(f.Validate());
    for (std::size_t i = 0; i < f.test_params.size(); ++i) {
      for (std::size_t j = i + 1; j < f.test_params.size(); ++j) {
        EXPECT_FALSE(f.test_params[i] == f.test_params[j]);
      }
      for (const EnvParams& t : f.train_params) EXPECT_FALSE(t == f.test_params[i]);
    }
  }
}

}  // namespace
}  // namespace ria
