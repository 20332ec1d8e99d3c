#include "ria/intervention.h"

#include <gtest/gtest.h>

#include <cmath>

#include "ria/errors.h"
#include "ria/logging.h"
#include "test_util.h"

namespace ria {
namespace {

using testing::CentralDifference;
using testing::FlattenGradients;
using testing::ParameterPointers;
using testing::RandomMatrix;
using testing::RelativeError;

// s' = s + A z: every CDE is A (z_j - z_k), whatever the mediator.
class LinearContextModel : public NextStatePredictor {
 public:
  explicit LinearContextModel(Matrix2D a) : a_(std::move(a)) {}
  Matrix2D PredictNext(const Matrix2D& states, const Matrix2D&,
                       const Matrix2D& contexts) const override {
    return states + contexts * a_.transpose();
  }
  int state_dim() const override { return static_cast<int>(a_.rows()); }

 private:
  Matrix2D a_;
};

MediatorBatch RandomMediators(int m, int sd, std::mt19937_64& rng) {
  return {RandomMatrix(m, sd, rng), RandomMatrix(m, 1, rng)};
}

DynamicsModel RandomModel(int sd, int cd, std::mt19937_64& rng) {
  DynamicsModel model(sd, 1, cd, 10, 2);
  model.net().InitGlorot(rng);
  for (RowVector& b : model.net().biases()) b = RandomMatrix(1, b.size(), rng, 0.1).row(0);
  model.normalizer().delta_std = RowVector::LinSpaced(sd, 0.5, 1.5);
  return model;
}

TEST(Cde, ZeroForIdenticalContextsAndAntisymmetric) {
  std::mt19937_64 rng(2);
  const DynamicsModel model = RandomModel(3, 4, rng);
  const Vector s = RandomMatrix(3, 1, rng);
  const Vector a = RandomMatrix(1, 1, rng);
  const RowVector z1 = RandomMatrix(1, 4, rng).row(0);
  const RowVector z2 = RandomMatrix(1, 4, rng).row(0);
  EXPECT_TRUE(ControlledDirectEffect(model, s, a, z1, z1).isZero(0.0));
  EXPECT_EQ(ControlledDirectEffect(model, s, a, z1, z2),
            -ControlledDirectEffect(model, s, a, z2, z1));
  const MediatorBatch med = RandomMediators(16, 3, rng);
  EXPECT_EQ(AverageCde(model, med, z1, z1), 0.0);
  EXPECT_EQ(AverageCde(model, med, z1, z2), AverageCde(model, med, z2, z1));
  EXPECT_GT(AverageCde(model, med, z1, z2), 0.0);
}

TEST(Cde, LinearModelOracle) {
  std::mt19937_64 rng(5);
  const Matrix2D a = RandomMatrix(2, 3, rng);
  const LinearContextModel model(a);
  const Matrix2D z = RandomMatrix(5, 3, rng);
  const MediatorBatch med = RandomMediators(7, 2, rng);
  const Matrix2D d = AcdeMatrix(PredictUnderInterventions(model, med, z));
  for (int j = 0; j < 5; ++j) {
    EXPECT_EQ(d(j, j), 0.0);
    for (int k = 0; k < 5; ++k) {
      const Vector effect = a * (z.row(j) - z.row(k)).transpose();
      EXPECT_NEAR(d(j, k), effect.cwiseAbs().mean(), 1e-12);
      EXPECT_EQ(d(j, k), d(k, j));
    }
  }
}

TEST(Similarity, NormalizationAndRange) {
  std::mt19937_64 rng(7);
  const Matrix2D z = RandomMatrix(6, 2, rng);
  const LinearContextModel model(RandomMatrix(2, 2, rng));
  const MediatorBatch med = RandomMediators(4, 2, rng);
  CdeConfig config;
  config.beta = 1.0;
  const SimilarityMatrix sim = ComputeSimilarityMatrix(model, z, med, config);
  std::vector<double> off;
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      if (i != j) off.push_back(sim.d(i, j));
    }
  }
  double mean = 0.0;
  for (double v : off) mean += v;
  mean /= off.size();
  double var = 0.0;
  for (double v : off) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / off.size());
  for (int i = 0; i < 6; ++i) {
    EXPECT_EQ(sim.w(i, i), 1.0);
    for (int j = 0; j < 6; ++j) {
      if (i == j) continue;
      EXPECT_NEAR(sim.w(i, j), std::exp(-sim.d(i, j) / sd), 1e-12);
      EXPECT_GT(sim.w(i, j), 0.0);
      EXPECT_LE(sim.w(i, j), 1.0);
    }
  }
}

TEST(Similarity, UnnormalizedDistanceOfBetaGivesInverseE) {
  CdeConfig config;
  config.beta = 2.5;
  config.normalize_by_batch_variance = false;
  Matrix2D d(2, 2);
  d << 0, 2.5, 2.5, 0;
  const SimilarityMatrix sim = SimilarityFromDistances(d, config);
  EXPECT_NEAR(sim.w(0, 1), std::exp(-1.0), 1e-15);
  EXPECT_EQ(SimilarityFromDistance(0.0, 10.0), 1.0);
  config.beta = 0.0;
  EXPECT_THROW(SimilarityFromDistances(d, config), ConfigError);
}

TEST(Similarity, InvariantToDistanceScale) {
  std::mt19937_64 rng(17);
  CdeConfig config;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + trial % 5;
    Matrix2D d = RandomMatrix(n, n, rng).cwiseAbs();
    d = (d + d.transpose()).eval();
    d.diagonal().setZero();
    const double scale = std::exp(RandomMatrix(1, 1, rng)(0, 0) * 3);
    const Matrix2D w1 = SimilarityFromDistances(d, config).w;
    const Matrix2D w2 = SimilarityFromDistances(d * scale, config).w;
    EXPECT_LT((w1 - w2).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Similarity, ConstantDistancesUseVarianceFloor) {
  Matrix2D d = Matrix2D::Zero(3, 3);
  const SimilarityMatrix sim = SimilarityFromDistances(d, CdeConfig{});
  EXPECT_TRUE(sim.w.isOnes(0.0));
}

TEST(DistLoss, SameTrajectoryPairsOnly) {
  std::mt19937_64 rng(3);
  const Matrix2D a = RandomMatrix(2, 2, rng);
  const LinearContextModel model(a);
  const Matrix2D z = RandomMatrix(4, 2, rng);
  const MediatorBatch med = RandomMediators(5, 2, rng);
  const std::vector<std::int64_t> ids = {1, 2, 1, 2};
  const Matrix2D d = AcdeMatrix(PredictUnderInterventions(model, med, z));
  EXPECT_NEAR(SameTrajectoryCdeLoss(model, z, ids, med), (d(0, 2) + d(1, 3)) / 2.0, 1e-12);
  SetQuiet(true);
  EXPECT_EQ(SameTrajectoryCdeLoss(model, z, std::vector<std::int64_t>{1, 2, 3, 4}, med), 0.0);
  SetQuiet(false);
}

TEST(InterventionStep, AgreesWithStandaloneFunctions) {
  std::mt19937_64 rng(11);
  DynamicsModel model = RandomModel(3, 4, rng);
  const Matrix2D z = RandomMatrix(6, 4, rng);
  const MediatorBatch med = RandomMediators(9, 3, rng);
  const std::vector<std::int64_t> ids = {0, 0, 1, 1, 2, 2};
  CdeConfig config;
  const InterventionStep step = ComputeInterventionStep(model, z, ids, med, config, true, true);
  const SimilarityMatrix sim = ComputeSimilarityMatrix(model, z, med, config);
  EXPECT_LT((step.similarity.d - sim.d).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LT((step.similarity.w - sim.w).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_NEAR(step.dist_loss, SameTrajectoryCdeLoss(model, z, ids, med), 1e-13);

  const InterventionStep no_dist =
      ComputeInterventionStep(model, z, ids, med, config, true, false);
  EXPECT_EQ(no_dist.dist_loss, 0.0);
  EXPECT_TRUE(no_dist.context_grad.isZero(0.0));
}

TEST(InterventionStep, DistGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(23);
  DynamicsModel model = RandomModel(2, 3, rng);
  Matrix2D z = RandomMatrix(6, 3, rng);
  const MediatorBatch med = RandomMediators(5, 2, rng);
  const std::vector<std::int64_t> ids = {4, 4, 4, 9, 9, 1};
  const InterventionStep step =
      ComputeInterventionStep(model, z, ids, med, CdeConfig{}, false, true);
  auto loss = [&] { return SameTrajectoryCdeLoss(model, z, ids, med); };
  const std::vector<double> analytic = FlattenGradients(step.head);
  std::vector<double*> params = ParameterPointers(model.net());
  int checked = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (RelativeError(analytic[i], CentralDifference(loss, params[i])) < 1e-5) ++checked;
  }
  EXPECT_GT(checked, static_cast<int>(params.size()) * 9 / 10);
  int z_checked = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (RelativeError(step.context_grad.data()[i], CentralDifference(loss, z.data() + i)) <
        1e-5) {
      ++z_checked;
    }
  }
  EXPECT_GT(z_checked, static_cast<int>(z.size()) * 9 / 10);
}

}  // namespace
}  // namespace ria
