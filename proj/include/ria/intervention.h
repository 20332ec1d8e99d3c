#ifndef RIA_INTERVENTION_H_
#define RIA_INTERVENTION_H_

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "ria/dynamics.h"
#include "ria/matrix.h"
#include "ria/mlp.h"

namespace ria {

inline constexpr double kDistanceVarianceFloor = 1e-12;

struct CdeConfig {
  double beta = 10.0;       // distance sensitivity: pendulum 10, springmass 1
  int mediator_batch = 64;  // (s_t, a_t) pairs averaged over per distance
  bool normalize_by_batch_variance = true;

  void Validate() const;
};

// (s_t, a_t) pairs drawn from observational data, held fixed while the
// context is intervened on.
struct MediatorBatch {
  Matrix2D states;
  Matrix2D actions;

  Eigen::Index size() const { return states.rows(); }
};

struct SimilarityMatrix {
  Matrix2D d;  // raw average controlled direct effects
  Matrix2D w;  // exp(-d_norm / beta), in (0, 1]
};

// E[s' | s, a, z_j] - E[s' | s, a, z_k] with (s, a) held fixed.
Vector ControlledDirectEffect(const NextStatePredictor& model, const Vector& state,
                             const Vector& action, const RowVector& z_j,
                             const RowVector& z_k);

// Mean over mediators of the mean absolute CDE across state dimensions.
double AverageCde(const NextStatePredictor& model, const MediatorBatch& mediators,
                  const RowVector& z_j, const RowVector& z_k);

// predictions[j] is the M x state_dim matrix of expected next states for
// every mediator under do(Z = z_j).
std::vector<Matrix2D> PredictUnderInterventions(const NextStatePredictor& model,
                                                const MediatorBatch& mediators,
                                                const Matrix2D& contexts);

// N x N symmetric matrix of average CDEs between interventions.
Matrix2D AcdeMatrix(const std::vector<Matrix2D>& predictions);

inline double SimilarityFromDistance(double d_norm, double beta) {
  return std::exp(-d_norm / beta);
}

// Divides d by the standard deviation of its off-diagonal entries (when
// enabled) and maps to w = exp(-d_norm / beta).
SimilarityMatrix SimilarityFromDistances(Matrix2D d, const CdeConfig& config);

SimilarityMatrix ComputeSimilarityMatrix(const NextStatePredictor& model,
                                         const Matrix2D& contexts,
                                         const MediatorBatch& mediators,
                                         const CdeConfig& config);

struct CdeLossTerms {
  double loss = 0.0;
  int pairs = 0;
  // dLoss/dpredictions[j], same layout as the predictions.
  std::vector<Matrix2D> prediction_grads;
};

// Mean ACDE over ordered pairs (i != j) that share a trajectory id, with its
// (sub)gradient. Zero with a warning when there is no such pair.
CdeLossTerms SameTrajectoryCdeTerms(const std::vector<Matrix2D>& predictions,
                                    std::span<const std::int64_t> trajectory_ids);

double SameTrajectoryCdeLoss(const NextStatePredictor& model,
                             const Matrix2D& contexts,
                             std::span<const std::int64_t> trajectory_ids,
                             const MediatorBatch& mediators);

// Everything one training step needs from the intervention module, from a
// single pass of the dynamics network over all (mediator, context) pairs.
struct InterventionStep {
  SimilarityMatrix similarity;  // constant w.r.t. parameters
  double dist_loss = 0.0;
  MlpGradients head;            // dL^dist / d(head parameters)
  Matrix2D context_grad;        // dL^dist / dz
};

InterventionStep ComputeInterventionStep(DynamicsModel& model,
                                         const Matrix2D& contexts,
                                         std::span<const std::int64_t> trajectory_ids,
                                         const MediatorBatch& mediators,
                                         const CdeConfig& config,
                                         bool with_similarity, bool with_dist);

}  // namespace ria

#endif  // RIA_INTERVENTION_H_
