#include "ria/intervention.h"

#include <cmath>

#include "ria/errors.h"
#include "ria/logging.h"

namespace ria {
namespace {

void CheckMediators(const MediatorBatch& mediators) {
  if (mediators.size() < 1) {
    throw ConfigError("average CDE needs a non-empty mediator batch");
  }
  if (mediators.actions.rows() != mediators.size()) {
    throw ConfigError("mediator states and actions differ in count");
  }
}

// Rows j * M + i hold (s_i, a_i, z_j).
void TileInterventions(const MediatorBatch& mediators, const Matrix2D& contexts,
                       Matrix2D& states, Matrix2D& actions, Matrix2D& z) {
  const Eigen::Index m = mediators.size();
  const Eigen::Index n = contexts.rows();
  states.resize(n * m, mediators.states.cols());
  actions.resize(n * m, mediators.actions.cols());
  z.resize(n * m, contexts.cols());
  for (Eigen::Index j = 0; j < n; ++j) {
    states.middleRows(j * m, m) = mediators.states;
    actions.middleRows(j * m, m) = mediators.actions;
    z.middleRows(j * m, m) = contexts.row(j).replicate(m, 1);
  }
}

double PairDistance(const Matrix2D& a, const Matrix2D& b) {
  return (a - b).cwiseAbs().sum() / static_cast<double>(a.size());
}

}  // namespace

void CdeConfig::Validate() const {
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  if (mediator_batch < 1) throw ConfigError("mediator batch must be >= 1");
}

Vector ControlledDirectEffect(const NextStatePredictor& model, const Vector& state,
                              const Vector& action, const RowVector& z_j,
                              const RowVector& z_k) {
  Matrix2D s(2, state.size());
  Matrix2D a(2, action.size());
  Matrix2D z(2, z_j.size());
  s.row(0) = state.transpose();
  s.row(1) = state.transpose();
  a.row(0) = action.transpose();
  a.row(1) = action.transpose();
  z.row(0) = z_j;
  z.row(1) = z_k;
  const Matrix2D next = model.PredictNext(s, a, z);
  return (next.row(0) - next.row(1)).transpose();
}

double AverageCde(const NextStatePredictor& model, const MediatorBatch& mediators,
                  const RowVector& z_j, const RowVector& z_k) {
  CheckMediators(mediators);
  Matrix2D contexts(2, z_j.size());
  contexts.row(0) = z_j;
  contexts.row(1) = z_k;
  const auto predictions = PredictUnderInterventions(model, mediators, contexts);
  return PairDistance(predictions[0], predictions[1]);
}

std::vector<Matrix2D> PredictUnderInterventions(const NextStatePredictor& model,
                                                const MediatorBatch& mediators,
                                                const Matrix2D& contexts) {
  CheckMediators(mediators);
  Matrix2D s, a, z;
  TileInterventions(mediators, contexts, s, a, z);
  const Matrix2D all = model.PredictNext(s, a, z);
  const Eigen::Index m = mediators.size();
  std::vector<Matrix2D> out(contexts.rows());
  for (Eigen::Index j = 0; j < contexts.rows(); ++j) out[j] = all.middleRows(j * m, m);
  return out;
}

Matrix2D AcdeMatrix(const std::vector<Matrix2D>& predictions) {
  const Eigen::Index n = static_cast<Eigen::Index>(predictions.size());
  Matrix2D d = Matrix2D::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = j + 1; k < n; ++k) {
      const double dist = PairDistance(predictions[j], predictions[k]);
      d(j, k) = dist;
      d(k, j) = dist;
    }
  }
  return d;
}

SimilarityMatrix SimilarityFromDistances(Matrix2D d, const CdeConfig& config) {
  config.Validate();
  const Eigen::Index n = d.rows();
  if (d.cols() != n) throw ConfigError("distance matrix must be square");
  Matrix2D d_norm = d;
  if (config.normalize_by_batch_variance && n >= 2) {
    double sum = 0.0;
    double sum_sq = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        sum += d(i, j);
        sum_sq += d(i, j) * d(i, j);
      }
    }
    const double count = static_cast<double>(n * (n - 1));
    const double mean = sum / count;
    const double var = std::max(sum_sq / count - mean * mean, 0.0);
    d_norm /= std::sqrt(std::max(var, kDistanceVarianceFloor));
  }
  SimilarityMatrix out;
  out.w = Matrix2D::Ones(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j) out.w(i, j) = SimilarityFromDistance(d_norm(i, j), config.beta);
    }
  }
  out.d = std::move(d);
  return out;
}

SimilarityMatrix ComputeSimilarityMatrix(const NextStatePredictor& model,
                                         const Matrix2D& contexts,
                                         const MediatorBatch& mediators,
                                         const CdeConfig& config) {
  if (contexts.rows() < 2) throw ConfigError("similarity needs at least two contexts");
  return SimilarityFromDistances(
      AcdeMatrix(PredictUnderInterventions(model, mediators, contexts)), config);
}

CdeLossTerms SameTrajectoryCdeTerms(const std::vector<Matrix2D>& predictions,
                                    std::span<const std::int64_t> trajectory_ids) {
  const std::size_t n = predictions.size();
  if (trajectory_ids.size() != n) throw ConfigError("one trajectory id per context");
  CdeLossTerms terms;
  terms.prediction_grads.reserve(n);
  for (const Matrix2D& p : predictions) {
    terms.prediction_grads.push_back(Matrix2D::Zero(p.rows(), p.cols()));
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      if (j != k && trajectory_ids[j] == trajectory_ids[k]) ++terms.pairs;
    }
  }
  if (terms.pairs == 0) {
    Warn("no same-trajectory pair in batch; L^dist set to 0");
    return terms;
  }
  const double pair_scale = 1.0 / static_cast<double>(terms.pairs);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      if (j == k || trajectory_ids[j] != trajectory_ids[k]) continue;
      const Matrix2D diff = predictions[j] - predictions[k];
      const double per_entry = pair_scale / static_cast<double>(diff.size());
      terms.loss += pair_scale * diff.cwiseAbs().sum() / static_cast<double>(diff.size());
      const Matrix2D sign = diff.array().sign().matrix() * per_entry;
      terms.prediction_grads[j] += sign;
      terms.prediction_grads[k] -= sign;
    }
  }
  return terms;
}

double SameTrajectoryCdeLoss(const NextStatePredictor& model,
                             const Matrix2D& contexts,
                             std::span<const std::int64_t> trajectory_ids,
                             const MediatorBatch& mediators) {
  return SameTrajectoryCdeTerms(PredictUnderInterventions(model, mediators, contexts),
                                trajectory_ids)
      .loss;
}

InterventionStep ComputeInterventionStep(DynamicsModel& model,
                                         const Matrix2D& contexts,
                                         std::span<const std::int64_t> trajectory_ids,
                                         const MediatorBatch& mediators,
                                         const CdeConfig& config,
                                         bool with_similarity, bool with_dist) {
  CheckMediators(mediators);
  const Eigen::Index m = mediators.size();
  const Eigen::Index n = contexts.rows();
  Matrix2D s, a, z;
  TileInterventions(mediators, contexts, s, a, z);

  Mlp& net = model.net();
  const Matrix2D& out = net.Forward(model.BuildInput(s, a, z));
  const Matrix2D next = s + model.normalizer().UnscaleDeltas(out);
  std::vector<Matrix2D> predictions(n);
  for (Eigen::Index j = 0; j < n; ++j) predictions[j] = next.middleRows(j * m, m);

  InterventionStep step;
  if (with_similarity) {
    step.similarity = SimilarityFromDistances(AcdeMatrix(predictions), config);
  }
  step.context_grad = Matrix2D::Zero(n, contexts.cols());
  if (!with_dist) {
    step.head = net.ZeroGradients();
    return step;
  }
  const CdeLossTerms terms = SameTrajectoryCdeTerms(predictions, trajectory_ids);
  step.dist_loss = terms.loss;
  Matrix2D upstream(n * m, model.state_dim());
  for (Eigen::Index j = 0; j < n; ++j) {
    upstream.middleRows(j * m, m) =
        terms.prediction_grads[j].array().rowwise() *
        model.normalizer().delta_std.array();
  }
  step.head = net.Backward(upstream);
  const Eigen::Index offset = model.state_dim() + model.action_dim();
  for (Eigen::Index j = 0; j < n; ++j) {
    step.context_grad.row(j) =
        step.head.input.block(j * m, offset, m, contexts.cols()).colwise().sum();
  }
  return step;
}

}  // namespace ria
