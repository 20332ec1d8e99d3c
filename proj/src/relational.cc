#include "ria/relational.h"

#include <algorithm>
#include <cmath>

#include "ria/errors.h"

namespace ria {
namespace {

void CheckPairs(const Matrix2D& scores, const Matrix2D& labels,
                const Matrix2D* weights) {
  const Eigen::Index n = scores.rows();
  if (n < 2) throw ConfigError("relation losses need at least two contexts");
  if (scores.cols() != n || labels.rows() != n || labels.cols() != n ||
      (weights != nullptr && (weights->rows() != n || weights->cols() != n))) {
    throw ConfigError("pair matrices must all be N x N");
  }
}

double PositiveCoef(double y, const Matrix2D* w, Eigen::Index i, Eigen::Index j) {
  return w == nullptr ? y : y + (1.0 - y) * (*w)(i, j);
}

double NegativeCoef(double y, const Matrix2D* w, Eigen::Index i, Eigen::Index j) {
  return w == nullptr ? 1.0 - y : (1.0 - y) * (1.0 - (*w)(i, j));
}

double PairCrossEntropy(const Matrix2D& scores, const Matrix2D& labels,
                        const Matrix2D* weights) {
  CheckPairs(scores, labels, weights);
  const Eigen::Index n = scores.rows();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double s = scores(i, j);
      const double y = labels(i, j);
      total += PositiveCoef(y, weights, i, j) * std::log(std::max(s, kLogFloor)) +
               NegativeCoef(y, weights, i, j) * std::log(std::max(1.0 - s, kLogFloor));
    }
  }
  return -total / static_cast<double>(n * (n - 1));
}

}  // namespace

Matrix2D SameGroupLabels(std::span<const std::int64_t> ids) {
  const Eigen::Index n = static_cast<Eigen::Index>(ids.size());
  Matrix2D y = Matrix2D::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && ids[i] == ids[j]) y(i, j) = 1.0;
    }
  }
  return y;
}

PairBatch MakePairBatch(Matrix2D contexts, std::vector<std::int64_t> ids) {
  if (static_cast<std::size_t>(contexts.rows()) != ids.size()) {
    throw ConfigError("one id per context is required");
  }
  PairBatch batch;
  batch.y = SameGroupLabels(ids);
  batch.w = Matrix2D::Zero(contexts.rows(), contexts.rows());
  batch.scores = Matrix2D::Constant(contexts.rows(), contexts.rows(), 0.5);
  batch.contexts = std::move(contexts);
  batch.ids = std::move(ids);
  return batch;
}

Mlp MakeRelationalHead(int context_dim, int hidden_units) {
  return Mlp({2 * context_dim, hidden_units, 1}, Activation::kRelu,
             OutputActivation::kSigmoid);
}

Matrix2D PairInputs(const Matrix2D& contexts) {
  const Eigen::Index n = contexts.rows();
  const Eigen::Index c = contexts.cols();
  Matrix2D rows(n * (n - 1), 2 * c);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      rows.row(r).head(c) = contexts.row(i);
      rows.row(r).tail(c) = contexts.row(j);
      ++r;
    }
  }
  return rows;
}

namespace {

Matrix2D ScatterScores(const Matrix2D& flat, Eigen::Index n) {
  Matrix2D scores = Matrix2D::Zero(n, n);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      scores(i, j) = flat(r++, 0);
    }
  }
  return scores;
}

}  // namespace

Matrix2D ScorePairs(const Mlp& head, const Matrix2D& contexts) {
  if (contexts.rows() < 2) throw ConfigError("scoring pairs needs N >= 2");
  return ScatterScores(head.Predict(PairInputs(contexts)), contexts.rows());
}

double RelationLoss(const PairBatch& batch) {
  return PairCrossEntropy(batch.scores, batch.y, nullptr);
}

double InterventionRelationLoss(const PairBatch& batch) {
  return PairCrossEntropy(batch.scores, batch.y, &batch.w);
}

RelationLossResult RelationLossWithGrad(Mlp& head, const Matrix2D& contexts,
                                        const Matrix2D& labels,
                                        const Matrix2D* weights) {
  const Eigen::Index n = contexts.rows();
  if (n < 2) throw ConfigError("relation losses need at least two contexts");
  const Eigen::Index c = contexts.cols();
  const Matrix2D& flat = head.Forward(PairInputs(contexts));

  RelationLossResult result;
  result.scores = ScatterScores(flat, n);
  result.loss = PairCrossEntropy(result.scores, labels, weights);

  const double scale = 1.0 / static_cast<double>(n * (n - 1));
  Matrix2D upstream(flat.rows(), 1);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double s = flat(r, 0);
      const double y = labels(i, j);
      double g = 0.0;
      if (s > kLogFloor) g -= PositiveCoef(y, weights, i, j) / s;
      if (1.0 - s > kLogFloor) g += NegativeCoef(y, weights, i, j) / (1.0 - s);
      upstream(r, 0) = g * scale;
      ++r;
    }
  }
  result.head = head.Backward(upstream);

  result.context_grad = Matrix2D::Zero(n, c);
  r = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      result.context_grad.row(i) += result.head.input.row(r).head(c);
      result.context_grad.row(j) += result.head.input.row(r).tail(c);
      ++r;
    }
  }
  return result;
}

}  // namespace ria
