#ifndef RIA_RELATIONAL_H_
#define RIA_RELATIONAL_H_

#include <cstdint>
#include <span>
#include <vector>

#include "ria/matrix.h"
#include "ria/mlp.h"

namespace ria {

inline constexpr double kLogFloor = 1e-12;

// All ordered pairs of one minibatch of contexts. Diagonal entries of y, w
// and scores are never read.
struct PairBatch {
  Matrix2D contexts;              // N x context_dim
  std::vector<std::int64_t> ids;  // grouping key per context
  Matrix2D y;                     // 1 iff same group, i != j
  Matrix2D w;                     // similarity weights in (0, 1]
  Matrix2D scores;                // h([z_i, z_j]) in (0, 1)

  int size() const { return static_cast<int>(contexts.rows()); }
};

// y[i][j] = 1 iff ids[i] == ids[j] and i != j.
Matrix2D SameGroupLabels(std::span<const std::int64_t> ids);
PairBatch MakePairBatch(Matrix2D contexts, std::vector<std::int64_t> ids);

// Relational head: [z_i, z_j] -> relu(10) -> sigmoid.
Mlp MakeRelationalHead(int context_dim, int hidden_units = 10);

// Rows [z_i, z_j] for every i != j, ordered by i then j.
Matrix2D PairInputs(const Matrix2D& contexts);
// N x N matrix with scores[i][j] = h([z_i, z_j]); the diagonal is zero.
Matrix2D ScorePairs(const Mlp& head, const Matrix2D& contexts);

// Binary cross-entropy over i != j with trajectory labels:
//   -1/(N(N-1)) sum [y log s + (1-y) log(1-s)].
double RelationLoss(const PairBatch& batch);
// Same with soft positives: coefficient y + (1-y) w on log s and
// (1-y)(1-w) on log(1-s). Equals RelationLoss exactly when w == 0.
double InterventionRelationLoss(const PairBatch& batch);

struct RelationLossResult {
  double loss = 0.0;
  Matrix2D scores;
  MlpGradients head;
  Matrix2D context_grad;  // N x context_dim
};

// Scores all pairs with `head`, evaluates the (intervention) relation loss
// and backpropagates into the head and the contexts. `weights` is treated as
// a constant; pass nullptr for the plain relation loss.
RelationLossResult RelationLossWithGrad(Mlp& head, const Matrix2D& contexts,
                                        const Matrix2D& labels,
                                        const Matrix2D* weights);

}  // namespace ria

#endif  // RIA_RELATIONAL_H_
