#ifndef RIA_DYNAMICS_H_
#define RIA_DYNAMICS_H_

#include <cstdint>
#include <span>

#include "ria/environments.h"
#include "ria/matrix.h"
#include "ria/mlp.h"
#include "ria/segments.h"

namespace ria {

inline constexpr double kNormalizerStdFloor = 1e-6;

// Per-dimension statistics of states, actions and one-step state deltas.
// States and actions are standardized; deltas are only scaled (not
// centered), so a zero network output means "next state equals state".
struct Normalizer {
  RowVector state_mean, state_std;
  RowVector action_mean, action_std;
  RowVector delta_std;
  std::int64_t count = 0;

  static Normalizer Identity(int state_dim, int action_dim);
  // Statistics over every transition in `trajectories`. Falls back to the
  // identity normalizer if there are no transitions.
  static Normalizer Fit(std::span<const Trajectory> trajectories, int state_dim,
                        int action_dim);

  Matrix2D NormalizeStates(const Matrix2D& states) const;
  Matrix2D NormalizeActions(const Matrix2D& actions) const;
  Matrix2D ScaleDeltas(const Matrix2D& deltas) const;
  Matrix2D UnscaleDeltas(const Matrix2D& scaled) const;
};

// A batch of observed transitions, one per row.
struct TransitionBatch {
  Matrix2D states;
  Matrix2D actions;
  Matrix2D next_states;

  Eigen::Index size() const { return states.rows(); }
};

// Anything that maps (s, a, z) batches to expected next states.
class NextStatePredictor {
 public:
  virtual ~NextStatePredictor() = default;
  virtual Matrix2D PredictNext(const Matrix2D& states, const Matrix2D& actions,
                               const Matrix2D& contexts) const = 0;
  virtual int state_dim() const = 0;
};

// Ground-truth transition function of one environment, ignoring contexts.
// Observations are mapped back to the internal state (pendulum angle via
// atan2) before stepping.
class TrueDynamics : public NextStatePredictor {
 public:
  explicit TrueDynamics(EnvParams params) : params_(params) {}
  Matrix2D PredictNext(const Matrix2D& states, const Matrix2D& actions,
                       const Matrix2D& contexts) const override;
  int state_dim() const override { return StateDim(params_.kind); }

 private:
  EnvParams params_;
};

// Context-conditioned next-state model:
//   s' = s + delta_std * net([norm(s), norm(a), z]).
class DynamicsModel : public NextStatePredictor {
 public:
  DynamicsModel() = default;
  DynamicsModel(int state_dim, int action_dim, int context_dim,
                int hidden_width = 200, int hidden_layers = 4);
  DynamicsModel(Mlp net, Normalizer normalizer, int state_dim, int action_dim,
                int context_dim);

  Matrix2D BuildInput(const Matrix2D& states, const Matrix2D& actions,
                      const Matrix2D& contexts) const;
  Matrix2D PredictNext(const Matrix2D& states, const Matrix2D& actions,
                       const Matrix2D& contexts) const override;
  Vector PredictNext(const Vector& state, const Vector& action,
                     const ContextVector& context) const;

  int state_dim() const override { return state_dim_; }
  int action_dim() const { return action_dim_; }
  int context_dim() const { return context_dim_; }
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  Normalizer& normalizer() { return normalizer_; }
  const Normalizer& normalizer() const { return normalizer_; }

 private:
  int state_dim_ = 0;
  int action_dim_ = 0;
  int context_dim_ = 0;
  Mlp net_;
  Normalizer normalizer_;
};

struct PredictionLossResult {
  double loss = 0.0;
  MlpGradients head;
  // dLoss/dz, one row per transition.
  Matrix2D context_grad;
};

// (1/N) sum_i 1/2 || (s'_i - s_i) / delta_std - net(...) ||^2, the negative
// log-likelihood of a unit-variance Gaussian over scaled deltas (up to a
// constant). Throws DivergedTraining on a non-finite loss.
double PredictionLoss(const DynamicsModel& model, const TransitionBatch& batch,
                      const Matrix2D& contexts);
PredictionLossResult PredictionLossWithGrad(DynamicsModel& model,
                                            const TransitionBatch& batch,
                                            const Matrix2D& contexts);

// Mean over transitions and state dimensions of squared prediction error in
// scaled-delta units.
double NormalizedMse(const DynamicsModel& model, const TransitionBatch& batch,
                     const Matrix2D& contexts);

}  // namespace ria

#endif  // RIA_DYNAMICS_H_
