#include "ria/dynamics.h"

#include <cmath>

#include "ria/errors.h"

namespace ria {
namespace {

RowVector FlooredStd(const RowVector& sum_sq, double n, const RowVector& mean) {
  RowVector var = sum_sq / n - mean.cwiseProduct(mean);
  return var.cwiseMax(0.0).cwiseSqrt().cwiseMax(kNormalizerStdFloor);
}

void CheckBatch(const DynamicsModel& model, const TransitionBatch& batch,
                const Matrix2D& contexts) {
  if (batch.size() < 1) throw ConfigError("prediction loss needs a non-empty batch");
  if (batch.states.cols() != model.state_dim() ||
      batch.next_states.cols() != model.state_dim() ||
      batch.actions.cols() != model.action_dim() ||
      contexts.cols() != model.context_dim() ||
      batch.actions.rows() != batch.size() ||
      batch.next_states.rows() != batch.size() ||
      contexts.rows() != batch.size()) {
    throw ConfigError("transition batch shape does not match the dynamics model");
  }
}

}  // namespace

Normalizer Normalizer::Identity(int state_dim, int action_dim) {
  Normalizer n;
  n.state_mean = RowVector::Zero(state_dim);
  n.state_std = RowVector::Ones(state_dim);
  n.action_mean = RowVector::Zero(action_dim);
  n.action_std = RowVector::Ones(action_dim);
  n.delta_std = RowVector::Ones(state_dim);
  return n;
}

Normalizer Normalizer::Fit(std::span<const Trajectory> trajectories,
                           int state_dim, int action_dim) {
  RowVector s_sum = RowVector::Zero(state_dim), s_sq = RowVector::Zero(state_dim);
  RowVector a_sum = RowVector::Zero(action_dim), a_sq = RowVector::Zero(action_dim);
  RowVector d_sum = RowVector::Zero(state_dim), d_sq = RowVector::Zero(state_dim);
  std::int64_t n = 0;
  for (const Trajectory& traj : trajectories) {
    for (std::size_t t = 0; t < traj.num_steps(); ++t) {
      const RowVector s = traj.states[t].transpose();
      const RowVector a = traj.actions[t].transpose();
      const RowVector d = (traj.states[t + 1] - traj.states[t]).transpose();
      s_sum += s;
      s_sq += s.cwiseProduct(s);
      a_sum += a;
      a_sq += a.cwiseProduct(a);
      d_sum += d;
      d_sq += d.cwiseProduct(d);
      ++n;
    }
  }
  if (n == 0) return Identity(state_dim, action_dim);
  const double count = static_cast<double>(n);
  Normalizer out;
  out.count = n;
  out.state_mean = s_sum / count;
  out.state_std = FlooredStd(s_sq, count, out.state_mean);
  out.action_mean = a_sum / count;
  out.action_std = FlooredStd(a_sq, count, out.action_mean);
  out.delta_std = FlooredStd(d_sq, count, d_sum / count);
  return out;
}

Matrix2D Normalizer::NormalizeStates(const Matrix2D& states) const {
  return (states.rowwise() - state_mean).array().rowwise() / state_std.array();
}

Matrix2D Normalizer::NormalizeActions(const Matrix2D& actions) const {
  return (actions.rowwise() - action_mean).array().rowwise() / action_std.array();
}

Matrix2D Normalizer::ScaleDeltas(const Matrix2D& deltas) const {
  return deltas.array().rowwise() / delta_std.array();
}

Matrix2D Normalizer::UnscaleDeltas(const Matrix2D& scaled) const {
  return scaled.array().rowwise() * delta_std.array();
}

Matrix2D TrueDynamics::PredictNext(const Matrix2D& states, const Matrix2D& actions,
                                   const Matrix2D&) const {
  Matrix2D next(states.rows(), states.cols());
  for (Eigen::Index i = 0; i < states.rows(); ++i) {
    Environment env(params_);
    if (params_.kind == EnvKind::kPendulum) {
      env.SetRawState(std::atan2(states(i, 1), states(i, 0)), states(i, 2));
    } else {
      env.SetRawState(states(i, 0), states(i, 1));
    }
    env.Step(actions.row(i).transpose());
    next.row(i) = env.Observe().transpose();
  }
  return next;
}

DynamicsModel::DynamicsModel(int state_dim, int action_dim, int context_dim,
                             int hidden_width, int hidden_layers)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      context_dim_(context_dim),
      normalizer_(Normalizer::Identity(state_dim, action_dim)) {
  std::vector<int> dims = {state_dim + action_dim + context_dim};
  for (int i = 0; i < hidden_layers; ++i) dims.push_back(hidden_width);
  dims.push_back(state_dim);
  net_ = Mlp(dims, Activation::kRelu, OutputActivation::kIdentity);
}

DynamicsModel::DynamicsModel(Mlp net, Normalizer normalizer, int state_dim,
                             int action_dim, int context_dim)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      context_dim_(context_dim),
      net_(std::move(net)),
      normalizer_(std::move(normalizer)) {
  if (net_.input_dim() != state_dim + action_dim + context_dim ||
      net_.output_dim() != state_dim) {
    throw ConfigError("dynamics network shape does not match its dimensions");
  }
}

Matrix2D DynamicsModel::BuildInput(const Matrix2D& states, const Matrix2D& actions,
                                   const Matrix2D& contexts) const {
  const Eigen::Index n = states.rows();
  if (actions.rows() != n || contexts.rows() != n ||
      states.cols() != state_dim_ || actions.cols() != action_dim_ ||
      contexts.cols() != context_dim_) {
    throw ConfigError("dynamics input shape mismatch");
  }
  Matrix2D input(n, state_dim_ + action_dim_ + context_dim_);
  input.leftCols(state_dim_) = normalizer_.NormalizeStates(states);
  input.middleCols(state_dim_, action_dim_) = normalizer_.NormalizeActions(actions);
  input.rightCols(context_dim_) = contexts;
  return input;
}

Matrix2D DynamicsModel::PredictNext(const Matrix2D& states, const Matrix2D& actions,
                                    const Matrix2D& contexts) const {
  return states + normalizer_.UnscaleDeltas(net_.Predict(BuildInput(states, actions, contexts)));
}

Vector DynamicsModel::PredictNext(const Vector& state, const Vector& action,
                                  const ContextVector& context) const {
  Matrix2D s = state.transpose();
  Matrix2D a = action.transpose();
  Matrix2D z = context.values;
  return PredictNext(s, a, z).row(0).transpose();
}

double PredictionLoss(const DynamicsModel& model, const TransitionBatch& batch,
                      const Matrix2D& contexts) {
  CheckBatch(model, batch, contexts);
  const Matrix2D target =
      model.normalizer().ScaleDeltas(batch.next_states - batch.states);
  const Matrix2D out =
      model.net().Predict(model.BuildInput(batch.states, batch.actions, contexts));
  const double loss = 0.5 * (out - target).squaredNorm() / static_cast<double>(batch.size());
  if (!std::isfinite(loss)) throw DivergedTraining("prediction loss is not finite");
  return loss;
}

PredictionLossResult PredictionLossWithGrad(DynamicsModel& model,
                                            const TransitionBatch& batch,
                                            const Matrix2D& contexts) {
  CheckBatch(model, batch, contexts);
  const double n = static_cast<double>(batch.size());
  const Matrix2D target =
      model.normalizer().ScaleDeltas(batch.next_states - batch.states);
  const Matrix2D& out =
      model.net().Forward(model.BuildInput(batch.states, batch.actions, contexts));
  const Matrix2D residual = out - target;
  PredictionLossResult result;
  result.loss = 0.5 * residual.squaredNorm() / n;
  if (!std::isfinite(result.loss)) {
    throw DivergedTraining("prediction loss is not finite");
  }
  result.head = model.net().Backward(residual / n);
  result.context_grad = result.head.input.rightCols(model.context_dim());
  return result;
}

double NormalizedMse(const DynamicsModel& model, const TransitionBatch& batch,
                     const Matrix2D& contexts) {
  CheckBatch(model, batch, contexts);
  const Matrix2D predicted = model.PredictNext(batch.states, batch.actions, contexts);
  const Matrix2D err = model.normalizer().ScaleDeltas(predicted - batch.next_states);
  return err.squaredNorm() / static_cast<double>(err.size());
}

}  // namespace ria
