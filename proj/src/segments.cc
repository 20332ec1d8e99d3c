#include "ria/segments.h"

#include <string>

#include "ria/errors.h"
#include "ria/logging.h"

namespace ria {

TransitionSegment::TransitionSegment(std::int64_t trajectory_id, int env_label,
                                     int anchor_t, Matrix2D states,
                                     Matrix2D actions)
    : trajectory_id_(trajectory_id),
      env_label_(env_label),
      anchor_t_(anchor_t),
      states_(std::move(states)),
      actions_(std::move(actions)) {
  if (states_.rows() != actions_.rows()) {
    throw ConfigError("segment states and actions differ in length");
  }
}

RowVector TransitionSegment::Flatten() const {
  const Eigen::Index sd = states_.cols();
  const Eigen::Index ad = actions_.cols();
  RowVector flat(states_.rows() * (sd + ad));
  for (Eigen::Index t = 0; t < states_.rows(); ++t) {
    flat.segment(t * (sd + ad), sd) = states_.row(t);
    flat.segment(t * (sd + ad) + sd, ad) = actions_.row(t);
  }
  return flat;
}

TransitionSegment SegmentAt(const Trajectory& traj, int k, int anchor_t) {
  if (k <= 0) throw ConfigError("segment length must be positive");
  if (anchor_t < k || anchor_t > static_cast<int>(traj.num_steps())) {
    throw ConfigError("segment anchor out of range");
  }
  const Eigen::Index sd = traj.states.front().size();
  const Eigen::Index ad = traj.actions.front().size();
  Matrix2D states(k, sd);
  Matrix2D actions(k, ad);
  for (int i = 0; i < k; ++i) {
    const int t = anchor_t - k + i;
    states.row(i) = traj.states[t].transpose();
    actions.row(i) = traj.actions[t].transpose();
  }
  return {traj.id(), internal::CarryLabel(traj), anchor_t, std::move(states),
          std::move(actions)};
}

std::vector<TransitionSegment> BuildSegments(const Trajectory& traj, int k,
                                             int count, std::mt19937_64& rng,
                                             bool require_target) {
  const int steps = static_cast<int>(traj.num_steps());
  const int max_anchor = require_target ? steps - 1 : steps;
  if (k <= 0) throw ConfigError("segment length must be positive");
  if (max_anchor < k) {
    Warn("trajectory " + std::to_string(traj.id()) + " has " +
         std::to_string(steps) + " steps, too short for segments of length " +
         std::to_string(k));
    return {};
  }
  std::uniform_int_distribution<int> anchor(k, max_anchor);
  std::vector<TransitionSegment> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(SegmentAt(traj, k, anchor(rng)));
  return out;
}

TransitionSegment PadSegment(std::span<const Vector> states,
                             std::span<const Vector> actions, int k,
                             int state_dim, int action_dim) {
  if (states.size() != actions.size()) {
    throw ConfigError("partial segment states and actions differ in length");
  }
  if (static_cast<int>(states.size()) >= k) {
    throw ConfigError("PadSegment expects fewer than k pairs");
  }
  Matrix2D s = Matrix2D::Zero(k, state_dim);
  Matrix2D a = Matrix2D::Zero(k, action_dim);
  const int offset = k - static_cast<int>(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    s.row(offset + i) = states[i].transpose();
    a.row(offset + i) = actions[i].transpose();
  }
  return {-1, -1, static_cast<int>(states.size()), std::move(s), std::move(a)};
}

Matrix2D FlattenSegments(std::span<const TransitionSegment> segments) {
  if (segments.empty()) return Matrix2D(0, 0);
  const RowVector first = segments.front().Flatten();
  Matrix2D out(segments.size(), first.size());
  out.row(0) = first;
  for (std::size_t i = 1; i < segments.size(); ++i) {
    const RowVector flat = segments[i].Flatten();
    if (flat.size() != first.size()) {
      throw ConfigError("segments in one batch must share their shape");
    }
    out.row(i) = flat;
  }
  return out;
}

ContextVector Encode(const TransitionSegment& segment, const Mlp& encoder) {
  Matrix2D input = segment.Flatten();
  return {encoder.Predict(input).row(0)};
}

Matrix2D EncodeBatch(std::span<const TransitionSegment> segments,
                     const Mlp& encoder) {
  return encoder.Predict(FlattenSegments(segments));
}

Mlp MakeEncoder(int k, int state_dim, int action_dim, int context_dim,
                int hidden_width, int hidden_layers) {
  std::vector<int> dims = {k * (state_dim + action_dim)};
  for (int i = 0; i < hidden_layers; ++i) dims.push_back(hidden_width);
  dims.push_back(context_dim);
  return Mlp(dims, Activation::kRelu, OutputActivation::kIdentity);
}

}  // namespace ria
