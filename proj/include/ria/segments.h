#ifndef RIA_SEGMENTS_H_
#define RIA_SEGMENTS_H_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ria/environments.h"
#include "ria/matrix.h"
#include "ria/mlp.h"

namespace ria {

inline constexpr int kDefaultSegmentLength = 10;
inline constexpr int kDefaultContextDim = 10;

// k consecutive (state, action) pairs of one trajectory, ending right before
// time step `anchor_t`.
class TransitionSegment {
 public:
  TransitionSegment() = default;
  TransitionSegment(std::int64_t trajectory_id, int env_label, int anchor_t,
                    Matrix2D states, Matrix2D actions);

  std::int64_t trajectory_id() const { return trajectory_id_; }
  int anchor_t() const { return anchor_t_; }
  // Evaluation-only. Throws inside an UnsupervisedScope.
  int env_label() const {
    CheckLabelAccess();
    return env_label_;
  }
  int length() const { return static_cast<int>(states_.rows()); }
  const Matrix2D& states() const { return states_; }
  const Matrix2D& actions() const { return actions_; }

  // Time-major layout [s_{t-k}, a_{t-k}, ..., s_{t-1}, a_{t-1}].
  RowVector Flatten() const;

 private:
  std::int64_t trajectory_id_ = 0;
  int env_label_ = -1;
  int anchor_t_ = 0;
  Matrix2D states_;
  Matrix2D actions_;
};

struct ContextVector {
  RowVector values;
  int dim() const { return static_cast<int>(values.size()); }
};

// The segment covering steps [anchor_t - k, anchor_t).
TransitionSegment SegmentAt(const Trajectory& traj, int k, int anchor_t);

// Samples `count` segments at uniformly random anchors in [k, T] (or
// [k, T - 1] when `require_target`, so that (s_t, a_t, s_{t+1}) exists).
// Returns an empty list with a warning if the trajectory is too short.
std::vector<TransitionSegment> BuildSegments(const Trajectory& traj, int k,
                                             int count, std::mt19937_64& rng,
                                             bool require_target = false);

// Left-pads fewer than k observed pairs with all-zero pairs.
TransitionSegment PadSegment(std::span<const Vector> states,
                             std::span<const Vector> actions, int k,
                             int state_dim, int action_dim);

Matrix2D FlattenSegments(std::span<const TransitionSegment> segments);

ContextVector Encode(const TransitionSegment& segment, const Mlp& encoder);
// One context per row.
Matrix2D EncodeBatch(std::span<const TransitionSegment> segments,
                     const Mlp& encoder);

// Encoder with `hidden_layers` relu layers of `hidden_width` units.
Mlp MakeEncoder(int k, int state_dim, int action_dim, int context_dim,
                int hidden_width = 128, int hidden_layers = 3);

}  // namespace ria

#endif  // RIA_SEGMENTS_H_
