#ifndef RIA_PLANNER_H_
#define RIA_PLANNER_H_

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "ria/dynamics.h"
#include "ria/environments.h"
#include "ria/matrix.h"
#include "ria/mlp.h"
#include "ria/segments.h"

namespace ria {

struct CemConfig {
  int horizon = 30;
  int candidates = 200;
  int iterations = 5;
  int elites = 20;
  // Initial per-step standard deviation; <= 0 means (high - low) / 2.
  double init_std = 0.0;
  double action_low = -2.0;
  double action_high = 2.0;
  // Discount of the MDP. Not used by the planner: imagined rewards over the
  // horizon are summed undiscounted.
  double gamma = 1.0;

  double InitialStd() const;
  void Validate() const;
};

CemConfig CemConfigFor(EnvKind kind);

// Scores a batch of flattened action sequences (one candidate per row,
// time-major, horizon * action_dim columns). Higher is better.
using SequenceScorer = std::function<Vector(const Matrix2D& candidates)>;

struct CemResult {
  Matrix2D mean;              // horizon x action_dim, after the last refit
  RowVector best_sequence;    // best candidate ever scored (flattened)
  double best_score = 0.0;
  // Elite scores of every iteration, best first.
  std::vector<std::vector<double>> elite_scores;
};

// Cross-entropy method over action sequences. Each iteration draws fresh
// candidates from a diagonal Gaussian (clipped to the action bounds), keeps
// the previous elites in the pool, and refits mean/std to the new elites.
CemResult CemOptimize(const SequenceScorer& scorer, int action_dim,
                      const CemConfig& config, std::mt19937_64& rng,
                      const Matrix2D* initial_mean = nullptr);

// Sum of true rewards along imagined rollouts of `model` from s0, one per
// candidate row, with the context held fixed. Non-finite rollouts score -inf.
Vector EvaluateSequences(const NextStatePredictor& model, EnvKind kind,
                         const Vector& s0, const Matrix2D& candidates,
                         const RowVector& context, int action_dim);
// `actions` is horizon x action_dim.
double EvaluateSequence(const NextStatePredictor& model, EnvKind kind,
                        const Vector& s0, const Matrix2D& actions,
                        const ContextVector& context);

// First action of the CEM mean sequence. `warm_start` (horizon x
// action_dim), when given, seeds the mean and receives the final mean.
Vector CemPlan(const NextStatePredictor& model, EnvKind kind, const Vector& s0,
               const ContextVector& context, const CemConfig& config,
               std::mt19937_64& rng, Matrix2D* warm_start = nullptr);

struct MpcOptions {
  int k = kDefaultSegmentLength;
  bool use_context = true;
  // Std of Gaussian noise added to executed actions, as a fraction of the
  // action range. Zero for evaluation.
  double exploration_fraction = 0.0;
  int episode_length = 200;
  std::int64_t trajectory_id = 0;
  int env_label = -1;
};

// Runs one real episode: at every step the most recent k transitions (zero
// padded at the start) are encoded into z, CEM plans against the model, and
// the first action is applied to the real environment.
Trajectory MpcEpisode(const EnvParams& params, const DynamicsModel& model,
                      const Mlp& encoder, const CemConfig& config,
                      std::uint64_t seed, const MpcOptions& options);

}  // namespace ria

#endif  // RIA_PLANNER_H_
