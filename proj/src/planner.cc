#include "ria/planner.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ria/errors.h"

namespace ria {

double CemConfig::InitialStd() const {
  return init_std > 0.0 ? init_std : (action_high - action_low) / 2.0;
}

void CemConfig::Validate() const {
  if (horizon < 1) throw ConfigError("CEM horizon must be >= 1");
  if (candidates < 1) throw ConfigError("CEM needs at least one candidate");
  if (elites < 1 || elites > candidates) {
    throw ConfigError("CEM elites must be in [1, candidates]");
  }
  if (iterations < 1) throw ConfigError("CEM needs at least one iteration");
  if (!(action_high > action_low)) throw ConfigError("empty action range");
}

CemConfig CemConfigFor(EnvKind kind) {
  CemConfig config;
  config.action_low = ActionLow(kind);
  config.action_high = ActionHigh(kind);
  return config;
}

CemResult CemOptimize(const SequenceScorer& scorer, int action_dim,
                      const CemConfig& config, std::mt19937_64& rng,
                      const Matrix2D* initial_mean) {
  config.Validate();
  const Eigen::Index dim = static_cast<Eigen::Index>(config.horizon) * action_dim;
  RowVector mean = RowVector::Constant(dim, 0.5 * (config.action_low + config.action_high));
  if (initial_mean != nullptr) {
    if (initial_mean->rows() != config.horizon || initial_mean->cols() != action_dim) {
      throw ConfigError("CEM initial mean has the wrong shape");
    }
    mean = Eigen::Map<const RowVector>(initial_mean->data(), dim);
  }
  RowVector stddev = RowVector::Constant(dim, config.InitialStd());
  std::normal_distribution<double> normal(0.0, 1.0);

  CemResult result;
  result.best_score = -std::numeric_limits<double>::infinity();
  Matrix2D elites(0, dim);
  std::vector<double> elite_scores;

  for (int iter = 0; iter < config.iterations; ++iter) {
    const Eigen::Index fresh = elites.rows() == 0 ? config.candidates
                                                  : config.candidates - elites.rows();
    Matrix2D pool(fresh + elites.rows(), dim);
    for (Eigen::Index c = 0; c < fresh; ++c) {
      for (Eigen::Index d = 0; d < dim; ++d) {
        pool(c, d) = std::clamp(mean[d] + stddev[d] * normal(rng), config.action_low,
                                config.action_high);
      }
    }
    Vector scores(pool.rows());
    if (fresh > 0) scores.head(fresh) = scorer(pool.topRows(fresh));
    if (elites.rows() > 0) {
      pool.bottomRows(elites.rows()) = elites;
      for (Eigen::Index e = 0; e < elites.rows(); ++e) scores[fresh + e] = elite_scores[e];
    }
    for (Eigen::Index c = 0; c < scores.size(); ++c) {
      if (std::isnan(scores[c])) scores[c] = -std::numeric_limits<double>::infinity();
    }

    std::vector<Eigen::Index> order(pool.rows());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return scores[a] > scores[b];
    });
    const int n_elite = std::min<int>(config.elites, static_cast<int>(pool.rows()));
    Matrix2D next_elites(n_elite, dim);
    std::vector<double> next_scores(n_elite);
    for (int e = 0; e < n_elite; ++e) {
      next_elites.row(e) = pool.row(order[e]);
      next_scores[e] = scores[order[e]];
    }
    if (next_scores.front() > result.best_score || result.best_sequence.size() == 0) {
      result.best_score = next_scores.front();
      result.best_sequence = next_elites.row(0);
    }
    elites = std::move(next_elites);
    elite_scores = std::move(next_scores);
    result.elite_scores.push_back(elite_scores);

    mean = elites.colwise().mean();
    stddev = ((elites.rowwise() - mean).array().square().colwise().sum() /
              static_cast<double>(n_elite))
                 .sqrt();
  }
  result.mean = Eigen::Map<const Matrix2D>(mean.data(), config.horizon, action_dim);
  return result;
}

Vector EvaluateSequences(const NextStatePredictor& model, EnvKind kind,
                         const Vector& s0, const Matrix2D& candidates,
                         const RowVector& context, int action_dim) {
  const Eigen::Index n = candidates.rows();
  if (candidates.cols() % action_dim != 0) {
    throw ConfigError("candidate length is not a multiple of the action dimension");
  }
  const Eigen::Index horizon = candidates.cols() / action_dim;
  Matrix2D states = s0.transpose().replicate(n, 1);
  const Matrix2D z = context.replicate(n, 1);
  Vector total = Vector::Zero(n);
  Matrix2D actions(n, action_dim);
  for (Eigen::Index h = 0; h < horizon; ++h) {
    actions = candidates.middleCols(h * action_dim, action_dim);
    total += RewardBatch(kind, states, actions);
    if (h + 1 < horizon) states = model.PredictNext(states, actions, z);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(total[i])) total[i] = -std::numeric_limits<double>::infinity();
  }
  return total;
}

double EvaluateSequence(const NextStatePredictor& model, EnvKind kind,
                        const Vector& s0, const Matrix2D& actions,
                        const ContextVector& context) {
  const Matrix2D flat = Eigen::Map<const Matrix2D>(actions.data(), 1, actions.size());
  return EvaluateSequences(model, kind, s0, flat, context.values,
                           static_cast<int>(actions.cols()))[0];
}

Vector CemPlan(const NextStatePredictor& model, EnvKind kind, const Vector& s0,
               const ContextVector& context, const CemConfig& config,
               std::mt19937_64& rng, Matrix2D* warm_start) {
  const int action_dim = ActionDim(kind);
  const SequenceScorer scorer = [&](const Matrix2D& candidates) {
    return EvaluateSequences(model, kind, s0, candidates, context.values, action_dim);
  };
  const Matrix2D* init =
      (warm_start != nullptr && warm_start->rows() == config.horizon) ? warm_start : nullptr;
  const CemResult result = CemOptimize(scorer, action_dim, config, rng, init);
  if (warm_start != nullptr) *warm_start = result.mean;
  return result.mean.row(0).transpose();
}

Trajectory MpcEpisode(const EnvParams& params, const DynamicsModel& model,
                      const Mlp& encoder, const CemConfig& config,
                      std::uint64_t seed, const MpcOptions& options) {
  config.Validate();
  if (options.episode_length < 0 || options.episode_length > kMaxEpisodeLength) {
    throw ConfigError("episode length must be in [0, 200]");
  }
  const EnvKind kind = params.kind;
  const int sd = StateDim(kind);
  const int ad = ActionDim(kind);
  std::mt19937_64 rng(seed);
  Environment env(params);
  Trajectory traj(options.trajectory_id, options.env_label, params);
  traj.states.push_back(env.Reset(rng));

  const double noise_std =
      options.exploration_fraction * (config.action_high - config.action_low);
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix2D plan = Matrix2D::Constant(config.horizon, ad,
                                     0.5 * (config.action_low + config.action_high));
  ContextVector z{RowVector::Zero(model.context_dim())};

  for (int t = 0; t < options.episode_length; ++t) {
    if (options.use_context) {
      const int have = std::min(t, options.k);
      const std::size_t first = static_cast<std::size_t>(t - have);
      if (have == options.k) {
        z = Encode(SegmentAt(traj, options.k, t), encoder);
      } else {
        z = Encode(PadSegment({traj.states.data() + first, static_cast<std::size_t>(have)},
                              {traj.actions.data() + first, static_cast<std::size_t>(have)},
                              options.k, sd, ad),
                   encoder);
      }
    }
    Vector action = CemPlan(model, kind, traj.states.back(), z, config, rng, &plan);
    if (noise_std > 0.0) {
      for (Eigen::Index i = 0; i < action.size(); ++i) {
        action[i] = std::clamp(action[i] + noise_std * noise(rng), config.action_low,
                               config.action_high);
      }
    }
    traj.rewards.push_back(env.Step(action));
    traj.actions.push_back(action);
    traj.states.push_back(env.Observe());

    // Shift the plan one step for the next replan.
    for (int h = 0; h + 1 < config.horizon; ++h) plan.row(h) = plan.row(h + 1);
    plan.row(config.horizon - 1).setConstant(0.5 * (config.action_low + config.action_high));
  }
  return traj;
}

}  // namespace ria
