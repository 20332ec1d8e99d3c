#include "ria/evaluation.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "ria/errors.h"
#include "ria/logging.h"
#include "ria/relational.h"
#include "ria/run_config.h"
#include "ria/seeding.h"

namespace ria {
namespace {

constexpr std::size_t kSegmentsPerContextEpisode = 8;

// Seeds of the independent parts of one evaluation.
enum : std::uint64_t {
  kReturnsStream = 11,
  kPredictionTrainStream = 12,
  kPredictionTestStream = 13,
  kContextStream = 14,
  kContextSamplingStream = 15,
};

std::vector<std::size_t> EvenlySpaced(std::size_t n, std::size_t m) {
  std::vector<std::size_t> out;
  if (m >= n) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(i);
    return out;
  }
  if (m == 1) return {0};
  for (std::size_t i = 0; i < m; ++i) {
    out.push_back(static_cast<std::size_t>(
        std::llround(static_cast<double>(i) * static_cast<double>(n - 1) /
                     static_cast<double>(m - 1))));
  }
  return out;
}

std::optional<ClusterMetrics> ClusterFromSimilarity(const Matrix2D& contexts,
                                                    std::span<const int> labels,
                                                    const Matrix2D& w) {
  std::map<int, int> counts;
  for (int l : labels) ++counts[l];
  int usable = 0;
  for (const auto& [label, count] : counts) usable += count >= 2 ? 1 : 0;
  if (usable < 2) return std::nullopt;

  ClusterMetrics out;
  out.silhouette = Silhouette(contexts, labels);
  double same = 0.0, cross = 0.0;
  std::int64_t n_same = 0, n_cross = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (i == j) continue;
      const double v = w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (labels[i] == labels[j]) {
        same += v;
        ++n_same;
      } else {
        cross += v;
        ++n_cross;
      }
    }
  }
  const double mean_same = same / static_cast<double>(n_same);
  const double mean_cross = cross / static_cast<double>(n_cross);
  out.intra_inter_w_ratio = mean_cross > 0.0 ? mean_same / mean_cross
                                             : std::numeric_limits<double>::infinity();
  return out;
}

nlohmann::json NumberOrNull(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

HeldOutSet CollectHeldOut(std::span<const EnvParams> envs, int n_transitions, int k,
                          int episode_length, std::uint64_t seed) {
  if (envs.empty()) throw ConfigError("held-out set needs at least one environment");
  if (n_transitions < 1) throw ConfigError("held-out set needs at least one transition");
  if (k < 1 || episode_length < k + 1) {
    throw ConfigError("episodes must be longer than the segment length");
  }
  const EnvKind kind = envs.front().kind;
  const int sd = StateDim(kind);
  const int ad = ActionDim(kind);
  const int per_env = std::min(
      static_cast<int>((n_transitions + envs.size() - 1) / envs.size()), episode_length - k);
  const Policy policy = UniformRandomPolicy(kind);

  HeldOutSet set;
  set.transitions.states.resize(n_transitions, sd);
  set.transitions.actions.resize(n_transitions, ad);
  set.transitions.next_states.resize(n_transitions, sd);
  set.segments.reserve(n_transitions);
  int row = 0;
  for (std::uint64_t episode = 0; row < n_transitions; ++episode) {
    const std::size_t env = episode % envs.size();
    const int take = std::min(per_env, n_transitions - row);
    const Trajectory traj =
        Rollout(envs[env], policy, k + take, DeriveSeed(seed, episode),
                static_cast<std::int64_t>(episode), static_cast<int>(env));
    for (int t = k; t < k + take; ++t, ++row) {
      set.segments.push_back(SegmentAt(traj, k, t));
      set.transitions.states.row(row) = traj.states[t].transpose();
      set.transitions.actions.row(row) = traj.actions[t].transpose();
      set.transitions.next_states.row(row) = traj.states[t + 1].transpose();
    }
  }
  const Matrix2D deltas = set.transitions.next_states - set.transitions.states;
  const RowVector mean = deltas.colwise().mean();
  set.delta_scale = ((deltas.rowwise() - mean).colwise().squaredNorm() /
                     static_cast<double>(n_transitions))
                        .cwiseSqrt()
                        .cwiseMax(kNormalizerStdFloor);
  return set;
}

double HeldOutMse(const NextStatePredictor& model, const HeldOutSet& set,
                  const Matrix2D& contexts) {
  const Matrix2D predicted =
      model.PredictNext(set.transitions.states, set.transitions.actions, contexts);
  const Matrix2D err =
      (predicted - set.transitions.next_states).array().rowwise() / set.delta_scale.array();
  return err.squaredNorm() / static_cast<double>(err.size());
}

double HeldOutMse(const Agent& agent, const HeldOutSet& set) {
  return HeldOutMse(agent.dynamics, set, agent.EncodeContexts(set.segments));
}

PredictionReport EvaluatePrediction(const Agent& agent, const EnvFamily& family,
                                    int n_transitions, std::uint64_t seed) {
  PredictionReport out;
  out.train_mse = HeldOutMse(
      agent, CollectHeldOut(family.train_params, n_transitions, agent.k, family.episode_length,
                            DeriveSeed(seed, kPredictionTrainStream)));
  out.test_mse = HeldOutMse(
      agent, CollectHeldOut(family.test_params, n_transitions, agent.k, family.episode_length,
                            DeriveSeed(seed, kPredictionTestStream)));
  return out;
}

namespace {

EnvReturns Summarize(const EnvParams& params, std::vector<double> returns) {
  EnvReturns out;
  out.params = params;
  out.returns = std::move(returns);
  if (out.returns.empty()) return out;
  double sum = 0.0;
  for (double r : out.returns) sum += r;
  out.mean = sum / static_cast<double>(out.returns.size());
  double sq = 0.0;
  for (double r : out.returns) sq += (r - out.mean) * (r - out.mean);
  out.std = std::sqrt(sq / static_cast<double>(out.returns.size()));
  return out;
}

}  // namespace

std::vector<EnvReturns> EvaluateReturns(const Agent& agent, std::span<const EnvParams> envs,
                                        const CemConfig& cem, int n_episodes,
                                        int episode_length, std::uint64_t seed) {
  if (n_episodes < 0) throw ConfigError("episode count must be non-negative");
  MpcOptions options;
  options.k = agent.k;
  options.use_context = UsesContext(agent.method);
  options.exploration_fraction = 0.0;
  options.episode_length = episode_length;
  std::vector<EnvReturns> out;
  out.reserve(envs.size());
  for (std::size_t e = 0; e < envs.size(); ++e) {
    std::vector<double> returns;
    for (int ep = 0; ep < n_episodes; ++ep) {
      const std::uint64_t id = e * 1000 + static_cast<std::uint64_t>(ep);
      options.trajectory_id = static_cast<std::int64_t>(id);
      options.env_label = static_cast<int>(e);
      returns.push_back(MpcEpisode(envs[e], agent.dynamics, agent.encoder, cem,
                                   DeriveSeed(seed, id), options)
                            .Return());
    }
    out.push_back(Summarize(envs[e], std::move(returns)));
  }
  return out;
}

std::vector<EnvReturns> EvaluatePolicyReturns(const Policy& policy,
                                              std::span<const EnvParams> envs,
                                              int n_episodes, int episode_length,
                                              std::uint64_t seed) {
  std::vector<EnvReturns> out;
  out.reserve(envs.size());
  for (std::size_t e = 0; e < envs.size(); ++e) {
    std::vector<double> returns;
    for (int ep = 0; ep < n_episodes; ++ep) {
      const std::uint64_t id = e * 1000 + static_cast<std::uint64_t>(ep);
      returns.push_back(Rollout(envs[e], policy, episode_length, DeriveSeed(seed, id)).Return());
    }
    out.push_back(Summarize(envs[e], std::move(returns)));
  }
  return out;
}

double MeanReturn(std::span<const EnvReturns> returns) {
  if (returns.empty()) return 0.0;
  double sum = 0.0;
  for (const EnvReturns& r : returns) sum += r.mean;
  return sum / static_cast<double>(returns.size());
}

double Silhouette(const Matrix2D& points, std::span<const int> labels) {
  const Eigen::Index n = points.rows();
  if (static_cast<std::size_t>(n) != labels.size()) {
    throw ConfigError("one label per point is required");
  }
  if (n == 0) return 0.0;
  Matrix2D dist(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      dist(i, j) = dist(j, i) = (points.row(i) - points.row(j)).norm();
    }
  }
  std::vector<int> distinct(labels.begin(), labels.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) return 0.0;

  double total = 0.0;
  std::vector<double> sums(distinct.size());
  std::vector<int> counts(distinct.size());
  auto slot = [&distinct](int label) {
    return static_cast<std::size_t>(
        std::lower_bound(distinct.begin(), distinct.end(), label) - distinct.begin());
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const std::size_t c = slot(labels[j]);
      sums[c] += dist(i, j);
      ++counts[c];
    }
    const std::size_t own = slot(labels[i]);
    if (counts[own] == 0) continue;  // singleton cluster
    const double a = sums[own] / counts[own];
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < distinct.size(); ++c) {
      if (c != own && counts[c] > 0) b = std::min(b, sums[c] / counts[c]);
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

std::optional<ClusterMetrics> ComputeClusterMetrics(const Matrix2D& contexts,
                                                    std::span<const int> labels,
                                                    const NextStatePredictor& model,
                                                    const MediatorBatch& mediators,
                                                    const CdeConfig& config) {
  if (static_cast<std::size_t>(contexts.rows()) != labels.size()) {
    throw ConfigError("one label per context is required");
  }
  std::map<int, int> counts;
  for (int l : labels) ++counts[l];
  int usable = 0;
  for (const auto& [label, count] : counts) usable += count >= 2 ? 1 : 0;
  if (usable < 2) return std::nullopt;
  const SimilarityMatrix sim = ComputeSimilarityMatrix(model, contexts, mediators, config);
  return ClusterFromSimilarity(contexts, labels, sim.w);
}

PcaResult PcaProject(const Matrix2D& points) {
  const Eigen::Index n = points.rows();
  const Eigen::Index dim = points.cols();
  if (n < 3) throw ConfigError("PCA needs at least 3 points");
  if (dim < 1) throw ConfigError("PCA needs at least one feature");

  const RowVector mean = points.colwise().mean();
  const Matrix2D centered = points.rowwise() - mean;
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(n - 1);

  PcaResult out;
  out.projection = Matrix2D::Zero(n, 2);
  out.components = Matrix2D::Zero(2, dim);
  const double scale = cov.trace();
  if (!(scale > 0.0)) {
    Warn("PCA input has zero variance; returning a zero projection");
    return out;
  }

  Eigen::MatrixXd deflated = cov;
  const double negligible = 1e-12 * scale;
  for (int comp = 0; comp < 2 && comp < dim; ++comp) {
    // Start from the largest column of the deflated covariance, nudged so
    // the start is not exactly orthogonal to the leading eigenvector.
    Eigen::Index best = 0;
    deflated.colwise().norm().maxCoeff(&best);
    Eigen::VectorXd v = deflated.col(best);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] += 1e-3 * scale / static_cast<double>(i + 2);
    auto orthogonalize = [&](Eigen::VectorXd& x) {
      for (int p = 0; p < comp; ++p) {
        const Eigen::VectorXd u = out.components.row(p).transpose();
        x -= u.dot(x) * u;
      }
    };
    orthogonalize(v);
    if (v.norm() == 0.0) v = Eigen::VectorXd::Unit(dim, comp);
    v.normalize();

    bool degenerate = false;
    for (int iter = 0; iter < kPcaMaxIterations; ++iter) {
      Eigen::VectorXd next = deflated * v;
      orthogonalize(next);
      const double norm = next.norm();
      if (norm <= negligible) {
        degenerate = true;
        break;
      }
      next /= norm;
      const double change = (next - v).norm();
      v = next;
      if (change < kPcaTolerance) break;
    }
    double variance = degenerate ? 0.0 : v.dot(cov * v);
    if (variance < negligible) variance = 0.0;

    Eigen::Index lead = 0;
    v.cwiseAbs().maxCoeff(&lead);
    if (v[lead] < 0.0) v = -v;
    out.components.row(comp) = v.transpose();
    out.variances[comp] = variance;
    deflated -= variance * v * v.transpose();
  }
  out.projection = centered * out.components.transpose();
  return out;
}

ContextSample CollectContexts(const Agent& agent, std::span<const EnvParams> envs,
                              int per_env, int mediator_count, int episode_length,
                              std::uint64_t seed) {
  if (per_env < 1) throw ConfigError("need at least one context per environment");
  if (mediator_count < 1) throw ConfigError("need at least one mediator");
  const Policy policy = UniformRandomPolicy(agent.kind);
  std::mt19937_64 rng(DeriveSeed(seed, kContextSamplingStream));
  std::vector<Trajectory> rollouts;
  std::vector<TransitionSegment> segments;
  ContextSample out;
  const std::size_t episodes =
      (static_cast<std::size_t>(per_env) + kSegmentsPerContextEpisode - 1) /
      kSegmentsPerContextEpisode;
  for (std::size_t e = 0; e < envs.size(); ++e) {
    int remaining = per_env;
    for (std::size_t ep = 0; ep < episodes; ++ep) {
      const int count = static_cast<int>(
          (static_cast<std::size_t>(remaining) + (episodes - ep) - 1) / (episodes - ep));
      remaining -= count;
      const std::uint64_t id = e * 1000 + ep;
      rollouts.push_back(Rollout(envs[e], policy, episode_length, DeriveSeed(seed, id),
                                 static_cast<std::int64_t>(id), static_cast<int>(e)));
      for (TransitionSegment& seg : BuildSegments(rollouts.back(), agent.k, count, rng)) {
        segments.push_back(std::move(seg));
        out.labels.push_back(static_cast<int>(e));
      }
    }
  }
  out.contexts = agent.EncodeContexts(segments);

  std::size_t total = 0;
  for (const Trajectory& t : rollouts) total += t.num_steps();
  if (total == 0) throw ConfigError("context rollouts produced no transitions");
  const int sd = StateDim(agent.kind);
  const int ad = ActionDim(agent.kind);
  out.mediators.states.resize(mediator_count, sd);
  out.mediators.actions.resize(mediator_count, ad);
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  for (int i = 0; i < mediator_count; ++i) {
    std::size_t flat = pick(rng);
    std::size_t r = 0;
    while (flat >= rollouts[r].num_steps()) flat -= rollouts[r++].num_steps();
    out.mediators.states.row(i) = rollouts[r].states[flat].transpose();
    out.mediators.actions.row(i) = rollouts[r].actions[flat].transpose();
  }
  return out;
}

EvalReport EvaluateContexts(const Agent& agent, const EnvFamily& family,
                            const EvalOptions& options) {
  if (options.max_cluster_envs < 1) throw ConfigError("max_cluster_envs must be positive");
  EvalReport report;
  report.family = family.name;
  report.method = ToString(agent.method);

  const std::vector<std::size_t> picked =
      EvenlySpaced(family.train_params.size(), static_cast<std::size_t>(options.max_cluster_envs));
  std::vector<EnvParams> envs;
  for (std::size_t i : picked) envs.push_back(family.train_params[i]);
  ContextSample sample =
      CollectContexts(agent, envs, options.segments_per_env, options.cde.mediator_batch,
                      family.episode_length, DeriveSeed(options.seed, kContextStream));
  for (int& label : sample.labels) label = static_cast<int>(picked[static_cast<std::size_t>(label)]);

  const SimilarityMatrix sim =
      ComputeSimilarityMatrix(agent.dynamics, sample.contexts, sample.mediators, options.cde);
  report.cluster = ClusterFromSimilarity(sample.contexts, sample.labels, sim.w);

  const Eigen::Index n = sample.contexts.rows();
  if (n >= 3) {
    const PcaResult pca = PcaProject(sample.contexts);
    report.pca_variance = {pca.variances[0], pca.variances[1]};
    for (Eigen::Index i = 0; i < n; ++i) {
      report.pca_points.push_back({pca.projection(i, 0), pca.projection(i, 1)});
    }
    report.pca_labels = sample.labels;
  }
  if (n >= 2) {
    const Matrix2D scores = ScorePairs(agent.relational, sample.contexts);
    report.score_asymmetry =
        (scores - scores.transpose()).cwiseAbs().sum() / static_cast<double>(n * (n - 1));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      report.similarity.push_back({static_cast<int>(i), static_cast<int>(j), sim.d(i, j),
                                   sim.w(i, j), sample.labels[i] == sample.labels[j]});
    }
  }
  return report;
}

EvalReport Evaluate(const Agent& agent, const EnvFamily& family, const EvalOptions& options) {
  if (options.episodes < 0) throw ConfigError("episode count must be non-negative");
  EvalReport report = EvaluateContexts(agent, family, options);
  report.episodes = options.episodes;
  report.prediction =
      EvaluatePrediction(agent, family, options.prediction_transitions, options.seed);
  if (options.episodes > 0) {
    report.returns = EvaluateReturns(agent, family.test_params, options.cem, options.episodes,
                                     family.episode_length,
                                     DeriveSeed(options.seed, kReturnsStream));
  }
  return report;
}

nlohmann::json ReportToJson(const EvalReport& report) {
  nlohmann::json doc;
  doc["family"] = report.family;
  doc["method"] = report.method;
  doc["episodes"] = report.episodes;
  if (report.returns) {
    nlohmann::json per_env = nlohmann::json::array();
    for (const EnvReturns& r : *report.returns) {
      const auto names = r.params.names();
      per_env.push_back({{"params",
                          {{std::string(names[0]), r.params.values[0]},
                           {std::string(names[1]), r.params.values[1]}}},
                         {"mean", r.mean},
                         {"std", r.std},
                         {"returns", r.returns}});
    }
    doc["returns"] = {{"per_env", per_env}, {"mean", MeanReturn(*report.returns)}};
  }
  doc["prediction"] = {{"train_mse", NumberOrNull(report.prediction.train_mse)},
                       {"test_mse", NumberOrNull(report.prediction.test_mse)}};
  if (report.cluster) {
    doc["cluster"] = {{"silhouette", NumberOrNull(report.cluster->silhouette)},
                      {"intra_inter_w_ratio", NumberOrNull(report.cluster->intra_inter_w_ratio)}};
  } else {
    doc["cluster"] = nullptr;
  }
  doc["relational"] = {{"score_asymmetry", NumberOrNull(report.score_asymmetry)}};
  nlohmann::json points = nlohmann::json::array();
  for (std::size_t i = 0; i < report.pca_points.size(); ++i) {
    points.push_back({{"x", report.pca_points[i][0]},
                      {"y", report.pca_points[i][1]},
                      {"env_label", report.pca_labels[i]}});
  }
  doc["pca"] = {{"explained_variance", {report.pca_variance[0], report.pca_variance[1]}},
                {"points", points}};
  return doc;
}

std::vector<std::string> ValidateReportJson(const nlohmann::json& doc) {
  std::vector<std::string> problems;
  auto need = [&](const nlohmann::json& obj, const std::string& key, auto check,
                  const std::string& what) {
    if (!obj.is_object() || !obj.contains(key)) {
      problems.push_back("missing '" + key + "'");
      return false;
    }
    if (!check(obj.at(key))) {
      problems.push_back("'" + key + "' must be " + what);
      return false;
    }
    return true;
  };
  auto is_string = [](const nlohmann::json& j) { return j.is_string(); };
  auto is_number = [](const nlohmann::json& j) { return j.is_number(); };
  auto is_count = [](const nlohmann::json& j) {
    return j.is_number_integer() && j.get<std::int64_t>() >= 0;
  };
  auto is_object = [](const nlohmann::json& j) { return j.is_object(); };
  auto is_array = [](const nlohmann::json& j) { return j.is_array(); };
  auto is_mse = [](const nlohmann::json& j) {
    return j.is_null() || (j.is_number() && j.get<double>() >= 0.0);
  };

  if (!doc.is_object()) return {"report must be a JSON object"};
  need(doc, "family", is_string, "a string");
  need(doc, "method", is_string, "a string");
  const bool has_episodes = need(doc, "episodes", is_count, "a non-negative integer");

  if (need(doc, "prediction", is_object, "an object")) {
    need(doc["prediction"], "train_mse", is_mse, "a non-negative number or null");
    need(doc["prediction"], "test_mse", is_mse, "a non-negative number or null");
  }

  if (!doc.contains("cluster")) {
    problems.push_back("missing 'cluster'");
  } else if (!doc["cluster"].is_null()) {
    const nlohmann::json& c = doc["cluster"];
    auto nullable = [](const nlohmann::json& j) { return j.is_null() || j.is_number(); };
    if (need(doc, "cluster", is_object, "an object or null")) {
      if (need(c, "silhouette", nullable, "a number") && c["silhouette"].is_number()) {
        const double s = c["silhouette"].get<double>();
        if (s < -1.0 || s > 1.0) problems.push_back("'silhouette' must lie in [-1, 1]");
      }
      need(c, "intra_inter_w_ratio", nullable, "a number");
    }
  }

  if (need(doc, "relational", is_object, "an object")) {
    need(doc["relational"], "score_asymmetry", is_mse, "a non-negative number or null");
  }

  if (need(doc, "pca", is_object, "an object")) {
    const nlohmann::json& p = doc["pca"];
    if (need(p, "explained_variance", is_array, "an array") &&
        p["explained_variance"].size() != 2) {
      problems.push_back("'explained_variance' must have two entries");
    }
    if (need(p, "points", is_array, "an array")) {
      for (const nlohmann::json& pt : p["points"]) {
        if (!pt.is_object() || !pt.contains("x") || !pt.contains("y") ||
            !pt.contains("env_label") || !pt["x"].is_number() || !pt["y"].is_number() ||
            !pt["env_label"].is_number_integer()) {
          problems.push_back("malformed PCA point");
          break;
        }
      }
    }
  }

  const bool wants_returns = has_episodes && doc["episodes"].get<std::int64_t>() > 0;
  if (wants_returns != doc.contains("returns")) {
    problems.push_back(wants_returns ? "missing 'returns'"
                                     : "'returns' must be absent when episodes is 0");
  }
  if (doc.contains("returns") && need(doc, "returns", is_object, "an object")) {
    const nlohmann::json& r = doc["returns"];
    need(r, "mean", is_number, "a number");
    if (need(r, "per_env", is_array, "an array")) {
      if (r["per_env"].empty()) problems.push_back("'per_env' must not be empty");
      std::vector<std::string> seen;
      for (const nlohmann::json& e : r["per_env"]) {
        if (!e.is_object() || !e.contains("params") || !e["params"].is_object() ||
            !e.contains("mean") || !e["mean"].is_number() || !e.contains("std") ||
            !e["std"].is_number() || e["std"].get<double>() < 0.0 || !e.contains("returns") ||
            !e["returns"].is_array()) {
          problems.push_back("malformed per-environment return entry");
          break;
        }
        if (has_episodes && e["returns"].size() != doc["episodes"].get<std::size_t>()) {
          problems.push_back("per-environment return count differs from 'episodes'");
          break;
        }
        seen.push_back(e["params"].dump());
      }
      std::sort(seen.begin(), seen.end());
      if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
        problems.push_back("a test environment appears more than once");
      }
    }
  }
  return problems;
}

void WriteReportJson(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << ReportToJson(report).dump(2) << "\n";
}

void WritePcaCsv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "x,y,env_label\n";
  for (std::size_t i = 0; i < report.pca_points.size(); ++i) {
    out << FormatNumber(report.pca_points[i][0]) << ',' << FormatNumber(report.pca_points[i][1])
        << ',' << report.pca_labels[i] << '\n';
  }
}

void WriteSimilarityCsv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "i,j,d,w,same_env\n";
  for (const SimilarityEntry& e : report.similarity) {
    out << e.i << ',' << e.j << ',' << FormatNumber(e.d) << ',' << FormatNumber(e.w) << ','
        << (e.same_env ? 1 : 0) << '\n';
  }
}

}  // namespace ria
