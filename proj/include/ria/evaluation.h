#ifndef RIA_EVALUATION_H_
#define RIA_EVALUATION_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ria/dynamics.h"
#include "ria/environments.h"
#include "ria/intervention.h"
#include "ria/matrix.h"
#include "ria/planner.h"
#include "ria/segments.h"
#include "ria/trainer.h"

namespace ria {

// Random-policy transitions with their preceding k-step segments. MSEs are
// measured in units of this set's own per-dimension delta std, so numbers are
// comparable across agents and epochs.
struct HeldOutSet {
  TransitionBatch transitions;
  std::vector<TransitionSegment> segments;
  RowVector delta_scale;
};

// Cycles through `envs`, rolling out uniform-random actions, and keeps every
// transition with a full preceding segment until `n_transitions` are stored.
HeldOutSet CollectHeldOut(std::span<const EnvParams> envs, int n_transitions, int k,
                          int episode_length, std::uint64_t seed);

double HeldOutMse(const NextStatePredictor& model, const HeldOutSet& set,
                  const Matrix2D& contexts);
double HeldOutMse(const Agent& agent, const HeldOutSet& set);

struct PredictionReport {
  double train_mse = 0.0;
  double test_mse = 0.0;
};

PredictionReport EvaluatePrediction(const Agent& agent, const EnvFamily& family,
                                    int n_transitions, std::uint64_t seed);

struct EnvReturns {
  EnvParams params;
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> returns;
};

// MPC episodes (no exploration noise) on every environment in `envs`.
std::vector<EnvReturns> EvaluateReturns(const Agent& agent,
                                        std::span<const EnvParams> envs,
                                        const CemConfig& cem, int n_episodes,
                                        int episode_length, std::uint64_t seed);
std::vector<EnvReturns> EvaluatePolicyReturns(const Policy& policy,
                                              std::span<const EnvParams> envs,
                                              int n_episodes, int episode_length,
                                              std::uint64_t seed);
double MeanReturn(std::span<const EnvReturns> returns);

// Mean silhouette with Euclidean distance. Points alone in their cluster
// score 0, and so does any point whose a and b are both zero.
double Silhouette(const Matrix2D& points, std::span<const int> labels);

struct ClusterMetrics {
  double silhouette = 0.0;
  double intra_inter_w_ratio = 0.0;
};

// Absent unless at least two labels each have at least two contexts.
std::optional<ClusterMetrics> ComputeClusterMetrics(const Matrix2D& contexts,
                                                    std::span<const int> labels,
                                                    const NextStatePredictor& model,
                                                    const MediatorBatch& mediators,
                                                    const CdeConfig& config);

struct PcaResult {
  Matrix2D projection;   // N x 2
  Matrix2D components;   // 2 x D, unit rows
  Eigen::Vector2d variances = Eigen::Vector2d::Zero();
};

inline constexpr double kPcaTolerance = 1e-9;
inline constexpr int kPcaMaxIterations = 1000;

// Top-2 principal components of mean-centered data via power iteration with
// deflation on the sample covariance (divisor N - 1). Each component's
// largest-magnitude loading is made positive.
PcaResult PcaProject(const Matrix2D& points);

// Contexts encoded from random-policy rollouts, `per_env` segments per
// environment, plus mediators drawn from the same rollouts.
struct ContextSample {
  Matrix2D contexts;
  std::vector<int> labels;
  MediatorBatch mediators;
};

ContextSample CollectContexts(const Agent& agent, std::span<const EnvParams> envs,
                              int per_env, int mediator_count, int episode_length,
                              std::uint64_t seed);

struct EvalOptions {
  int episodes = 10;
  int prediction_transitions = 5000;
  int segments_per_env = 32;
  // Cluster metrics use at most this many (evenly spaced) training envs.
  int max_cluster_envs = 8;
  std::uint64_t seed = 0;
  CemConfig cem;
  CdeConfig cde;
};

struct SimilarityEntry {
  int i = 0;
  int j = 0;
  double d = 0.0;
  double w = 0.0;
  bool same_env = false;
};

struct EvalReport {
  std::string family;
  std::string method;
  std::optional<std::vector<EnvReturns>> returns;
  PredictionReport prediction;
  std::optional<ClusterMetrics> cluster;
  int episodes = 0;
  std::array<double, 2> pca_variance = {0.0, 0.0};
  std::vector<std::array<double, 2>> pca_points;
  std::vector<int> pca_labels;
  std::vector<SimilarityEntry> similarity;
  // Mean |h(z_i, z_j) - h(z_j, z_i)| of the relational head over sampled pairs.
  double score_asymmetry = 0.0;
};

// Cluster, PCA and similarity outputs only (no rollouts with the planner).
EvalReport EvaluateContexts(const Agent& agent, const EnvFamily& family,
                            const EvalOptions& options);
EvalReport Evaluate(const Agent& agent, const EnvFamily& family,
                    const EvalOptions& options);

nlohmann::json ReportToJson(const EvalReport& report);
// Checks the layout ReportToJson produces; returns a list of problems.
std::vector<std::string> ValidateReportJson(const nlohmann::json& doc);
void WriteReportJson(const EvalReport& report, const std::filesystem::path& path);
void WritePcaCsv(const EvalReport& report, const std::filesystem::path& path);
void WriteSimilarityCsv(const EvalReport& report, const std::filesystem::path& path);

}  // namespace ria

#endif  // RIA_EVALUATION_H_
