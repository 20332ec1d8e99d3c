#ifndef RIA_EXPERIMENT_H_
#define RIA_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ria/environments.h"
#include "ria/evaluation.h"
#include "ria/trainer.h"

namespace ria {

// One trained-and-evaluated run of a sweep.
struct AblationRow {
  Method method = Method::kRiaFull;
  std::uint64_t seed = 0;
  double test_mse = 0.0;
  // Absent when evaluation ran no episodes.
  std::optional<double> mean_return;
  std::optional<double> silhouette;
  std::optional<double> intra_inter_w_ratio;
};

struct SweepOptions {
  std::vector<Method> methods = {Method::kVanillaContext, Method::kRelationOnly,
                                 Method::kRiaFull, Method::kTrueLabel};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  // Runs executed concurrently; each run is itself single threaded.
  int threads = 1;
  // Per-run directories <out_dir>/<method>_seed<seed> when set.
  std::optional<std::filesystem::path> out_dir;
  EvalOptions eval;
};

AblationRow TrainAndEvaluate(const EnvFamily& family, const TrainConfig& config,
                             const EvalOptions& eval,
                             const std::optional<std::filesystem::path>& run_dir);

// Trains and evaluates every (method, seed) pair of the sweep, starting from
// `base` with the method and seed replaced. Rows are ordered method-major in
// the order given, regardless of completion order.
std::vector<AblationRow> RunSweep(const EnvFamily& family, const TrainConfig& base,
                                  const SweepOptions& options);

std::string AblationCsvHeader();
std::string AblationCsvRow(const AblationRow& row);
void WriteAblationCsv(std::span<const AblationRow> rows, const std::filesystem::path& path);

// Parallelism cap from RIA_THREADS (default 1, never below 1).
int ThreadsFromEnvironment();

}  // namespace ria

#endif  // RIA_EXPERIMENT_H_
