#include "ria/experiment.h"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "ria/errors.h"
#include "ria/run_config.h"

namespace ria {

AblationRow TrainAndEvaluate(const EnvFamily& family, const TrainConfig& config,
                             const EvalOptions& eval,
                             const std::optional<std::filesystem::path>& run_dir) {
  RunOutputs outputs;
  outputs.out_dir = run_dir;
  TrainResult trained = TrainRun(family, config, outputs);

  EvalOptions options = eval;
  options.cem = config.cem;
  options.cde = config.cde;
  const EvalReport report = Evaluate(trained.agent, family, options);
  if (run_dir) {
    const std::filesystem::path eval_dir = *run_dir / "eval";
    std::filesystem::create_directories(eval_dir);
    WriteReportJson(report, eval_dir / "report.json");
    WritePcaCsv(report, eval_dir / "pca.csv");
    WriteSimilarityCsv(report, eval_dir / "similarity.csv");
  }

  AblationRow row;
  row.method = config.method;
  row.seed = config.seed;
  row.test_mse = report.prediction.test_mse;
  if (report.returns) row.mean_return = MeanReturn(*report.returns);
  if (report.cluster) {
    row.silhouette = report.cluster->silhouette;
    row.intra_inter_w_ratio = report.cluster->intra_inter_w_ratio;
  }
  return row;
}

std::vector<AblationRow> RunSweep(const EnvFamily& family, const TrainConfig& base,
                                  const SweepOptions& options) {
  struct Job {
    TrainConfig config;
    std::optional<std::filesystem::path> dir;
  };
  std::vector<Job> jobs;
  for (Method method : options.methods) {
    for (std::uint64_t seed : options.seeds) {
      Job job{base, std::nullopt};
      job.config.method = method;
      job.config.seed = seed;
      if (options.out_dir) {
        job.dir = *options.out_dir / (ToString(method) + "_seed" + std::to_string(seed));
      }
      jobs.push_back(std::move(job));
    }
  }

  std::vector<AblationRow> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        rows[i] = TrainAndEvaluate(family, jobs[i].config, options.eval, jobs[i].dir);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = jobs.size();
      }
    }
  };
  const int threads =
      std::max(1, std::min<int>(options.threads, static_cast<int>(jobs.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

std::string AblationCsvHeader() {
  return "method,seed,test_mse,mean_return,silhouette,intra_inter_w_ratio";
}

std::string AblationCsvRow(const AblationRow& row) {
  auto opt = [](const std::optional<double>& v) { return v ? FormatNumber(*v) : std::string(); };
  return ToString(row.method) + "," + std::to_string(row.seed) + "," +
         FormatNumber(row.test_mse) + "," + opt(row.mean_return) + "," + opt(row.silhouette) +
         "," + opt(row.intra_inter_w_ratio);
}

void WriteAblationCsv(std::span<const AblationRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << AblationCsvHeader() << '\n';
  for (const AblationRow& row : rows) out << AblationCsvRow(row) << '\n';
}

int ThreadsFromEnvironment() {
  const char* value = std::getenv("RIA_THREADS");
  if (value == nullptr || *value == '\0') return 1;
  char* end = nullptr;
  const long n = std::strtol(value, &end, 10);
  if (end == value || *end != '\0' || n < 1) {
    throw ConfigError(std::string("RIA_THREADS must be a positive integer, got '") + value + "'");
  }
  return static_cast<int>(n);
}

}  // namespace ria
