#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "das/classifier.hpp"
#include "das/engine.hpp"
#include "das/metrics.hpp"
#include "das/platform.hpp"
#include "das/workload.hpp"
#include "json.hpp"

namespace das {

/// Everything a command needs to reproduce its outputs.
struct RunManifest {
  std::filesystem::path platform;
  std::filesystem::path apps;  // empty: built-in synthetic library
  std::filesystem::path suite;  // empty: generated from seed
  std::filesystem::path tree;
  nlohmann::json overhead = nlohmann::json::object();  // overrides
  std::uint64_t seed = 1;
  std::filesystem::path out = "out";
  int workloads = 40;  // used when `suite` is empty
  std::vector<double> rates;  // non-empty: replaces the suite's rate ladder
  SuiteOptions suite_options;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  /// Throws if a referenced file does not exist.
  void check_files() const;
};

/// Inputs resolved from a manifest.
struct Context {
  RunManifest manifest;
  Platform platform;
  AppLibrary apps;
  Suite suite;
  OverheadModel overhead;
  std::string fingerprint;  // FNV-1a over the manifest (minus `out`) and referenced file contents

  /// `# manifest <hash> seed <seed>` line prepended to every CSV output.
  std::string preamble() const;
};

Context load_context(const RunManifest& m);

/// Worker-pool size: DAS_WORKERS if set, else hardware concurrency.
unsigned worker_count();

/// Runs fn(0..n-1) on a bounded pool; exceptions propagate (first by index).
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

/// Every (workload, rate, policy) cell, ordered by workload, then rate, then policy.
std::vector<SweepRow> run_sweep(const Context& ctx, const std::vector<PolicySpec>& policies,
                                const std::vector<double>& rates, unsigned workers);

struct OracleResult {
  std::vector<TrainingSample> samples;
  std::size_t runs = 0;
  std::size_t slow_wins = 0;
  std::size_t pending = 0;
};

/// Two-execution labeling of every suite point; run ids are point indices.
OracleResult run_oracle(const Context& ctx, TargetMetric metric, unsigned workers);

/// Smallest rate whose workload-averaged ETF execution time beats LUT's;
/// +infinity if ETF never wins. Needs lut and etf rows.
double fit_threshold(const std::vector<SweepRow>& rows);

struct PipelineReport {
  std::vector<FeatureImportance> ranking;
  std::vector<std::string> counter_names;
  DecisionTree tree;
  DecisionTree single_feature_tree;
  std::size_t samples = 0;
  std::size_t train_samples = 0;
  std::size_t test_samples = 0;
  double train_accuracy = 0;
  double test_accuracy = 0;
  double single_feature_test_accuracy = 0;
  double s_fraction = 0;

  std::string to_text() const;
};

struct PipelineOptions {
  int depth = 2;
  int top_k = 2;
  double train_fraction = 0.7;
  TargetMetric metric = TargetMetric::ExecTime;
};

/// oracle -> rank_features -> train_tree -> held-out evaluation.
PipelineReport train_pipeline(const std::vector<TrainingSample>& samples,
                              const std::vector<std::string>& counter_names,
                              const PipelineOptions& opt, std::uint64_t seed);

}  // namespace das
