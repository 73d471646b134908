#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "das/engine.hpp"
#include "das/metrics.hpp"
#include "das/tree.hpp"

namespace das {

enum class Label : std::uint8_t { F, S, Pending };

char label_char(Label l);

struct TrainingSample {
  std::vector<double> features;
  Label label = Label::Pending;
  std::string scenario;
  int run = 0;  // (workload, rate) point the sample came from
  std::size_t decision = 0;
};

enum class TargetMetric { ExecTime, Edp };

TargetMetric parse_metric(const std::string& s);

struct LabeledRun {
  std::vector<TrainingSample> samples;
  Metrics fast;  // Run 1: follows LUT, queries ETF at every decision
  Metrics slow;  // Run 2: follows ETF throughout
  bool slow_won = false;
  std::size_t pending = 0;  // pending count before resolution
};

/// Two-execution oracle labeling of one scenario. Decisions where LUT and ETF
/// agree are F; the rest stay pending until the end, then all become S if the
/// ETF run beat the LUT run on `metric`, otherwise all become F.
LabeledRun label_scenario(const Platform& platform, const AppLibrary& apps, const Scenario& sc,
                          const OverheadModel& overhead, TargetMetric metric, int run_id = 0,
                          const RunOptions& opt = {});

struct FeatureImportance {
  int feature = 0;
  double importance = 0;  // share of total Gini decrease
};

/// Gini importance from a reference tree of depth `reference_depth` over every
/// counter, sorted descending (ties by lower index). Throws on a single-class set.
std::vector<FeatureImportance> rank_features(std::span<const TrainingSample> samples,
                                             int reference_depth = 16);

/// Greedy Gini tree of depth <= `depth` over `features`. Splits at midpoints of
/// sorted unique values; ties prefer lower feature index, then lower threshold.
/// Leaves take the majority label, F on ties. Throws on an empty set.
DecisionTree train_tree(std::span<const TrainingSample> samples, int depth,
                        std::span<const int> features,
                        const std::vector<std::string>& counter_names = {});

double accuracy(const DecisionTree& tree, std::span<const TrainingSample> samples);

/// Splits by run id (never inside a run): about `train_fraction` of runs train.
void split_by_run(const std::vector<TrainingSample>& all, double train_fraction,
                  std::uint64_t seed, std::vector<TrainingSample>& train,
                  std::vector<TrainingSample>& test);

std::string samples_to_csv(std::span<const TrainingSample> samples,
                           const std::vector<std::string>& counter_names,
                           const std::string& preamble = {});
/// Parses a samples CSV (lines starting with '#' are skipped).
std::vector<TrainingSample> samples_from_csv(const std::string& text,
                                             std::vector<std::string>* counter_names = nullptr);

}  // namespace das
