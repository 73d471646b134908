#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "das/common.hpp"
#include "das/platform.hpp"
#include "json.hpp"

namespace das {

struct DfgNode {
  NodeId id = 0;
  TaskTypeId type = 0;
  int depth = 0;  // filled by compute_depths
};

struct DfgEdge {
  NodeId src = 0;
  NodeId dst = 0;
  double bytes = 0;
};

/// Data-flow graph of one streaming application. One frame instantiates one job.
struct Dfg {
  AppId app_id = 0;
  std::string name;
  /// Coarse application class exposed to the classifier as "application type".
  int category = 0;
  double frame_bits = 0;
  std::vector<DfgNode> nodes;
  std::vector<DfgEdge> edges;

  /// Incoming edge indices per node, in edge order.
  std::vector<std::vector<std::size_t>> in_edges() const;
  std::vector<std::vector<std::size_t>> out_edges() const;
};

/// Longest-path depth of every node from the sources (sources are 0).
/// Throws das::Error on cycles or dangling edges.
std::vector<int> compute_depths(const Dfg& dfg);

/// Validates structure and fills node depths in place.
void finalize_dfg(Dfg& dfg);

using AppLibrary = std::vector<Dfg>;

/// Five stand-in streaming applications: chain, fork-join, wide fan-out,
/// accelerator-heavy deep chain, and a mixed graph.
AppLibrary synth_app_library();

/// Throws ValidationError if any app uses a task type unknown to `platform`
/// or if app ids are not dense.
void check_library(const AppLibrary& apps, const Platform& platform);

nlohmann::json library_to_json(const AppLibrary& apps);
AppLibrary library_from_json(const nlohmann::json& j);
AppLibrary load_library(const std::filesystem::path& path);

enum class ArrivalModel { Periodic, Poisson };

struct MixEntry {
  AppId app = 0;
  double weight = 0;
};

/// One workload at one data rate.
struct Scenario {
  std::string name;
  std::vector<MixEntry> mix;
  double data_rate_mbps = 0;
  int frame_count = 1;
  std::uint64_t seed = 0;
  ArrivalModel arrivals = ArrivalModel::Periodic;
};

struct Arrival {
  TimeNs time = 0;
  AppId app = 0;
};

/// Frame bits averaged over the mix weights.
double mean_frame_bits(const std::vector<MixEntry>& mix, const AppLibrary& apps);

/// Time-ordered frame arrivals. The inter-arrival mean is mean_frame_bits / rate,
/// so the injected bit rate equals the scenario's data rate. Deterministic in the seed.
std::vector<Arrival> generate_arrivals(const Scenario& sc, const AppLibrary& apps);

/// Workloads (mixes) crossed with a data-rate ladder.
struct Suite {
  std::vector<Scenario> workloads;  // data_rate_mbps unused here
  std::vector<double> rates_mbps;

  std::size_t point_count() const { return workloads.size() * rates_mbps.size(); }
  /// Scenario for (workload w, rate r); the seed is derived from both.
  Scenario point(std::size_t w, std::size_t r) const;
  std::vector<Scenario> points() const;
};

struct SuiteOptions {
  int rate_count = 14;
  double rate_min_mbps = 100;
  double rate_max_mbps = 2600;
  int frame_count = 120;
  ArrivalModel arrivals = ArrivalModel::Periodic;
};

/// Geometric ladder of `count` rates from lo to hi inclusive.
std::vector<double> rate_ladder(int count, double lo, double hi);

/// `count` workloads from single-application mixes up to the uniform five-way mix.
Suite workload_suite(int count, std::uint64_t seed, const SuiteOptions& opt = {},
                     std::size_t app_count = 5);

nlohmann::json suite_to_json(const Suite& s);
Suite suite_from_json(const nlohmann::json& j);

}  // namespace das
