#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "das/common.hpp"
#include "das/platform.hpp"
#include "das/schedulers.hpp"
#include "das/tree.hpp"
#include "das/workload.hpp"
#include "json.hpp"

namespace das {

// ---------------------------------------------------------------------------
// Scheduler cost model

/// Latency/energy charged for scheduler work. Slow-path latency is quadratic in
/// the ready-queue length n: c0 + c1*n + c2*n^2.
struct OverheadModel {
  TimeNs fast_latency = 6.0;
  double fast_energy = 2.3;
  double slow_c0 = 40.0;
  double slow_c1 = 10.0;
  double slow_c2 = 2.0;
  double slow_power = 0.4;  // nJ per ns of scheduler runtime
  TimeNs classifier_latency = 0.0;  // off the critical path
  double classifier_energy = 1.9;

  TimeNs slow_latency(std::size_t n) const;
  double slow_energy(std::size_t n) const { return slow_power * slow_latency(n); }
  /// Throws if any constant is negative or non-finite.
  void validate() const;
};

nlohmann::json overhead_to_json(const OverheadModel& m);
/// Applies the keys present in `j` on top of `base`.
OverheadModel overhead_from_json(const nlohmann::json& j, OverheadModel base = {});

// ---------------------------------------------------------------------------
// Input data-rate estimation

/// Eight saturating 16-bit counters of bits injected per window. The estimate
/// averages the last eight windows (the current one included).
class RateTracker {
 public:
  static constexpr std::size_t kEntries = 8;
  static constexpr std::uint32_t kMaxCount = 0xFFFF;

  explicit RateTracker(TimeNs window_ns = 1000.0, double bits_per_count = 1.0);

  /// Rolls windows forward to `now`; entries that age out are cleared.
  void advance(TimeNs now);
  void add(double bits, TimeNs now);
  double estimate_mbps() const;

  const std::array<std::uint16_t, kEntries>& entries() const { return entries_; }
  TimeNs window_ns() const { return window_ns_; }

 private:
  TimeNs window_ns_;
  double bits_per_count_;
  std::array<std::uint16_t, kEntries> entries_{};
  std::size_t cursor_ = 0;
  std::int64_t window_index_ = 0;
};

/// Value-style update used by tests and tooling.
RateTracker rate_update(RateTracker tracker, double bits, TimeNs now);

// ---------------------------------------------------------------------------
// Simulation state

enum class TaskState : std::uint8_t { Waiting, Ready, Running, Done };

struct TaskInstance {
  InstanceId id = 0;
  JobId job = 0;
  AppId app = 0;
  NodeId node = 0;
  TaskTypeId type = 0;
  int depth = 0;
  std::vector<InstanceId> preds;
  std::vector<double> pred_bytes;
  std::vector<InstanceId> succs;
  int unfinished_preds = 0;
  TimeNs ready_time = 0;
  TimeNs start_time = 0;
  TimeNs finish_time = 0;
  PeId pe = -1;
  TaskState state = TaskState::Waiting;
};

struct JobState {
  JobId id = 0;
  AppId app = 0;
  TimeNs arrival = 0;
  TimeNs finish = 0;
  int remaining = 0;
};

struct BusyInterval {
  TimeNs start = 0;
  TimeNs finish = 0;
};

/// Everything the policies and the counter snapshot can observe.
struct SystemState {
  TimeNs now = 0;
  std::vector<TimeNs> pe_busy_until;
  std::vector<std::deque<BusyInterval>> pe_history;
  std::vector<TaskInstance> tasks;
  std::vector<JobState> jobs;
  std::vector<InstanceId> ready;  // ordered by (ready_time, id)
  RateTracker rate;
  TimeNs util_window = 8000.0;

  explicit SystemState(const Platform& platform, RateTracker tracker = RateTracker{});

  /// Ready-task view for the policies.
  ReadyTask ready_task(InstanceId id) const;
  /// PE availability clamped to `now`.
  std::vector<TimeNs> pe_free_at() const;
  /// Busy fraction of `pe` over [now - util_window, now].
  double utilization(PeId pe) const;
};

// ---------------------------------------------------------------------------
// Performance-counter snapshot

/// Counter layout for a platform: task block, PE block, system block.
/// Times in the vector are relative to the snapshot time (time until ready).
class FeatureLayout {
 public:
  explicit FeatureLayout(const Platform& platform);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  /// Index of a named counter; throws if absent.
  std::size_t index_of(std::string_view name) const;

  std::size_t task_type() const { return 0; }
  std::size_t exec(ClusterId c) const { return 1 + c; }
  std::size_t power(ClusterId c) const { return 1 + clusters_ + c; }
  std::size_t depth() const { return 1 + 2 * clusters_; }
  std::size_t app_id() const { return depth() + 1; }
  std::size_t pred_task_type() const { return depth() + 2; }
  std::size_t pred_cluster() const { return depth() + 3; }
  std::size_t app_type() const { return depth() + 4; }
  std::size_t pe_ready(PeId p) const { return depth() + 5 + p; }
  std::size_t cluster_avail(ClusterId c) const { return depth() + 5 + pes_ + c; }
  std::size_t pe_util(PeId p) const { return depth() + 5 + pes_ + clusters_ + p; }
  std::size_t comm_cost() const { return depth() + 5 + 2 * pes_ + clusters_; }
  std::size_t data_rate() const { return comm_cost() + 1; }

 private:
  std::size_t pes_;
  std::size_t clusters_;
  std::vector<std::string> names_;
};

struct FeatureSnapshot {
  TimeNs time = 0;
  bool has_task = false;  // false when the ready queue is empty
  InstanceId task = -1;
  std::vector<TimeNs> pe_ready;  // absolute, >= time
  std::vector<TimeNs> cluster_avail;  // absolute, >= time
  std::vector<double> pe_util;
  double data_rate_mbps = 0;
  std::vector<double> counters;  // full vector in FeatureLayout order
};

FeatureSnapshot snapshot_counters(const SystemState& state, const Platform& platform,
                                  const AppLibrary& apps, const LutPolicy& lut);

// ---------------------------------------------------------------------------
// Policies

enum class PolicyKind { Lut, Etf, EtfIdeal, Das, Threshold };

struct PolicySpec {
  PolicyKind kind = PolicyKind::Lut;
  std::shared_ptr<const DecisionTree> tree;  // Das only
  double threshold_mbps = 0;  // Threshold only
  std::string name = "lut";

  static PolicySpec lut();
  static PolicySpec etf();
  static PolicySpec etf_ideal();
  static PolicySpec das(DecisionTree tree, std::string name = "das");
  static PolicySpec threshold(double mbps);
};

/// Parses `lut|etf|etf-ideal|das:<tree-file>|threshold:<mbps>`.
PolicySpec parse_policy(std::string_view text);

/// Which concrete scheduler an invocation runs.
enum class Path { Fast, Slow, SlowIdeal };

/// Result of one scheduler invocation: decisions plus the cost it charges.
struct Invocation {
  Path path = Path::Fast;
  std::vector<Decision> decisions;
  TimeNs latency = 0;
  double energy = 0;
  std::size_t queue_length = 0;
};

/// Runs one scheduler invocation on the current ready queue. The fast path
/// decides the queue head; the slow paths decide the whole queue.
/// `das_classifier` adds the classifier's energy term.
Invocation invoke_scheduler(const SystemState& state, const Platform& platform, Path path,
                            const OverheadModel& overhead, const LutPolicy& lut,
                            bool das_classifier = false);

// ---------------------------------------------------------------------------
// Trace

struct DecisionRecord {
  TimeNs time = 0;
  PolicyTag tag = PolicyTag::Fast;
  std::size_t queue_length = 0;
  InstanceId task = 0;
  PeId pe = 0;
  TimeNs overhead_ns = 0;  // share of the invocation latency
  double overhead_nj = 0;  // share of the invocation energy
  std::size_t invocation = 0;
};

struct InvocationRecord {
  TimeNs time = 0;
  PolicyTag tag = PolicyTag::Fast;
  std::size_t queue_length = 0;
  TimeNs latency = 0;
  double energy = 0;
};

struct TaskRecord {
  InstanceId id = 0;
  JobId job = 0;
  AppId app = 0;
  NodeId node = 0;
  TaskTypeId type = 0;
  PeId pe = 0;
  TimeNs ready = 0;
  TimeNs start = 0;
  TimeNs finish = 0;
  double energy = 0;
  std::vector<InstanceId> preds;
};

struct JobRecord {
  JobId id = 0;
  AppId app = 0;
  TimeNs arrival = 0;
  TimeNs finish = 0;
  TimeNs latency() const { return finish - arrival; }
};

/// Oracle probe taken at a fast-path decision: counters plus whether ETF
/// would have placed the same task on the same PE.
struct ProbeRecord {
  std::size_t decision = 0;
  std::vector<double> counters;
  bool agree = false;
};

struct SimTrace {
  std::string policy;
  std::vector<DecisionRecord> decisions;
  std::vector<InvocationRecord> invocations;
  std::vector<TaskRecord> tasks;
  std::vector<JobRecord> jobs;
  std::vector<ProbeRecord> probes;
  double task_energy = 0;
  double sched_energy = 0;
  TimeNs end_time = 0;
};

struct RunOptions {
  std::size_t event_cap = 20'000'000;
  /// Record an ETF-agreement probe at every fast decision (oracle Run 1).
  bool oracle_probe = false;
  TimeNs rate_window = 4000.0;
  double rate_bits_per_count = 1.0;
  TimeNs util_window = 8000.0;
};

/// Simulates `sc` to completion under `policy`. Deterministic in its inputs
/// (the scenario seed drives arrivals). Throws das::Error when a task cannot be
/// placed or the event cap is exceeded.
SimTrace run(const Platform& platform, const AppLibrary& apps, const Scenario& sc,
             const PolicySpec& policy, const OverheadModel& overhead, const RunOptions& opt = {});

/// Trace export: decision rows then job rows (column order documented in README).
std::string trace_to_csv(const SimTrace& trace);

}  // namespace das
