#pragma once

#include <span>
#include <vector>

#include "das/common.hpp"
#include "das/platform.hpp"

namespace das {

/// Data dependency of a ready task on an already-placed predecessor.
struct Inbound {
  PeId pe = 0;
  double bytes = 0;
};

/// What a policy needs to know about a ready task.
struct ReadyTask {
  InstanceId id = 0;
  TaskTypeId type = 0;
  TimeNs ready_time = 0;
  std::vector<Inbound> inputs;
};

/// Read-only PE availability seen by a policy. `pe_free_at[p]` is the earliest
/// time PE p can start new work; callers clamp it to the current time.
struct SchedView {
  const Platform& platform;
  std::span<const TimeNs> pe_free_at;
};

struct Decision {
  InstanceId task = 0;
  PeId pe = 0;
  TimeNs predicted_finish = 0;
  PolicyTag tag = PolicyTag::Fast;

  bool operator==(const Decision&) const = default;
};

/// Predicted finish of `task` on `pe`:
/// max(free_at(pe), ready_time + max inbound comm cost) + exec time.
/// Throws das::Error if the PE's cluster does not support the task type.
TimeNs finish_time(const ReadyTask& task, PeId pe, const SchedView& view);

/// Earliest task first: repeatedly commit the (task, PE) pair with minimum
/// predicted finish time, updating provisional PE availability. Ties break on
/// (finish time, task id, PE id). Complexity O(n^2 * P) for n ready tasks.
std::vector<Decision> etf_schedule(std::span<const ReadyTask> ready, const SchedView& view);

/// Lookup table of the most energy-efficient cluster for each known task type.
class LutPolicy {
 public:
  /// Table over every type the platform profiles.
  explicit LutPolicy(const Platform& platform);
  /// Table restricted to `known`; other types take the CPU fallback.
  LutPolicy(const Platform& platform, std::span<const TaskTypeId> known);

  /// Preferred cluster, or -1 for an unknown type.
  ClusterId preferred(TaskTypeId type) const;
  /// CPU clusters scanned, in order, for unknown types.
  const std::vector<ClusterId>& cpu_fallback() const { return fallback_; }

 private:
  std::vector<ClusterId> table_;
  std::vector<ClusterId> fallback_;
};

/// Earliest-available PE of the task type's preferred cluster (lowest PE id on
/// ties); unknown types go to the earliest-available CPU core.
Decision lut_schedule(const ReadyTask& task, const SchedView& view, const LutPolicy& lut);

}  // namespace das
