#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "das/common.hpp"
#include "json.hpp"

namespace das {

enum class ClusterKind { Cpu, Accelerator };

struct MeshPos {
  int row = 0;
  int col = 0;
  bool operator==(const MeshPos&) const = default;
};

struct Cluster {
  ClusterId id = 0;
  std::string name;
  ClusterKind kind = ClusterKind::Cpu;
  int pe_count = 1;
  MeshPos mesh;
};

struct Pe {
  PeId id = 0;
  ClusterId cluster = 0;
};

/// Execution time and power of one task type on one cluster.
struct ProfileEntry {
  ClusterId cluster = 0;
  TimeNs exec_ns = 0;
  double power_mw = 0;
};

struct TaskProfile {
  TaskTypeId type = 0;
  std::string name;
  std::vector<ProfileEntry> entries;

  const ProfileEntry* on(ClusterId c) const;
};

/// Cluster-granular mesh NoC: hop latency plus bandwidth-limited transfer.
struct CommModel {
  double bytes_per_ns = 1.0;
  TimeNs per_hop_latency = 10.0;
};

/// Platform description as read from file, before validation.
struct PlatformConfig {
  std::vector<Cluster> clusters;
  std::vector<TaskProfile> profiles;
  CommModel comm;
};

/// Validated, immutable heterogeneous SoC description.
class Platform {
 public:
  const std::vector<Cluster>& clusters() const { return clusters_; }
  const std::vector<Pe>& pes() const { return pes_; }
  const std::vector<TaskProfile>& profiles() const { return profiles_; }
  const CommModel& comm() const { return comm_; }

  std::size_t cluster_count() const { return clusters_.size(); }
  std::size_t pe_count() const { return pes_.size(); }

  ClusterId cluster_of(PeId pe) const;
  const Cluster& cluster(ClusterId c) const;
  /// PEs of cluster `c`, ascending ids.
  const std::vector<PeId>& pes_of(ClusterId c) const;
  std::optional<ClusterId> find_cluster(const std::string& name) const;

  bool knows_type(TaskTypeId t) const;
  const TaskProfile& profile(TaskTypeId t) const;
  bool supports(TaskTypeId t, ClusterId c) const;
  TimeNs exec_time(TaskTypeId t, ClusterId c) const;
  double power(TaskTypeId t, ClusterId c) const;

  /// CPU clusters in ascending id order.
  std::vector<ClusterId> cpu_clusters() const;

  TimeNs comm_cost(PeId src, PeId dst, double bytes) const;

  /// Energy in nJ of running `type` on `cluster` for `exec_ns`.
  double energy_of(TaskTypeId type, ClusterId cluster, TimeNs exec_ns) const;

  friend Platform validate_platform(const PlatformConfig& raw);

 private:
  std::vector<Cluster> clusters_;
  std::vector<Pe> pes_;
  std::vector<std::vector<PeId>> cluster_pes_;
  std::vector<TaskProfile> profiles_;  // indexed by type id; gaps have empty entries
  std::vector<bool> type_known_;
  CommModel comm_;
};

/// Checks `raw` and derives the PE list. Throws ValidationError listing every problem.
Platform validate_platform(const PlatformConfig& raw);

PlatformConfig platform_config_from_json(const nlohmann::json& j);
nlohmann::json platform_config_to_json(const PlatformConfig& cfg);
Platform load_platform(const std::filesystem::path& path);

/// Human-readable summary used by `platform show`.
std::string describe(const Platform& p);

}  // namespace das
