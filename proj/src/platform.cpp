#include "das/platform.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "das/io.hpp"

namespace das {

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error([&] {
        std::string msg = "validation failed:";
        for (const auto& v : violations) msg += "\n  - " + v;
        return msg;
      }()),
      violations_(std::move(violations)) {}

const ProfileEntry* TaskProfile::on(ClusterId c) const {
  for (const auto& e : entries)
    if (e.cluster == c) return &e;
  return nullptr;
}

ClusterId Platform::cluster_of(PeId pe) const {
  if (pe < 0 || static_cast<std::size_t>(pe) >= pes_.size())
    throw Error("unknown PE id " + std::to_string(pe));
  return pes_[pe].cluster;
}

const Cluster& Platform::cluster(ClusterId c) const {
  if (c < 0 || static_cast<std::size_t>(c) >= clusters_.size())
    throw Error("unknown cluster id " + std::to_string(c));
  return clusters_[c];
}

const std::vector<PeId>& Platform::pes_of(ClusterId c) const {
  cluster(c);
  return cluster_pes_[c];
}

std::optional<ClusterId> Platform::find_cluster(const std::string& name) const {
  for (const auto& c : clusters_)
    if (c.name == name) return c.id;
  return std::nullopt;
}

bool Platform::knows_type(TaskTypeId t) const {
  return t >= 0 && static_cast<std::size_t>(t) < type_known_.size() && type_known_[t];
}

const TaskProfile& Platform::profile(TaskTypeId t) const {
  if (!knows_type(t)) throw Error("unknown task type " + std::to_string(t));
  return profiles_[t];
}

bool Platform::supports(TaskTypeId t, ClusterId c) const {
  return knows_type(t) && profiles_[t].on(c) != nullptr;
}

TimeNs Platform::exec_time(TaskTypeId t, ClusterId c) const {
  const auto* e = profile(t).on(c);
  if (!e)
    throw Error("task type " + std::to_string(t) + " is not supported on cluster " +
                std::to_string(c));
  return e->exec_ns;
}

double Platform::power(TaskTypeId t, ClusterId c) const {
  const auto* e = profile(t).on(c);
  if (!e)
    throw Error("task type " + std::to_string(t) + " is not supported on cluster " +
                std::to_string(c));
  return e->power_mw;
}

std::vector<ClusterId> Platform::cpu_clusters() const {
  std::vector<ClusterId> out;
  for (const auto& c : clusters_)
    if (c.kind == ClusterKind::Cpu) out.push_back(c.id);
  return out;
}

TimeNs Platform::comm_cost(PeId src, PeId dst, double bytes) const {
  const ClusterId a = cluster_of(src);
  const ClusterId b = cluster_of(dst);
  if (bytes < 0) throw Error("negative byte count");
  if (a == b) return 0.0;
  const auto& pa = clusters_[a].mesh;
  const auto& pb = clusters_[b].mesh;
  const int hops = std::abs(pa.row - pb.row) + std::abs(pa.col - pb.col);
  return hops * comm_.per_hop_latency + bytes / comm_.bytes_per_ns;
}

double Platform::energy_of(TaskTypeId type, ClusterId cluster, TimeNs exec_ns) const {
  // mW x ns = 1e-12 J = 1e-3 nJ
  return power(type, cluster) * exec_ns * 1e-3;
}

Platform validate_platform(const PlatformConfig& raw) {
  std::vector<std::string> errs;
  Platform p;

  if (raw.clusters.empty()) errs.push_back("platform has no clusters");

  std::vector<Cluster> clusters = raw.clusters;
  std::sort(clusters.begin(), clusters.end(),
            [](const Cluster& a, const Cluster& b) { return a.id < b.id; });
  std::set<std::pair<int, int>> positions;
  std::set<std::string> names;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const auto& c = clusters[i];
    if (c.id != static_cast<int>(i)) {
      if (i > 0 && clusters[i - 1].id == c.id)
        errs.push_back("duplicate cluster id " + std::to_string(c.id));
      else
        errs.push_back("cluster ids must be dense 0..C-1 (found " + std::to_string(c.id) + ")");
    }
    if (c.pe_count < 1)
      errs.push_back("cluster " + std::to_string(c.id) + " has pe_count < 1");
    if (!positions.insert({c.mesh.row, c.mesh.col}).second)
      errs.push_back("cluster " + std::to_string(c.id) + " reuses mesh position (" +
                     std::to_string(c.mesh.row) + "," + std::to_string(c.mesh.col) + ")");
    if (!names.insert(c.name).second) errs.push_back("duplicate cluster name '" + c.name + "'");
  }
  const int n_clusters = static_cast<int>(clusters.size());
  auto cluster_ok = [&](ClusterId c) { return c >= 0 && c < n_clusters; };
  auto is_cpu = [&](ClusterId c) {
    return cluster_ok(c) && clusters[c].kind == ClusterKind::Cpu;
  };

  if (raw.comm.bytes_per_ns <= 0 || !std::isfinite(raw.comm.bytes_per_ns))
    errs.push_back("comm bytes_per_ns must be positive");
  if (raw.comm.per_hop_latency < 0 || !std::isfinite(raw.comm.per_hop_latency))
    errs.push_back("comm per_hop_latency must be non-negative");

  int max_type = -1;
  std::set<int> type_ids;
  for (const auto& prof : raw.profiles) {
    const std::string tag = "task type " + std::to_string(prof.type);
    if (prof.type < 0) {
      errs.push_back(tag + ": negative id");
      continue;
    }
    if (!type_ids.insert(prof.type).second) errs.push_back("duplicate " + tag);
    max_type = std::max(max_type, prof.type);
    bool any_valid = false;
    bool has_cpu = false;
    std::set<int> seen;
    for (const auto& e : prof.entries) {
      if (!cluster_ok(e.cluster)) {
        errs.push_back(tag + ": references nonexistent cluster " + std::to_string(e.cluster));
        continue;
      }
      if (!seen.insert(e.cluster).second)
        errs.push_back(tag + ": duplicate entry for cluster " + std::to_string(e.cluster));
      if (!(e.exec_ns > 0) || !std::isfinite(e.exec_ns))
        errs.push_back(tag + ": exec time must be > 0 on cluster " + std::to_string(e.cluster));
      if (!(e.power_mw > 0) || !std::isfinite(e.power_mw))
        errs.push_back(tag + ": power must be > 0 on cluster " + std::to_string(e.cluster));
      any_valid = true;
      has_cpu = has_cpu || is_cpu(e.cluster);
    }
    if (!any_valid) errs.push_back(tag + ": no supported cluster");
    else if (!has_cpu) errs.push_back(tag + ": no CPU cluster supports it (no fallback)");
  }

  if (!errs.empty()) throw ValidationError(std::move(errs));

  p.clusters_ = std::move(clusters);
  p.cluster_pes_.resize(p.clusters_.size());
  for (const auto& c : p.clusters_) {
    for (int k = 0; k < c.pe_count; ++k) {
      const PeId id = static_cast<PeId>(p.pes_.size());
      p.pes_.push_back({id, c.id});
      p.cluster_pes_[c.id].push_back(id);
    }
  }
  p.profiles_.resize(static_cast<std::size_t>(max_type + 1));
  p.type_known_.assign(static_cast<std::size_t>(max_type + 1), false);
  for (const auto& prof : raw.profiles) {
    auto sorted = prof;
    std::sort(sorted.entries.begin(), sorted.entries.end(),
              [](const ProfileEntry& a, const ProfileEntry& b) { return a.cluster < b.cluster; });
    p.profiles_[prof.type] = std::move(sorted);
    p.type_known_[prof.type] = true;
  }
  p.comm_ = raw.comm;
  return p;
}

namespace {

ClusterKind parse_kind(const std::string& s) {
  if (s == "cpu") return ClusterKind::Cpu;
  if (s == "accelerator") return ClusterKind::Accelerator;
  throw Error("unknown cluster kind '" + s + "'");
}

}  // namespace

PlatformConfig platform_config_from_json(const nlohmann::json& j) {
  PlatformConfig cfg;
  try {
    check_schema(j, "platform");
    for (const auto& c : j.at("clusters")) {
      Cluster cl;
      cl.id = c.at("id").get<int>();
      cl.name = c.at("name").get<std::string>();
      cl.kind = parse_kind(c.value("kind", std::string("cpu")));
      cl.pe_count = c.at("pe_count").get<int>();
      const auto& m = c.at("mesh");
      cl.mesh = {m.at(0).get<int>(), m.at(1).get<int>()};
      cfg.clusters.push_back(cl);
    }
    const auto& comm = j.at("comm");
    cfg.comm.bytes_per_ns = comm.at("bytes_per_ns").get<double>();
    cfg.comm.per_hop_latency = comm.at("per_hop_latency_ns").get<double>();
    for (const auto& t : j.at("task_types")) {
      TaskProfile prof;
      prof.type = t.at("id").get<int>();
      prof.name = t.value("name", std::string{});
      for (const auto& e : t.at("profiles"))
        prof.entries.push_back({e.at("cluster").get<int>(), e.at("exec_ns").get<double>(),
                                e.at("power_mw").get<double>()});
      cfg.profiles.push_back(std::move(prof));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed platform description: ") + e.what());
  }
  return cfg;
}

nlohmann::json platform_config_to_json(const PlatformConfig& cfg) {
  nlohmann::json j;
  j["schema"] = "platform";
  j["version"] = kSchemaVersion;
  for (const auto& c : cfg.clusters)
    j["clusters"].push_back({{"id", c.id},
                             {"name", c.name},
                             {"kind", c.kind == ClusterKind::Cpu ? "cpu" : "accelerator"},
                             {"pe_count", c.pe_count},
                             {"mesh", {c.mesh.row, c.mesh.col}}});
  j["comm"] = {{"bytes_per_ns", cfg.comm.bytes_per_ns},
               {"per_hop_latency_ns", cfg.comm.per_hop_latency}};
  for (const auto& t : cfg.profiles) {
    nlohmann::json jt{{"id", t.type}, {"name", t.name}, {"profiles", nlohmann::json::array()}};
    for (const auto& e : t.entries)
      jt["profiles"].push_back(
          {{"cluster", e.cluster}, {"exec_ns", e.exec_ns}, {"power_mw", e.power_mw}});
    j["task_types"].push_back(std::move(jt));
  }
  return j;
}

Platform load_platform(const std::filesystem::path& path) {
  return validate_platform(platform_config_from_json(read_json(path)));
}

std::string describe(const Platform& p) {
  std::ostringstream os;
  os << "clusters: " << p.cluster_count() << "  PEs: " << p.pe_count()
     << "  task types: " << p.profiles().size() << "\n";
  for (const auto& c : p.clusters()) {
    os << "  [" << c.id << "] " << c.name << " ("
       << (c.kind == ClusterKind::Cpu ? "cpu" : "accelerator") << ") x" << c.pe_count
       << " at (" << c.mesh.row << "," << c.mesh.col << ") PEs";
    for (PeId pe : p.pes_of(c.id)) os << ' ' << pe;
    os << "\n";
  }
  os << "comm: " << p.comm().per_hop_latency << " ns/hop, " << p.comm().bytes_per_ns
     << " B/ns\n";
  for (const auto& t : p.profiles()) {
    if (!p.knows_type(t.type)) continue;
    os << "  type " << t.type << " " << t.name << ":";
    for (const auto& e : t.entries)
      os << "  " << p.cluster(e.cluster).name << "=" << e.exec_ns << "ns/" << e.power_mw << "mW";
    os << "\n";
  }
  return os.str();
}

}  // namespace das
