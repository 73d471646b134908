#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "das/engine.hpp"
#include "das/io.hpp"
#include "das/metrics.hpp"
#include "das/platform.hpp"
#include "das/schedulers.hpp"
#include "das/workload.hpp"

namespace dtest {

inline das::Platform default_platform() {
  return das::load_platform(std::string(DAS_CONFIG_DIR) + "/platform.json");
}

inline bool close_rel(double a, double b, double rel = 1e-9) {
  return std::fabs(a - b) <= rel * std::max({1.0, std::fabs(a), std::fabs(b)});
}

// ---------------------------------------------------------------------------
// Small random ETF instances and an exhaustive oracle written directly against
// the raw configuration, without going through Platform or finish_time.

struct EtfInstance {
  das::PlatformConfig cfg;
  das::Platform platform;
  std::vector<das::ReadyTask> ready;
  std::vector<das::TimeNs> free_at;
};

inline int pick(das::Rng& rng, int lo, int hi) {  // inclusive
  return lo + static_cast<int>(rng.uniform() * (hi - lo + 1));
}

inline EtfInstance random_etf_instance(das::Rng& rng) {
  EtfInstance in;
  const int pes = pick(rng, 1, 4);
  const int clusters = pick(rng, 1, std::min(3, pes));
  std::vector<int> counts(static_cast<std::size_t>(clusters), 1);
  for (int k = clusters; k < pes; ++k) ++counts[static_cast<std::size_t>(pick(rng, 0, clusters - 1))];
  for (int c = 0; c < clusters; ++c) {
    das::Cluster cl;
    cl.id = c;
    cl.name = "c" + std::to_string(c);
    cl.kind = c == 0 ? das::ClusterKind::Cpu : das::ClusterKind::Accelerator;
    cl.pe_count = counts[static_cast<std::size_t>(c)];
    cl.mesh = {c / 2, c % 2};
    in.cfg.clusters.push_back(cl);
  }
  const int types = 3;
  for (int t = 0; t < types; ++t) {
    das::TaskProfile p;
    p.type = t;
    p.name = "t" + std::to_string(t);
    for (int c = 0; c < clusters; ++c)
      if (c == 0 || rng.uniform() < 0.6)
        p.entries.push_back({c, static_cast<double>(pick(rng, 1, 20)), 100.0 + pick(rng, 0, 100)});
    in.cfg.profiles.push_back(p);
  }
  in.cfg.comm.bytes_per_ns = static_cast<double>(1 << pick(rng, 0, 2));
  in.cfg.comm.per_hop_latency = pick(rng, 0, 5);
  in.platform = das::validate_platform(in.cfg);

  const int n = pick(rng, 1, 5);
  std::vector<int> ids(10);
  for (int i = 0; i < 10; ++i) ids[static_cast<std::size_t>(i)] = i;
  for (int i = 9; i > 0; --i) std::swap(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(pick(rng, 0, i))]);
  for (int i = 0; i < n; ++i) {
    das::ReadyTask t;
    t.id = ids[static_cast<std::size_t>(i)];
    t.type = pick(rng, 0, types - 1);
    t.ready_time = pick(rng, 0, 10);
    const int inputs = pick(rng, 0, 2);
    for (int k = 0; k < inputs; ++k) t.inputs.push_back({pick(rng, 0, pes - 1), static_cast<double>(pick(rng, 0, 20))});
    in.ready.push_back(t);
  }
  for (int p = 0; p < pes; ++p) in.free_at.push_back(pick(rng, 0, 15));
  return in;
}

struct OracleStep {
  das::TimeNs finish;
  das::InstanceId task;
  das::PeId pe;
  auto key() const { return std::tuple(finish, task, pe); }
};

namespace detail {

struct OracleSearch {
  const das::PlatformConfig& cfg;
  std::vector<int> pe_cluster;
  std::vector<OracleStep> best;
  bool have_best = false;

  const das::ProfileEntry* entry(das::TaskTypeId type, int cluster) const {
    for (const auto& p : cfg.profiles)
      if (p.type == type)
        for (const auto& e : p.entries)
          if (e.cluster == cluster) return &e;
    return nullptr;
  }

  das::TimeNs comm(int src_pe, int dst_pe, double bytes) const {
    const int a = pe_cluster[static_cast<std::size_t>(src_pe)];
    const int b = pe_cluster[static_cast<std::size_t>(dst_pe)];
    if (a == b) return 0;
    const auto& pa = cfg.clusters[static_cast<std::size_t>(a)].mesh;
    const auto& pb = cfg.clusters[static_cast<std::size_t>(b)].mesh;
    const int hops = std::abs(pa.row - pb.row) + std::abs(pa.col - pb.col);
    return hops * cfg.comm.per_hop_latency + bytes / cfg.comm.bytes_per_ns;
  }

  static bool less_seq(const std::vector<OracleStep>& a, const std::vector<OracleStep>& b) {
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
      if (a[i].key() < b[i].key()) return true;
      if (b[i].key() < a[i].key()) return false;
    }
    return a.size() < b.size();
  }

  void dfs(const std::vector<das::ReadyTask>& ready, std::vector<bool>& used,
           std::vector<das::TimeNs>& free_at, std::vector<OracleStep>& seq) {
    if (seq.size() == ready.size()) {
      if (!have_best || less_seq(seq, best)) {
        best = seq;
        have_best = true;
      }
      return;
    }
    for (std::size_t i = 0; i < ready.size(); ++i) {
      if (used[i]) continue;
      const auto& t = ready[i];
      for (std::size_t pe = 0; pe < free_at.size(); ++pe) {
        const auto* e = entry(t.type, pe_cluster[pe]);
        if (!e) continue;
        das::TimeNs c = 0;
        for (const auto& in : t.inputs) c = std::max(c, comm(in.pe, static_cast<int>(pe), in.bytes));
        const das::TimeNs ft = std::max(free_at[pe], t.ready_time + c) + e->exec_ns;
        const das::TimeNs saved = free_at[pe];
        used[i] = true;
        free_at[pe] = ft;
        seq.push_back({ft, t.id, static_cast<das::PeId>(pe)});
        dfs(ready, used, free_at, seq);
        seq.pop_back();
        free_at[pe] = saved;
        used[i] = false;
      }
    }
  }
};

}  // namespace detail

/// Lexicographically smallest (finish, task, pe) commit sequence over every
/// order and placement of the ready tasks.
inline std::vector<OracleStep> etf_oracle(const EtfInstance& in) {
  detail::OracleSearch s{in.cfg, {}, {}, false};
  for (const auto& c : in.cfg.clusters)
    for (int k = 0; k < c.pe_count; ++k) s.pe_cluster.push_back(c.id);
  std::vector<bool> used(in.ready.size(), false);
  auto free_at = in.free_at;
  std::vector<OracleStep> seq;
  s.dfs(in.ready, used, free_at, seq);
  return s.best;
}

/// Empty when etf_schedule matches the oracle step for step.
inline std::string etf_mismatch(const EtfInstance& in) {
  const das::SchedView view{in.platform, in.free_at};
  const auto got = das::etf_schedule(in.ready, view);
  const auto want = etf_oracle(in);
  if (got.size() != want.size()) return "length differs";
  for (std::size_t i = 0; i < got.size(); ++i)
    if (got[i].task != want[i].task || got[i].pe != want[i].pe ||
        got[i].predicted_finish != want[i].finish)
      return "step " + std::to_string(i) + ": got task " + std::to_string(got[i].task) + " on PE " +
             std::to_string(got[i].pe) + " at " + das::fmt_double(got[i].predicted_finish) +
             ", oracle task " + std::to_string(want[i].task) + " on PE " +
             std::to_string(want[i].pe) + " at " + das::fmt_double(want[i].finish);
  return {};
}

// ---------------------------------------------------------------------------
// Trace invariants

/// Every violated invariant of a completed trace, as readable messages.
inline std::vector<std::string> check_trace(const das::SimTrace& tr, const das::Platform& plat,
                                            const das::AppLibrary& apps) {
  std::vector<std::string> v;
  auto fail = [&](std::string m) {
    if (v.size() < 20) v.push_back(tr.policy + ": " + std::move(m));
  };

  std::size_t expected = 0;
  for (const auto& j : tr.jobs) expected += apps.at(static_cast<std::size_t>(j.app)).nodes.size();
  if (tr.tasks.size() != expected)
    fail("task count " + std::to_string(tr.tasks.size()) + " != " + std::to_string(expected));

  std::map<das::InstanceId, const das::TaskRecord*> by_id;
  for (const auto& t : tr.tasks)
    if (!by_id.emplace(t.id, &t).second) fail("task " + std::to_string(t.id) + " recorded twice");

  std::map<das::InstanceId, int> decided;
  for (const auto& d : tr.decisions) {
    ++decided[d.task];
    const auto it = by_id.find(d.task);
    if (it == by_id.end()) {
      fail("decision for unknown task " + std::to_string(d.task));
      continue;
    }
    if (it->second->pe != d.pe) fail("task " + std::to_string(d.task) + " ran off its decided PE");
    if (d.invocation >= tr.invocations.size()) {
      fail("decision references missing invocation");
      continue;
    }
    const auto& inv = tr.invocations[d.invocation];
    if (it->second->start < d.time + inv.latency)
      fail("task " + std::to_string(d.task) + " starts before its scheduler invocation ends");
  }
  for (const auto& t : tr.tasks)
    if (decided[t.id] != 1)
      fail("task " + std::to_string(t.id) + " decided " + std::to_string(decided[t.id]) + " times");

  double task_energy = 0;
  std::vector<std::vector<std::pair<das::TimeNs, das::TimeNs>>> busy(plat.pe_count());
  for (const auto& t : tr.tasks) {
    if (t.pe < 0 || static_cast<std::size_t>(t.pe) >= plat.pe_count()) {
      fail("task " + std::to_string(t.id) + " on invalid PE");
      continue;
    }
    const das::ClusterId c = plat.cluster_of(t.pe);
    if (!plat.supports(t.type, c)) {
      fail("task " + std::to_string(t.id) + " on an unsupporting cluster");
      continue;
    }
    if (!close_rel(t.finish - t.start, plat.exec_time(t.type, c)))
      fail("task " + std::to_string(t.id) + " duration differs from its exec time");
    if (t.start < t.ready) fail("task " + std::to_string(t.id) + " starts before it is ready");
    const double e = plat.energy_of(t.type, c, plat.exec_time(t.type, c));
    if (!close_rel(e, t.energy)) fail("task " + std::to_string(t.id) + " energy mismatch");
    task_energy += e;
    busy[static_cast<std::size_t>(t.pe)].push_back({t.start, t.finish});

    const auto& g = apps.at(static_cast<std::size_t>(t.app));
    for (das::InstanceId p : t.preds) {
      const auto it = by_id.find(p);
      if (it == by_id.end()) {
        fail("task " + std::to_string(t.id) + " has unknown predecessor");
        continue;
      }
      const auto& pr = *it->second;
      if (pr.job != t.job) fail("predecessor from another job");
      double bytes = -1;
      for (const auto& edge : g.edges)
        if (edge.src == pr.node && edge.dst == t.node) bytes = edge.bytes;
      if (bytes < 0) {
        fail("task " + std::to_string(t.id) + " predecessor is not a graph edge");
        continue;
      }
      if (t.start < pr.finish + plat.comm_cost(pr.pe, t.pe, bytes))
        fail("precedence: task " + std::to_string(t.id) + " starts before input from " +
             std::to_string(p) + " arrives");
    }
  }
  for (std::size_t pe = 0; pe < busy.size(); ++pe) {
    auto& b = busy[pe];
    std::sort(b.begin(), b.end());
    for (std::size_t k = 1; k < b.size(); ++k)
      if (b[k].first < b[k - 1].second) fail("overlap on PE " + std::to_string(pe));
  }

  for (const auto& j : tr.jobs) {
    das::TimeNs last = j.arrival;
    for (const auto& t : tr.tasks)
      if (t.job == j.id) {
        last = std::max(last, t.finish);
        if (t.start < j.arrival) fail("task starts before its frame arrives");
      }
    if (j.finish != last) fail("job " + std::to_string(j.id) + " finish is not its last task");
  }

  double inv_energy = 0, dec_energy = 0, dec_latency = 0, inv_latency = 0;
  for (const auto& i : tr.invocations) {
    inv_energy += i.energy;
    inv_latency += i.latency;
  }
  for (const auto& d : tr.decisions) {
    dec_energy += d.overhead_nj;
    dec_latency += d.overhead_ns;
  }
  if (!close_rel(task_energy, tr.task_energy)) fail("task energy total mismatch");
  if (!close_rel(inv_energy, tr.sched_energy)) fail("scheduler energy != sum over invocations");
  if (!close_rel(dec_energy, tr.sched_energy)) fail("scheduler energy != sum over decisions");
  if (!close_rel(dec_latency, inv_latency)) fail("decision latency shares do not sum to invocations");

  const das::Metrics m = das::reduce(tr);
  if (!close_rel(m.edp, m.total_energy * m.avg_job_exec_time)) fail("edp != energy x time");
  if (!close_rel(m.total_energy, m.task_energy + m.sched_energy)) fail("total energy identity");
  if (m.decisions() != tr.decisions.size()) fail("F + S != decisions");
  return v;
}

}  // namespace dtest
