#include "das/schedulers.hpp"

#include <algorithm>
#include <limits>

namespace das {

TimeNs finish_time(const ReadyTask& task, PeId pe, const SchedView& view) {
  const ClusterId c = view.platform.cluster_of(pe);
  if (!view.platform.supports(task.type, c))
    throw Error("task " + std::to_string(task.id) + " (type " + std::to_string(task.type) +
                ") cannot run on PE " + std::to_string(pe));
  TimeNs comm = 0;
  for (const auto& in : task.inputs)
    comm = std::max(comm, view.platform.comm_cost(in.pe, pe, in.bytes));
  const TimeNs start = std::max(view.pe_free_at[pe], task.ready_time + comm);
  return start + view.platform.exec_time(task.type, c);
}

std::vector<Decision> etf_schedule(std::span<const ReadyTask> ready, const SchedView& view) {
  const Platform& plat = view.platform;
  std::vector<TimeNs> free_at(view.pe_free_at.begin(), view.pe_free_at.end());
  const SchedView scratch{plat, free_at};

  std::vector<std::size_t> pending(ready.size());
  for (std::size_t i = 0; i < ready.size(); ++i) pending[i] = i;

  std::vector<Decision> out;
  out.reserve(ready.size());
  while (!pending.empty()) {
    std::size_t best_slot = 0;
    Decision best{};
    bool found = false;
    for (std::size_t slot = 0; slot < pending.size(); ++slot) {
      const ReadyTask& t = ready[pending[slot]];
      for (const auto& pe : plat.pes()) {
        if (!plat.supports(t.type, pe.cluster)) continue;
        const TimeNs ft = finish_time(t, pe.id, scratch);
        const bool better = !found || ft < best.predicted_finish ||
                            (ft == best.predicted_finish &&
                             (t.id < best.task || (t.id == best.task && pe.id < best.pe)));
        if (better) {
          found = true;
          best = {t.id, pe.id, ft, PolicyTag::Slow};
          best_slot = slot;
        }
      }
    }
    if (!found)
      throw Error("task " + std::to_string(ready[pending.front()].id) + " has no capable PE");
    free_at[best.pe] = best.predicted_finish;
    out.push_back(best);
    pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(best_slot));
  }
  return out;
}

LutPolicy::LutPolicy(const Platform& platform) {
  std::vector<TaskTypeId> all;
  for (const auto& p : platform.profiles())
    if (platform.knows_type(p.type)) all.push_back(p.type);
  *this = LutPolicy(platform, all);
}

LutPolicy::LutPolicy(const Platform& platform, std::span<const TaskTypeId> known) {
  fallback_ = platform.cpu_clusters();
  for (TaskTypeId t : known) {
    const auto& prof = platform.profile(t);
    ClusterId best = -1;
    double best_energy = std::numeric_limits<double>::infinity();
    // entries are sorted by cluster id, so strict < keeps the lower id on ties
    for (const auto& e : prof.entries) {
      const double energy = e.power_mw * e.exec_ns;
      if (energy < best_energy) {
        best_energy = energy;
        best = e.cluster;
      }
    }
    if (static_cast<std::size_t>(t) >= table_.size()) table_.resize(t + 1, -1);
    table_[t] = best;
  }
}

ClusterId LutPolicy::preferred(TaskTypeId type) const {
  if (type < 0 || static_cast<std::size_t>(type) >= table_.size()) return -1;
  return table_[type];
}

Decision lut_schedule(const ReadyTask& task, const SchedView& view, const LutPolicy& lut) {
  const ClusterId pref = lut.preferred(task.type);
  PeId best = -1;
  auto consider = [&](ClusterId c) {
    for (PeId pe : view.platform.pes_of(c))
      if (best < 0 || view.pe_free_at[pe] < view.pe_free_at[best]) best = pe;
  };
  if (pref >= 0) {
    consider(pref);
  } else {
    for (ClusterId c : lut.cpu_fallback())
      if (view.platform.supports(task.type, c) || !view.platform.knows_type(task.type))
        consider(c);
  }
  if (best < 0) throw Error("no PE available for task " + std::to_string(task.id));
  TimeNs predicted = view.pe_free_at[best];
  if (view.platform.supports(task.type, view.platform.cluster_of(best)))
    predicted = finish_time(task, best, view);
  return {task.id, best, predicted, PolicyTag::Fast};
}

}  // namespace das
