#include "das/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

#include "das/io.hpp"

namespace das {

// ---------------------------------------------------------------------------
// OverheadModel

TimeNs OverheadModel::slow_latency(std::size_t n) const {
  const double x = static_cast<double>(n);
  return slow_c0 + slow_c1 * x + slow_c2 * x * x;
}

void OverheadModel::validate() const {
  for (double v : {fast_latency, fast_energy, slow_c0, slow_c1, slow_c2, slow_power,
                   classifier_latency, classifier_energy})
    if (!(v >= 0) || !std::isfinite(v)) throw Error("overhead constants must be finite and >= 0");
}

nlohmann::json overhead_to_json(const OverheadModel& m) {
  return {{"fast_latency_ns", m.fast_latency},      {"fast_energy_nj", m.fast_energy},
          {"slow_c0_ns", m.slow_c0},                {"slow_c1_ns", m.slow_c1},
          {"slow_c2_ns", m.slow_c2},                {"slow_power_nj_per_ns", m.slow_power},
          {"classifier_latency_ns", m.classifier_latency},
          {"classifier_energy_nj", m.classifier_energy}};
}

OverheadModel overhead_from_json(const nlohmann::json& j, OverheadModel m) {
  auto take = [&](const char* key, double& field) {
    if (j.contains(key)) field = j.at(key).get<double>();
  };
  take("fast_latency_ns", m.fast_latency);
  take("fast_energy_nj", m.fast_energy);
  take("slow_c0_ns", m.slow_c0);
  take("slow_c1_ns", m.slow_c1);
  take("slow_c2_ns", m.slow_c2);
  take("slow_power_nj_per_ns", m.slow_power);
  take("classifier_latency_ns", m.classifier_latency);
  take("classifier_energy_nj", m.classifier_energy);
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// RateTracker

RateTracker::RateTracker(TimeNs window_ns, double bits_per_count)
    : window_ns_(window_ns), bits_per_count_(bits_per_count) {
  if (!(window_ns > 0) || !(bits_per_count > 0)) throw Error("invalid rate tracker parameters");
}

void RateTracker::advance(TimeNs now) {
  const auto idx = static_cast<std::int64_t>(std::floor(now / window_ns_));
  if (idx <= window_index_) return;
  const std::int64_t steps = std::min<std::int64_t>(idx - window_index_, kEntries);
  for (std::int64_t s = 0; s < steps; ++s) {
    cursor_ = (cursor_ + 1) % kEntries;
    entries_[cursor_] = 0;
  }
  window_index_ = idx;
}

void RateTracker::add(double bits, TimeNs now) {
  if (bits < 0) throw Error("negative bit count");
  advance(now);
  const double counts = std::floor(bits / bits_per_count_);
  const double sum = static_cast<double>(entries_[cursor_]) + counts;
  entries_[cursor_] = static_cast<std::uint16_t>(std::min<double>(sum, kMaxCount));
}

double RateTracker::estimate_mbps() const {
  double sum = 0;
  for (auto e : entries_) sum += e;
  // bits per ns is Gbit/s
  return sum * bits_per_count_ / (kEntries * window_ns_) * 1e3;
}

RateTracker rate_update(RateTracker tracker, double bits, TimeNs now) {
  tracker.add(bits, now);
  return tracker;
}

// ---------------------------------------------------------------------------
// SystemState

SystemState::SystemState(const Platform& platform, RateTracker tracker)
    : pe_busy_until(platform.pe_count(), 0.0),
      pe_history(platform.pe_count()),
      rate(tracker) {}

ReadyTask SystemState::ready_task(InstanceId id) const {
  const auto& t = tasks.at(static_cast<std::size_t>(id));
  ReadyTask r{t.id, t.type, t.ready_time, {}};
  r.inputs.reserve(t.preds.size());
  for (std::size_t k = 0; k < t.preds.size(); ++k)
    r.inputs.push_back({tasks[static_cast<std::size_t>(t.preds[k])].pe, t.pred_bytes[k]});
  return r;
}

std::vector<TimeNs> SystemState::pe_free_at() const {
  std::vector<TimeNs> out(pe_busy_until.size());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = std::max(pe_busy_until[p], now);
  return out;
}

double SystemState::utilization(PeId pe) const {
  if (!(util_window > 0)) return 0;
  const TimeNs lo = now - util_window;
  TimeNs busy = 0;
  for (const auto& iv : pe_history.at(static_cast<std::size_t>(pe))) {
    const TimeNs a = std::max(iv.start, lo);
    const TimeNs b = std::min(iv.finish, now);
    if (b > a) busy += b - a;
  }
  return std::clamp(busy / util_window, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Counters

FeatureLayout::FeatureLayout(const Platform& platform)
    : pes_(platform.pe_count()), clusters_(platform.cluster_count()) {
  names_.push_back("task_type");
  for (const auto& c : platform.clusters()) names_.push_back("exec_" + c.name);
  for (const auto& c : platform.clusters()) names_.push_back("power_" + c.name);
  names_.push_back("depth");
  names_.push_back("app_id");
  names_.push_back("pred_task_type");
  names_.push_back("pred_cluster");
  names_.push_back("app_type");
  for (const auto& pe : platform.pes()) names_.push_back("pe_ready_" + std::to_string(pe.id));
  for (const auto& c : platform.clusters()) names_.push_back("cluster_avail_" + c.name);
  for (const auto& pe : platform.pes()) names_.push_back("pe_util_" + std::to_string(pe.id));
  names_.push_back("comm_cost");
  names_.push_back("data_rate");
}

std::size_t FeatureLayout::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  throw Error("unknown counter '" + std::string(name) + "'");
}

namespace {

FeatureSnapshot take_snapshot(const SystemState& st, const Platform& plat, const AppLibrary& apps,
                              const LutPolicy& lut, const FeatureLayout& lay) {
  FeatureSnapshot s;
  s.time = st.now;
  s.counters.assign(lay.size(), 0.0);
  auto& v = s.counters;

  const std::size_t P = plat.pe_count();
  s.pe_ready.resize(P);
  s.pe_util.resize(P);
  for (std::size_t p = 0; p < P; ++p) {
    s.pe_ready[p] = std::max(st.pe_busy_until[p], st.now);
    s.pe_util[p] = st.utilization(static_cast<PeId>(p));
    v[lay.pe_ready(static_cast<PeId>(p))] = s.pe_ready[p] - st.now;
    v[lay.pe_util(static_cast<PeId>(p))] = s.pe_util[p];
  }
  s.cluster_avail.resize(plat.cluster_count());
  for (const auto& c : plat.clusters()) {
    TimeNs best = std::numeric_limits<TimeNs>::infinity();
    for (PeId pe : plat.pes_of(c.id)) best = std::min(best, s.pe_ready[static_cast<std::size_t>(pe)]);
    s.cluster_avail[static_cast<std::size_t>(c.id)] = best;
    v[lay.cluster_avail(c.id)] = best - st.now;
  }
  s.data_rate_mbps = st.rate.estimate_mbps();
  v[lay.data_rate()] = s.data_rate_mbps;

  v[lay.pred_task_type()] = -1;
  v[lay.pred_cluster()] = -1;
  if (st.ready.empty()) return s;

  const auto& t = st.tasks.at(static_cast<std::size_t>(st.ready.front()));
  s.has_task = true;
  s.task = t.id;
  v[lay.task_type()] = t.type;
  for (const auto& e : plat.profile(t.type).entries) {
    v[lay.exec(e.cluster)] = e.exec_ns;
    v[lay.power(e.cluster)] = e.power_mw;
  }
  v[lay.depth()] = t.depth;
  v[lay.app_id()] = t.app;
  v[lay.app_type()] = apps.at(static_cast<std::size_t>(t.app)).category;
  if (!t.preds.empty()) {
    const auto& p = st.tasks[static_cast<std::size_t>(t.preds.front())];
    v[lay.pred_task_type()] = p.type;
    v[lay.pred_cluster()] = plat.cluster_of(p.pe);
  }
  ClusterId target = lut.preferred(t.type);
  if (target < 0) target = lut.cpu_fallback().empty() ? 0 : lut.cpu_fallback().front();
  const PeId probe = plat.pes_of(target).front();
  TimeNs comm = 0;
  for (std::size_t k = 0; k < t.preds.size(); ++k)
    comm = std::max(comm, plat.comm_cost(st.tasks[static_cast<std::size_t>(t.preds[k])].pe, probe,
                                         t.pred_bytes[k]));
  v[lay.comm_cost()] = comm;
  return s;
}

}  // namespace

FeatureSnapshot snapshot_counters(const SystemState& state, const Platform& platform,
                                  const AppLibrary& apps, const LutPolicy& lut) {
  return take_snapshot(state, platform, apps, lut, FeatureLayout(platform));
}

// ---------------------------------------------------------------------------
// Policies

PolicySpec PolicySpec::lut() { return {PolicyKind::Lut, nullptr, 0, "lut"}; }
PolicySpec PolicySpec::etf() { return {PolicyKind::Etf, nullptr, 0, "etf"}; }
PolicySpec PolicySpec::etf_ideal() { return {PolicyKind::EtfIdeal, nullptr, 0, "etf-ideal"}; }

PolicySpec PolicySpec::das(DecisionTree tree, std::string name) {
  return {PolicyKind::Das, std::make_shared<const DecisionTree>(std::move(tree)), 0,
          std::move(name)};
}

PolicySpec PolicySpec::threshold(double mbps) {
  return {PolicyKind::Threshold, nullptr, mbps, "threshold:" + fmt_double(mbps)};
}

PolicySpec parse_policy(std::string_view text) {
  if (text == "lut") return PolicySpec::lut();
  if (text == "etf") return PolicySpec::etf();
  if (text == "etf-ideal") return PolicySpec::etf_ideal();
  if (text.starts_with("das:")) {
    const std::string path(text.substr(4));
    if (path.empty()) throw Error("policy 'das' needs a tree file: das:<tree-file>");
    return PolicySpec::das(load_tree(path), "das");
  }
  if (text == "das") throw Error("policy 'das' needs a tree file: das:<tree-file>");
  if (text.starts_with("threshold:")) {
    const std::string num(text.substr(10));
    try {
      std::size_t used = 0;
      const double v = std::stod(num, &used);
      if (used != num.size() || !(v >= 0)) throw Error("");
      return PolicySpec::threshold(v);
    } catch (const std::exception&) {
      throw Error("bad threshold in policy '" + std::string(text) + "'");
    }
  }
  throw Error("unknown policy '" + std::string(text) + "'");
}

Invocation invoke_scheduler(const SystemState& state, const Platform& platform, Path path,
                            const OverheadModel& overhead, const LutPolicy& lut,
                            bool das_classifier) {
  if (state.ready.empty()) throw Error("scheduler invoked with an empty ready queue");
  Invocation inv;
  inv.path = path;
  inv.queue_length = state.ready.size();
  const auto free_at = state.pe_free_at();
  const SchedView view{platform, free_at};

  if (path == Path::Fast) {
    inv.decisions.push_back(lut_schedule(state.ready_task(state.ready.front()), view, lut));
    inv.latency = overhead.fast_latency;
    inv.energy = overhead.fast_energy;
  } else {
    std::vector<ReadyTask> tasks;
    tasks.reserve(state.ready.size());
    for (InstanceId id : state.ready) tasks.push_back(state.ready_task(id));
    inv.decisions = etf_schedule(tasks, view);
    if (path == Path::Slow) {
      inv.latency = overhead.slow_latency(tasks.size());
      inv.energy = overhead.slow_energy(tasks.size());
    }
  }
  if (das_classifier) {
    inv.latency += overhead.classifier_latency;
    inv.energy += overhead.classifier_energy;
  }
  return inv;
}

// ---------------------------------------------------------------------------
// Event loop

namespace {

enum class EventKind : int { TaskFinish = 0, FrameArrival = 1, SchedulerDone = 2 };

struct Event {
  TimeNs time;
  EventKind kind;
  std::uint64_t seq;
  int payload;
};

struct EventLater {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    if (a.kind != b.kind) return a.kind > b.kind;
    return a.seq > b.seq;
  }
};

class Simulator {
 public:
  Simulator(const Platform& plat, const AppLibrary& apps, const Scenario& sc,
            const PolicySpec& policy, const OverheadModel& oh, const RunOptions& opt)
      : plat_(plat),
        apps_(apps),
        policy_(policy),
        oh_(oh),
        opt_(opt),
        lut_(plat),
        layout_(plat),
        st_(plat, RateTracker(opt.rate_window, opt.rate_bits_per_count)) {
    st_.util_window = opt.util_window;
    oh_.validate();
    if (policy_.kind == PolicyKind::Das) {
      if (!policy_.tree) throw Error("DAS policy without a decision tree");
      for (const auto& n : policy_.tree->nodes)
        if (!n.is_leaf() && static_cast<std::size_t>(n.feature) >= layout_.size())
          throw Error("decision tree references counter " + std::to_string(n.feature) +
                      " beyond this platform's " + std::to_string(layout_.size()));
    }
    check_library(apps_, plat_);
    arrivals_ = generate_arrivals(sc, apps_);
    trace_.policy = policy_.name;
  }

  SimTrace run() {
    for (std::size_t i = 0; i < arrivals_.size(); ++i)
      push(arrivals_[i].time, EventKind::FrameArrival, static_cast<int>(i));

    std::size_t processed = 0;
    while (!events_.empty()) {
      const TimeNs t = events_.top().time;
      st_.now = t;
      while (!events_.empty() && events_.top().time == t) {
        const Event e = events_.top();
        events_.pop();
        if (++processed > opt_.event_cap)
          throw Error("event cap exceeded (" + std::to_string(opt_.event_cap) + ")");
        handle(e);
      }
      st_.rate.advance(t);
      if (policy_.kind == PolicyKind::Das) refresh_label();
      if (!sched_busy_ && !st_.ready.empty()) dispatch();
    }

    for (const auto& j : st_.jobs)
      if (j.remaining != 0) throw Error("simulation ended with unfinished jobs");
    trace_.end_time = st_.now;
    for (const auto& t : st_.tasks) {
      TaskRecord r{t.id, t.job, t.app, t.node, t.type, t.pe, t.ready_time, t.start_time,
                   t.finish_time, 0.0, t.preds};
      r.energy = plat_.energy_of(t.type, plat_.cluster_of(t.pe), t.finish_time - t.start_time);
      trace_.tasks.push_back(std::move(r));
    }
    for (const auto& j : st_.jobs) trace_.jobs.push_back({j.id, j.app, j.arrival, j.finish});
    return std::move(trace_);
  }

 private:
  void push(TimeNs t, EventKind k, int payload) { events_.push({t, k, seq_++, payload}); }

  void handle(const Event& e) {
    switch (e.kind) {
      case EventKind::FrameArrival:
        arrive(arrivals_[static_cast<std::size_t>(e.payload)]);
        break;
      case EventKind::TaskFinish:
        finish(e.payload);
        break;
      case EventKind::SchedulerDone:
        sched_busy_ = false;
        break;
    }
  }

  void make_ready(InstanceId id) {
    auto& t = st_.tasks[static_cast<std::size_t>(id)];
    t.state = TaskState::Ready;
    t.ready_time = st_.now;
    auto pos = std::upper_bound(st_.ready.begin(), st_.ready.end(), id, [&](InstanceId a, InstanceId b) {
      const auto& ta = st_.tasks[static_cast<std::size_t>(a)];
      const auto& tb = st_.tasks[static_cast<std::size_t>(b)];
      return ta.ready_time != tb.ready_time ? ta.ready_time < tb.ready_time : a < b;
    });
    st_.ready.insert(pos, id);
  }

  void arrive(const Arrival& a) {
    const Dfg& g = apps_[static_cast<std::size_t>(a.app)];
    const JobId job = static_cast<JobId>(st_.jobs.size());
    st_.jobs.push_back({job, a.app, st_.now, 0.0, static_cast<int>(g.nodes.size())});
    const InstanceId base = static_cast<InstanceId>(st_.tasks.size());
    for (const auto& n : g.nodes) {
      TaskInstance t;
      t.id = base + n.id;
      t.job = job;
      t.app = a.app;
      t.node = n.id;
      t.type = n.type;
      t.depth = n.depth;
      st_.tasks.push_back(std::move(t));
    }
    for (const auto& e : g.edges) {
      auto& dst = st_.tasks[static_cast<std::size_t>(base + e.dst)];
      dst.preds.push_back(base + e.src);
      dst.pred_bytes.push_back(e.bytes);
      ++dst.unfinished_preds;
      st_.tasks[static_cast<std::size_t>(base + e.src)].succs.push_back(base + e.dst);
    }
    for (const auto& n : g.nodes)
      if (st_.tasks[static_cast<std::size_t>(base + n.id)].unfinished_preds == 0)
        make_ready(base + n.id);
    st_.rate.add(g.frame_bits, st_.now);
  }

  void finish(InstanceId id) {
    auto& t = st_.tasks[static_cast<std::size_t>(id)];
    t.state = TaskState::Done;
    auto& job = st_.jobs[static_cast<std::size_t>(t.job)];
    if (--job.remaining == 0) job.finish = st_.now;
    const auto succs = t.succs;
    for (InstanceId s : succs) {
      auto& ts = st_.tasks[static_cast<std::size_t>(s)];
      if (--ts.unfinished_preds == 0) make_ready(s);
    }
  }

  void refresh_label() {
    if (st_.ready.empty()) return;
    const auto snap = take_snapshot(st_, plat_, apps_, lut_, layout_);
    cached_label_ = classify(*policy_.tree, snap.counters);
  }

  Path choose_path() const {
    switch (policy_.kind) {
      case PolicyKind::Lut:
        return Path::Fast;
      case PolicyKind::Etf:
        return Path::Slow;
      case PolicyKind::EtfIdeal:
        return Path::SlowIdeal;
      case PolicyKind::Das:
        return cached_label_ == PolicyTag::Fast ? Path::Fast : Path::Slow;
      case PolicyKind::Threshold:
        return st_.rate.estimate_mbps() < policy_.threshold_mbps ? Path::Fast : Path::Slow;
    }
    return Path::Fast;
  }

  void dispatch() {
    const Path path = choose_path();
    const bool das = policy_.kind == PolicyKind::Das;

    std::optional<ProbeRecord> probe;
    if (opt_.oracle_probe && path == Path::Fast) {
      probe.emplace();
      probe->decision = trace_.decisions.size();
      probe->counters = take_snapshot(st_, plat_, apps_, lut_, layout_).counters;
    }

    Invocation inv = invoke_scheduler(st_, plat_, path, oh_, lut_, das);
    if (probe) {
      const auto slow = invoke_scheduler(st_, plat_, Path::SlowIdeal, oh_, lut_);
      const auto& fast = inv.decisions.front();
      for (const auto& d : slow.decisions)
        if (d.task == fast.task) probe->agree = d.pe == fast.pe;
      trace_.probes.push_back(std::move(*probe));
    }

    const PolicyTag tag = path == Path::Fast ? PolicyTag::Fast : PolicyTag::Slow;
    const std::size_t inv_index = trace_.invocations.size();
    trace_.invocations.push_back({st_.now, tag, inv.queue_length, inv.latency, inv.energy});
    trace_.sched_energy += inv.energy;

    const TimeNs not_before = st_.now + inv.latency;
    const double n = static_cast<double>(inv.decisions.size());
    for (const auto& d : inv.decisions) {
      commit(d.task, d.pe, not_before);
      trace_.decisions.push_back({st_.now, tag, inv.queue_length, d.task, d.pe, inv.latency / n,
                                  inv.energy / n, inv_index});
    }
    sched_busy_ = true;
    push(not_before, EventKind::SchedulerDone, 0);
  }

  void commit(InstanceId id, PeId pe, TimeNs not_before) {
    auto& t = st_.tasks[static_cast<std::size_t>(id)];
    const ClusterId c = plat_.cluster_of(pe);
    TimeNs comm = 0;
    for (std::size_t k = 0; k < t.preds.size(); ++k)
      comm = std::max(comm, plat_.comm_cost(st_.tasks[static_cast<std::size_t>(t.preds[k])].pe, pe,
                                            t.pred_bytes[k]));
    // Inputs move only once the destination is known, i.e. after the invocation.
    const TimeNs start = std::max(st_.pe_busy_until[static_cast<std::size_t>(pe)], not_before + comm);
    const TimeNs exec = plat_.exec_time(t.type, c);
    t.pe = pe;
    t.start_time = start;
    t.finish_time = start + exec;
    t.state = TaskState::Running;
    st_.pe_busy_until[static_cast<std::size_t>(pe)] = t.finish_time;
    auto& hist = st_.pe_history[static_cast<std::size_t>(pe)];
    hist.push_back({start, t.finish_time});
    while (!hist.empty() && hist.front().finish < st_.now - st_.util_window) hist.pop_front();
    trace_.task_energy += plat_.energy_of(t.type, c, exec);
    st_.ready.erase(std::find(st_.ready.begin(), st_.ready.end(), id));
    push(t.finish_time, EventKind::TaskFinish, id);
  }

  const Platform& plat_;
  const AppLibrary& apps_;
  const PolicySpec& policy_;
  OverheadModel oh_;
  RunOptions opt_;
  LutPolicy lut_;
  FeatureLayout layout_;
  SystemState st_;
  std::vector<Arrival> arrivals_;
  std::priority_queue<Event, std::vector<Event>, EventLater> events_;
  std::uint64_t seq_ = 0;
  bool sched_busy_ = false;
  PolicyTag cached_label_ = PolicyTag::Fast;
  SimTrace trace_;
};

}  // namespace

SimTrace run(const Platform& platform, const AppLibrary& apps, const Scenario& sc,
             const PolicySpec& policy, const OverheadModel& overhead, const RunOptions& opt) {
  return Simulator(platform, apps, sc, policy, overhead, opt).run();
}

std::string trace_to_csv(const SimTrace& trace) {
  std::ostringstream os;
  os << "# policy " << trace.policy << "\n";
  os << "record,time_ns,policy,queue_length,task,pe,overhead_ns,overhead_nj,invocation\n";
  for (const auto& d : trace.decisions)
    os << "decision," << fmt_double(d.time) << ',' << tag_char(d.tag) << ',' << d.queue_length
       << ',' << d.task << ',' << d.pe << ',' << fmt_double(d.overhead_ns) << ','
       << fmt_double(d.overhead_nj) << ',' << d.invocation << '\n';
  os << "record,job,app,arrival_ns,finish_ns,latency_ns\n";
  for (const auto& j : trace.jobs)
    os << "job," << j.id << ',' << j.app << ',' << fmt_double(j.arrival) << ','
       << fmt_double(j.finish) << ',' << fmt_double(j.latency()) << '\n';
  return os.str();
}

}  // namespace das
