#include "das/workload.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "das/io.hpp"

namespace das {

std::vector<std::vector<std::size_t>> Dfg::in_edges() const {
  std::vector<std::vector<std::size_t>> in(nodes.size());
  for (std::size_t e = 0; e < edges.size(); ++e) in.at(edges[e].dst).push_back(e);
  return in;
}

std::vector<std::vector<std::size_t>> Dfg::out_edges() const {
  std::vector<std::vector<std::size_t>> out(nodes.size());
  for (std::size_t e = 0; e < edges.size(); ++e) out.at(edges[e].src).push_back(e);
  return out;
}

std::vector<int> compute_depths(const Dfg& dfg) {
  const std::size_t n = dfg.nodes.size();
  for (std::size_t i = 0; i < n; ++i)
    if (dfg.nodes[i].id != static_cast<NodeId>(i))
      throw Error("app " + std::to_string(dfg.app_id) + ": node ids must be dense 0..N-1");
  std::vector<int> indeg(n, 0);
  std::vector<std::vector<NodeId>> succ(n);
  for (const auto& e : dfg.edges) {
    if (e.src < 0 || e.dst < 0 || static_cast<std::size_t>(e.src) >= n ||
        static_cast<std::size_t>(e.dst) >= n)
      throw Error("app " + std::to_string(dfg.app_id) + ": edge references unknown node");
    if (e.bytes < 0) throw Error("app " + std::to_string(dfg.app_id) + ": negative edge bytes");
    succ[e.src].push_back(e.dst);
    ++indeg[e.dst];
  }
  // Kahn's algorithm; depth relaxes along the topological order.
  std::vector<int> depth(n, 0);
  std::vector<NodeId> frontier;
  for (std::size_t i = 0; i < n; ++i)
    if (indeg[i] == 0) frontier.push_back(static_cast<NodeId>(i));
  std::size_t visited = 0;
  while (!frontier.empty()) {
    const NodeId u = frontier.back();
    frontier.pop_back();
    ++visited;
    for (NodeId v : succ[u]) {
      depth[v] = std::max(depth[v], depth[u] + 1);
      if (--indeg[v] == 0) frontier.push_back(v);
    }
  }
  if (visited != n) throw Error("app " + std::to_string(dfg.app_id) + ": cycle detected");
  return depth;
}

void finalize_dfg(Dfg& dfg) {
  if (dfg.nodes.empty()) throw Error("app " + std::to_string(dfg.app_id) + ": no nodes");
  if (!(dfg.frame_bits > 0))
    throw Error("app " + std::to_string(dfg.app_id) + ": frame_bits must be positive");
  const auto depth = compute_depths(dfg);
  for (std::size_t i = 0; i < dfg.nodes.size(); ++i) dfg.nodes[i].depth = depth[i];
}

namespace {

// Task type ids shared with config/platform.json.
enum Ty : TaskTypeId {
  kScramble = 0,
  kFft = 1,
  kIfft = 2,
  kFir = 3,
  kEncode = 4,
  kDecode = 5,
  kMatmul = 6,
  kCorrelate = 7,
  kEqualize = 8,
  kDemap = 9,
};

struct Builder {
  Dfg g;
  NodeId add(TaskTypeId t) {
    const NodeId id = static_cast<NodeId>(g.nodes.size());
    g.nodes.push_back({id, t, 0});
    return id;
  }
  void edge(NodeId a, NodeId b, double bytes) { g.edges.push_back({a, b, bytes}); }
  NodeId chain(NodeId from, std::initializer_list<TaskTypeId> types, double bytes) {
    for (TaskTypeId t : types) {
      const NodeId n = add(t);
      edge(from, n, bytes);
      from = n;
    }
    return from;
  }
};

Dfg make_tx_chain() {
  Builder b;
  b.g = {0, "tx_chain", 0, 800, {}, {}};
  const NodeId s = b.add(kScramble);
  b.chain(s, {kEncode, kScramble, kDemap, kIfft, kScramble, kFir, kScramble}, 512);
  return b.g;
}

Dfg make_range_forkjoin() {
  Builder b;
  b.g = {1, "range_forkjoin", 1, 960, {}, {}};
  const NodeId src = b.add(kScramble);
  const NodeId corr = b.add(kCorrelate);
  for (int i = 0; i < 2; ++i) {
    const NodeId f = b.add(kFft);
    const NodeId eq = b.add(kEqualize);
    b.edge(src, f, 1024);
    b.edge(f, eq, 1024);
    b.edge(eq, corr, 512);
  }
  b.chain(corr, {kDemap, kScramble}, 256);
  return b.g;
}

Dfg make_wide_fanout() {
  Builder b;
  b.g = {2, "wide_fanout", 1, 1800, {}, {}};
  const NodeId src = b.add(kScramble);
  const NodeId sink = b.add(kScramble);
  for (int k = 0; k < 3; ++k) {
    const NodeId mm = b.add(kMatmul);
    for (int i = 0; i < 2; ++i) {
      const NodeId f = b.add(kFir);
      const NodeId eq = b.add(kEqualize);
      b.edge(src, f, 256);
      b.edge(f, eq, 256);
      b.edge(eq, mm, 256);
    }
    b.edge(mm, sink, 128);
  }
  return b.g;
}

Dfg make_rx_deep_chain() {
  Builder b;
  b.g = {3, "rx_deep_chain", 2, 1200, {}, {}};
  const NodeId s = b.add(kFir);
  b.chain(s, {kFft, kEqualize, kDemap, kDecode, kScramble, kFir, kFft, kEqualize, kDemap, kDecode,
              kScramble},
          512);
  return b.g;
}

Dfg make_mixed() {
  Builder b;
  b.g = {4, "mixed", 2, 1800, {}, {}};
  const NodeId src = b.add(kScramble);
  // three parallel lanes that meet at a correlator, then a decode tail
  const NodeId lane_a = b.chain(src, {kFir, kFft, kEqualize, kDemap}, 512);
  const NodeId lane_b = b.chain(src, {kFir, kFft, kEqualize, kDemap}, 512);
  const NodeId lane_c = b.chain(src, {kEncode, kIfft, kScramble}, 512);
  const NodeId corr = b.add(kCorrelate);
  b.edge(lane_a, corr, 512);
  b.edge(lane_b, corr, 512);
  b.edge(lane_c, corr, 512);
  const NodeId d0 = b.add(kDecode);
  const NodeId d1 = b.add(kDecode);
  b.edge(corr, d0, 256);
  b.edge(corr, d1, 256);
  const NodeId mm = b.add(kMatmul);
  b.edge(d0, mm, 256);
  b.edge(d1, mm, 256);
  b.chain(mm, {kDemap, kScramble, kEqualize, kScramble}, 256);
  return b.g;
}

}  // namespace

AppLibrary synth_app_library() {
  AppLibrary lib{make_tx_chain(), make_range_forkjoin(), make_wide_fanout(),
                 make_rx_deep_chain(), make_mixed()};
  for (auto& g : lib) finalize_dfg(g);
  return lib;
}

void check_library(const AppLibrary& apps, const Platform& platform) {
  std::vector<std::string> errs;
  for (std::size_t i = 0; i < apps.size(); ++i) {
    const auto& g = apps[i];
    if (g.app_id != static_cast<AppId>(i))
      errs.push_back("app ids must be dense 0..A-1 (found " + std::to_string(g.app_id) + ")");
    for (const auto& n : g.nodes)
      if (!platform.knows_type(n.type))
        errs.push_back("app " + std::to_string(g.app_id) + " node " + std::to_string(n.id) +
                       " uses unknown task type " + std::to_string(n.type));
  }
  if (!errs.empty()) throw ValidationError(std::move(errs));
}

nlohmann::json library_to_json(const AppLibrary& apps) {
  nlohmann::json j;
  j["schema"] = "apps";
  j["version"] = kSchemaVersion;
  j["apps"] = nlohmann::json::array();
  for (const auto& g : apps) {
    nlohmann::json ja{{"id", g.app_id},
                      {"name", g.name},
                      {"category", g.category},
                      {"frame_bits", g.frame_bits},
                      {"nodes", nlohmann::json::array()},
                      {"edges", nlohmann::json::array()}};
    for (const auto& n : g.nodes) ja["nodes"].push_back({{"id", n.id}, {"type", n.type}});
    for (const auto& e : g.edges)
      ja["edges"].push_back({{"src", e.src}, {"dst", e.dst}, {"bytes", e.bytes}});
    j["apps"].push_back(std::move(ja));
  }
  return j;
}

AppLibrary library_from_json(const nlohmann::json& j) {
  AppLibrary lib;
  try {
    check_schema(j, "apps");
    for (const auto& ja : j.at("apps")) {
      Dfg g;
      g.app_id = ja.at("id").get<int>();
      g.name = ja.value("name", std::string{});
      g.category = ja.value("category", 0);
      g.frame_bits = ja.at("frame_bits").get<double>();
      for (const auto& n : ja.at("nodes"))
        g.nodes.push_back({n.at("id").get<int>(), n.at("type").get<int>(), 0});
      for (const auto& e : ja.at("edges"))
        g.edges.push_back({e.at("src").get<int>(), e.at("dst").get<int>(), e.at("bytes").get<double>()});
      std::sort(g.nodes.begin(), g.nodes.end(),
                [](const DfgNode& a, const DfgNode& b) { return a.id < b.id; });
      finalize_dfg(g);
      lib.push_back(std::move(g));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed app library: ") + e.what());
  }
  std::sort(lib.begin(), lib.end(), [](const Dfg& a, const Dfg& b) { return a.app_id < b.app_id; });
  return lib;
}

AppLibrary load_library(const std::filesystem::path& path) {
  return library_from_json(read_json(path));
}

namespace {

void check_mix(const std::vector<MixEntry>& mix, const AppLibrary& apps) {
  if (mix.empty()) throw Error("scenario mix is empty");
  double total = 0;
  for (const auto& m : mix) {
    if (m.app < 0 || static_cast<std::size_t>(m.app) >= apps.size())
      throw Error("scenario mix references unknown app " + std::to_string(m.app));
    if (!(m.weight >= 0)) throw Error("scenario mix has a negative weight");
    total += m.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error("scenario mix weights must sum to 1");
}

}  // namespace

double mean_frame_bits(const std::vector<MixEntry>& mix, const AppLibrary& apps) {
  check_mix(mix, apps);
  double bits = 0;
  for (const auto& m : mix) bits += m.weight * apps[m.app].frame_bits;
  return bits;
}

std::vector<Arrival> generate_arrivals(const Scenario& sc, const AppLibrary& apps) {
  const double bits = mean_frame_bits(sc.mix, apps);
  if (!(sc.data_rate_mbps > 0)) throw Error("scenario data rate must be positive");
  if (sc.frame_count < 1) throw Error("scenario frame_count must be >= 1");
  // bits / (Mbit/s) = microseconds
  const TimeNs mean_gap = bits / sc.data_rate_mbps * 1e3;

  Rng rng(sc.seed);
  std::vector<Arrival> out;
  out.reserve(static_cast<std::size_t>(sc.frame_count));
  TimeNs t = 0;
  for (int k = 0; k < sc.frame_count; ++k) {
    const double u = rng.uniform();
    double acc = 0;
    AppId app = sc.mix.back().app;
    for (const auto& m : sc.mix) {
      acc += m.weight;
      if (u < acc) {
        app = m.app;
        break;
      }
    }
    if (k > 0)
      t += sc.arrivals == ArrivalModel::Periodic ? mean_gap : rng.exponential(mean_gap);
    out.push_back({t, app});
  }
  return out;
}

std::vector<double> rate_ladder(int count, double lo, double hi) {
  if (count < 1 || !(lo > 0) || !(hi >= lo)) throw Error("invalid rate ladder");
  std::vector<double> out;
  if (count == 1) return {lo};
  const double ratio = std::pow(hi / lo, 1.0 / (count - 1));
  for (int i = 0; i < count; ++i) out.push_back(i == count - 1 ? hi : lo * std::pow(ratio, i));
  return out;
}

Scenario Suite::point(std::size_t w, std::size_t r) const {
  Scenario sc = workloads.at(w);
  sc.data_rate_mbps = rates_mbps.at(r);
  sc.seed = workloads[w].seed * 0x9E3779B97F4A7C15ULL + (r + 1) * 0xD1B54A32D192ED03ULL;
  return sc;
}

std::vector<Scenario> Suite::points() const {
  std::vector<Scenario> out;
  for (std::size_t w = 0; w < workloads.size(); ++w)
    for (std::size_t r = 0; r < rates_mbps.size(); ++r) out.push_back(point(w, r));
  return out;
}

Suite workload_suite(int count, std::uint64_t seed, const SuiteOptions& opt,
                     std::size_t app_count) {
  if (count < 1) throw Error("workload count must be >= 1");
  if (app_count < 1) throw Error("app library is empty");
  Suite s;
  s.rates_mbps = rate_ladder(opt.rate_count, opt.rate_min_mbps, opt.rate_max_mbps);
  Rng rng(seed);
  const int apps = static_cast<int>(app_count);

  auto make = [&](std::vector<MixEntry> mix) {
    Scenario sc;
    sc.name = "w" + std::to_string(s.workloads.size());
    double total = 0;
    for (const auto& m : mix) total += m.weight;
    for (auto& m : mix) m.weight /= total;
    // exact unit sum: absorb rounding into the last entry
    double head = 0;
    for (std::size_t i = 0; i + 1 < mix.size(); ++i) head += mix[i].weight;
    mix.back().weight = 1.0 - head;
    sc.mix = std::move(mix);
    sc.frame_count = opt.frame_count;
    sc.arrivals = opt.arrivals;
    sc.seed = rng.next();
    s.workloads.push_back(std::move(sc));
  };

  const bool want_uniform = count > 1 && apps > 1;
  const int singles = std::min(count - (want_uniform ? 1 : 0), apps);
  for (int a = 0; a < singles; ++a) make({{a, 1.0}});
  while (static_cast<int>(s.workloads.size()) < count - (want_uniform ? 1 : 0)) {
    // random subset of 2..apps applications with random ratios
    const int k = 2 + static_cast<int>(rng.uniform() * (apps - 1));
    std::vector<int> ids(apps);
    std::iota(ids.begin(), ids.end(), 0);
    for (int i = 0; i < k; ++i) {
      const int j = i + static_cast<int>(rng.uniform() * (apps - i));
      std::swap(ids[i], ids[j]);
    }
    std::sort(ids.begin(), ids.begin() + k);
    std::vector<MixEntry> mix;
    for (int i = 0; i < k; ++i) mix.push_back({ids[i], 0.2 + 0.8 * rng.uniform()});
    make(std::move(mix));
  }
  if (want_uniform) {
    std::vector<MixEntry> mix;
    for (int a = 0; a < apps; ++a) mix.push_back({a, 1.0});
    make(std::move(mix));
  }
  return s;
}

nlohmann::json suite_to_json(const Suite& s) {
  nlohmann::json j;
  j["schema"] = "suite";
  j["version"] = kSchemaVersion;
  j["rates_mbps"] = s.rates_mbps;
  j["workloads"] = nlohmann::json::array();
  for (const auto& w : s.workloads) {
    nlohmann::json jw{{"name", w.name},
                      {"frame_count", w.frame_count},
                      {"seed", w.seed},
                      {"arrivals", w.arrivals == ArrivalModel::Periodic ? "periodic" : "poisson"},
                      {"mix", nlohmann::json::array()}};
    for (const auto& m : w.mix) jw["mix"].push_back({{"app", m.app}, {"weight", m.weight}});
    j["workloads"].push_back(std::move(jw));
  }
  return j;
}

Suite suite_from_json(const nlohmann::json& j) {
  Suite s;
  try {
    check_schema(j, "suite");
    s.rates_mbps = j.at("rates_mbps").get<std::vector<double>>();
    for (const auto& jw : j.at("workloads")) {
      Scenario sc;
      sc.name = jw.at("name").get<std::string>();
      sc.frame_count = jw.at("frame_count").get<int>();
      sc.seed = jw.at("seed").get<std::uint64_t>();
      const auto arr = jw.value("arrivals", std::string("periodic"));
      if (arr == "periodic") sc.arrivals = ArrivalModel::Periodic;
      else if (arr == "poisson") sc.arrivals = ArrivalModel::Poisson;
      else throw Error("unknown arrival model '" + arr + "'");
      for (const auto& m : jw.at("mix"))
        sc.mix.push_back({m.at("app").get<int>(), m.at("weight").get<double>()});
      s.workloads.push_back(std::move(sc));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed suite: ") + e.what());
  }
  if (s.rates_mbps.empty()) throw Error("suite has no rates");
  return s;
}

}  // namespace das
