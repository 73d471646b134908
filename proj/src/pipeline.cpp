#include "das/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "das/io.hpp"

namespace das {

nlohmann::json RunManifest::to_json() const {
  return {{"schema", "manifest"},
          {"version", kSchemaVersion},
          {"platform", platform.generic_string()},
          {"apps", apps.generic_string()},
          {"suite", suite.generic_string()},
          {"tree", tree.generic_string()},
          {"overhead", overhead},
          {"seed", seed},
          {"out", out.generic_string()},
          {"workloads", workloads},
          {"rates", rates},
          {"suite_options",
           {{"rate_count", suite_options.rate_count},
            {"rate_min_mbps", suite_options.rate_min_mbps},
            {"rate_max_mbps", suite_options.rate_max_mbps},
            {"frame_count", suite_options.frame_count},
            {"arrivals", suite_options.arrivals == ArrivalModel::Periodic ? "periodic" : "poisson"}}}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    check_schema(j, "manifest");
    m.platform = j.value("platform", std::string{});
    m.apps = j.value("apps", std::string{});
    m.suite = j.value("suite", std::string{});
    m.tree = j.value("tree", std::string{});
    m.overhead = j.value("overhead", nlohmann::json::object());
    m.seed = j.value("seed", std::uint64_t{1});
    m.out = j.value("out", std::string("out"));
    m.workloads = j.value("workloads", 40);
    m.rates = j.value("rates", std::vector<double>{});
    if (j.contains("suite_options")) {
      const auto& o = j.at("suite_options");
      m.suite_options.rate_count = o.value("rate_count", m.suite_options.rate_count);
      m.suite_options.rate_min_mbps = o.value("rate_min_mbps", m.suite_options.rate_min_mbps);
      m.suite_options.rate_max_mbps = o.value("rate_max_mbps", m.suite_options.rate_max_mbps);
      m.suite_options.frame_count = o.value("frame_count", m.suite_options.frame_count);
      m.suite_options.arrivals = o.value("arrivals", std::string("periodic")) == "poisson"
                                     ? ArrivalModel::Poisson
                                     : ArrivalModel::Periodic;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

void RunManifest::check_files() const {
  if (platform.empty()) throw Error("manifest: no platform file");
  for (const auto* p : {&platform, &apps, &suite, &tree})
    if (!p->empty() && !std::filesystem::exists(*p))
      throw Error("manifest: file not found: " + p->string());
}

std::string Context::preamble() const {
  return "# manifest " + fingerprint + " seed " + std::to_string(manifest.seed) + "\n";
}

Context load_context(const RunManifest& m) {
  m.check_files();
  // the output location does not change results, so it stays out of the fingerprint
  auto fj = m.to_json();
  fj.erase("out");
  std::string fp = fj.dump();
  for (const auto* p : {&m.platform, &m.apps, &m.suite, &m.tree})
    if (!p->empty()) fp += read_text(*p);

  Platform platform = load_platform(m.platform);
  AppLibrary apps = m.apps.empty() ? synth_app_library() : load_library(m.apps);
  check_library(apps, platform);
  Suite suite = m.suite.empty() ? workload_suite(m.workloads, m.seed, m.suite_options, apps.size())
                                : suite_from_json(read_json(m.suite));
  if (!m.rates.empty()) suite.rates_mbps = m.rates;
  for (double r : suite.rates_mbps)
    if (!(r > 0) || !std::isfinite(r)) throw Error("data rates must be positive");
  for (const auto& w : suite.workloads) mean_frame_bits(w.mix, apps);
  OverheadModel oh = overhead_from_json(m.overhead);
  return Context{m, std::move(platform), std::move(apps), std::move(suite), oh, hex64(fnv1a64(fp))};
}

unsigned worker_count() {
  if (const char* env = std::getenv("DAS_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::vector<std::exception_ptr> errors(n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<SweepRow> run_sweep(const Context& ctx, const std::vector<PolicySpec>& policies,
                                const std::vector<double>& rates, unsigned workers) {
  const auto& wl = ctx.suite.workloads;
  Suite s = ctx.suite;
  if (!rates.empty()) s.rates_mbps = rates;
  const std::size_t R = s.rates_mbps.size();
  const std::size_t P = policies.size();
  std::vector<SweepRow> rows(wl.size() * R * P);
  parallel_for(rows.size(), workers, [&](std::size_t i) {
    const std::size_t w = i / (R * P);
    const std::size_t r = (i / P) % R;
    const std::size_t p = i % P;
    const Scenario sc = s.point(w, r);
    try {
      const SimTrace tr = run(ctx.platform, ctx.apps, sc, policies[p], ctx.overhead);
      rows[i] = {wl[w].name, s.rates_mbps[r], policies[p].name, reduce(tr)};
    } catch (const Error& e) {
      throw Error("run " + wl[w].name + " @ " + fmt_double(s.rates_mbps[r]) + " Mbps / " +
                  policies[p].name + " failed: " + e.what());
    }
  });
  return rows;
}

OracleResult run_oracle(const Context& ctx, TargetMetric metric, unsigned workers) {
  const auto points = ctx.suite.points();
  std::vector<LabeledRun> runs(points.size());
  parallel_for(points.size(), workers, [&](std::size_t i) {
    Scenario sc = points[i];
    sc.name = sc.name + "@" + fmt_double(sc.data_rate_mbps);
    try {
      runs[i] = label_scenario(ctx.platform, ctx.apps, sc, ctx.overhead, metric, static_cast<int>(i));
    } catch (const Error& e) {
      throw Error("oracle run " + sc.name + " failed: " + e.what());
    }
  });
  OracleResult out;
  out.runs = runs.size();
  for (auto& r : runs) {
    out.slow_wins += r.slow_won;
    out.pending += r.pending;
    for (auto& s : r.samples) out.samples.push_back(std::move(s));
  }
  return out;
}

double fit_threshold(const std::vector<SweepRow>& rows) {
  std::map<double, std::pair<double, double>> lut, etf;  // rate -> (sum, count)
  for (const auto& r : rows) {
    auto* m = r.policy == "lut" ? &lut : r.policy == "etf" ? &etf : nullptr;
    if (!m) continue;
    auto& [sum, cnt] = (*m)[r.rate_mbps];
    sum += r.m.avg_job_exec_time;
    cnt += 1;
  }
  if (lut.empty() || etf.empty()) throw Error("threshold fit needs lut and etf sweep rows");
  for (const auto& [rate, e] : etf) {
    const auto it = lut.find(rate);
    if (it == lut.end()) continue;
    if (e.first / e.second < it->second.first / it->second.second) return rate;
  }
  return std::numeric_limits<double>::infinity();
}

std::string PipelineReport::to_text() const {
  std::ostringstream os;
  os << "samples: " << samples << " (train " << train_samples << ", held-out " << test_samples
     << "), S fraction " << fmt_double(s_fraction) << "\n";
  os << "feature ranking (Gini importance):\n";
  for (std::size_t i = 0; i < ranking.size() && i < 10; ++i) {
    const auto& r = ranking[i];
    os << "  " << i + 1 << ". "
       << (static_cast<std::size_t>(r.feature) < counter_names.size() ? counter_names[static_cast<std::size_t>(r.feature)]
                                                                       : std::to_string(r.feature))
       << " [" << r.feature << "] " << fmt_double(r.importance) << "\n";
  }
  os << "selected features:";
  for (const auto& n : tree.feature_names) os << ' ' << n;
  os << "\ntree depth " << tree.depth() << ", nodes " << tree.nodes.size() << "\n";
  os << "train accuracy " << fmt_double(train_accuracy) << "\n";
  os << "held-out accuracy " << fmt_double(test_accuracy) << "\n";
  os << "held-out accuracy, top feature only " << fmt_double(single_feature_test_accuracy) << "\n";
  return os.str();
}

PipelineReport train_pipeline(const std::vector<TrainingSample>& samples,
                              const std::vector<std::string>& counter_names,
                              const PipelineOptions& opt, std::uint64_t seed) {
  PipelineReport rep;
  rep.counter_names = counter_names;
  rep.samples = samples.size();
  std::size_t s_count = 0;
  for (const auto& s : samples) s_count += s.label == Label::S;
  rep.s_fraction = samples.empty() ? 0.0 : static_cast<double>(s_count) / static_cast<double>(samples.size());

  std::vector<TrainingSample> train, test;
  split_by_run(samples, opt.train_fraction, seed, train, test);
  rep.train_samples = train.size();
  rep.test_samples = test.size();
  if (train.empty()) throw Error("pipeline: training split is empty");

  rep.ranking = rank_features(train);
  std::vector<int> top;
  for (int k = 0; k < opt.top_k && k < static_cast<int>(rep.ranking.size()); ++k)
    top.push_back(rep.ranking[static_cast<std::size_t>(k)].feature);
  rep.tree = train_tree(train, opt.depth, top, counter_names);
  rep.train_accuracy = accuracy(rep.tree, train);
  rep.test_accuracy = accuracy(rep.tree, test.empty() ? train : test);
  const std::vector<int> first{top.front()};
  rep.single_feature_tree = train_tree(train, opt.depth, first, counter_names);
  rep.single_feature_test_accuracy = accuracy(rep.single_feature_tree, test.empty() ? train : test);
  return rep;
}

}  // namespace das
