#include <filesystem>
#include <set>

#include "das/classifier.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace das;

namespace {

TrainingSample sample(std::vector<double> x, bool s, int run = 0) {
  TrainingSample t;
  t.features = std::move(x);
  t.label = s ? Label::S : Label::F;
  t.run = run;
  t.scenario = "r" + std::to_string(run);
  return t;
}

std::vector<TrainingSample> planted(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TrainingSample> out;
  for (int i = 0; i < n; ++i) {
    const double a = rng.uniform();
    out.push_back(sample({a, rng.uniform(), 3.0}, a > 0.6, i % 10));
  }
  return out;
}

std::vector<TrainingSample> noisy(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TrainingSample> out;
  for (int i = 0; i < n; ++i) {
    std::vector<double> x{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
    const bool s = (x[0] + 0.5 * x[1] > 0.8) != (rng.uniform() < 0.15);
    out.push_back(sample(std::move(x), s, i % 7));
  }
  return out;
}

const std::vector<std::string> kNames{"a", "b", "c", "d"};

}  // namespace

TEST_CASE("planted signal ranks first; constant feature gets nothing") {
  const auto data = planted(2000, 1);
  const auto rank = rank_features(data);
  REQUIRE(rank.size() == 3);
  CHECK(rank[0].feature == 0);
  CHECK(rank[0].importance > 0.99);
  for (const auto& r : rank)
    if (r.feature == 2) CHECK(r.importance == 0.0);
  double total = 0;
  for (const auto& r : rank) total += r.importance;
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("ranking needs both classes") {
  std::vector<TrainingSample> one{sample({1}, false), sample({2}, false)};
  CHECK_THROWS_AS(rank_features(one), Error);
  CHECK_THROWS_AS(rank_features(std::vector<TrainingSample>{}), Error);
}

TEST_CASE("separable 1-D data gives a depth-1 perfect tree") {
  std::vector<TrainingSample> d;
  for (int i = 0; i < 20; ++i) d.push_back(sample({static_cast<double>(i)}, i >= 12));
  const std::vector<int> f{0};
  const auto t = train_tree(d, 3, f, {"x"});
  CHECK(t.depth() == 1);
  CHECK(accuracy(t, d) == 1.0);
  CHECK(t.nodes[0].threshold == 11.5);
  CHECK(t.feature_names == std::vector<std::string>{"x"});
}

TEST_CASE("training rejects bad input") {
  const std::vector<int> f{0};
  CHECK_THROWS_AS(train_tree(std::vector<TrainingSample>{}, 2, f, {}), Error);
  std::vector<TrainingSample> d{sample({1}, true), sample({0}, false)};
  CHECK_THROWS_AS(train_tree(d, 0, f, {}), Error);
  d[0].label = Label::Pending;
  CHECK_THROWS_AS(train_tree(d, 1, f, {}), Error);
}

TEST_CASE("majority ties label F") {
  std::vector<TrainingSample> d{sample({1}, true), sample({1}, false)};
  const std::vector<int> f{0};
  const auto t = train_tree(d, 2, f, {});
  CHECK(t.nodes.size() == 1);
  CHECK(t.nodes[0].label == PolicyTag::Fast);
}

TEST_CASE("classify: constant trees and the boundary rule") {
  const std::vector<double> x{1, 2, 3};
  CHECK(classify(DecisionTree::constant(PolicyTag::Slow), x) == PolicyTag::Slow);
  CHECK(classify(DecisionTree::constant(PolicyTag::Fast), x) == PolicyTag::Fast);

  DecisionTree t;
  t.max_depth = 2;
  t.nodes = {{1, 2.0, 1, 2, PolicyTag::Fast},
             {-1, 0, -1, -1, PolicyTag::Fast},
             {2, 5.0, 3, 4, PolicyTag::Fast},
             {-1, 0, -1, -1, PolicyTag::Slow},
             {-1, 0, -1, -1, PolicyTag::Fast}};
  CHECK_NOTHROW(t.validate());
  CHECK(classify(t, std::vector<double>{0, 2.0, 4.0}) == PolicyTag::Slow);  // equal goes right
  CHECK(classify(t, std::vector<double>{0, 1.9, 4.0}) == PolicyTag::Fast);
  CHECK(classify(t, std::vector<double>{0, 2.0, 5.0}) == PolicyTag::Fast);
  CHECK_THROWS_AS(classify(t, std::vector<double>{0, 3.0}), Error);
}

TEST_CASE("tree files round-trip and stay small") {
  const auto data = noisy(3000, 2);
  const std::vector<int> f{0, 1};
  const auto t = train_tree(data, 2, f, kNames);
  const auto path = std::filesystem::temp_directory_path() / "das_tree_roundtrip.json";
  save_tree(t, path);
  CHECK(load_tree(path) == t);
  CHECK(std::filesystem::file_size(path) < 1024);
  std::filesystem::remove(path);

  const std::string text = tree_to_text(t);
  CHECK_THROWS_AS(tree_from_text(text.substr(0, text.size() / 2)), Error);
  CHECK_THROWS_AS(tree_from_text(""), Error);
  std::string wrong = text;
  wrong.replace(wrong.find("das-tree"), 8, "das-tref");
  CHECK_THROWS_AS(tree_from_text(wrong), Error);
}

TEST_CASE("deeper trees never fit the training data worse") {
  const auto data = noisy(4000, 3);
  const std::vector<int> f{0, 1, 2, 3};
  double prev = 0;
  for (int d = 1; d <= 6; ++d) {
    const double acc = accuracy(train_tree(data, d, f, kNames), data);
    CHECK(acc >= prev);
    prev = acc;
  }
}

TEST_CASE("training is deterministic and ignores unused features") {
  auto data = noisy(2000, 4);
  const std::vector<int> f{0, 1};
  const auto a = train_tree(data, 2, f, kNames);
  CHECK(train_tree(data, 2, f, kNames) == a);
  for (auto& s : data) {
    s.features[2] = std::exp(3 * s.features[2]);
    s.features[3] = -7 + 2 * s.features[3];
  }
  const auto b = train_tree(data, 2, f, kNames);
  CHECK(b == a);
  for (const auto& s : data)
    CHECK(classify(a, s.features) == classify(b, s.features));
}

TEST_CASE("split by run keeps runs whole") {
  const auto data = noisy(700, 5);  // runs 0..6
  std::vector<TrainingSample> train, test;
  split_by_run(data, 0.7, 9, train, test);
  CHECK(train.size() + test.size() == data.size());
  std::set<int> tr, te;
  for (const auto& s : train) tr.insert(s.run);
  for (const auto& s : test) te.insert(s.run);
  CHECK(tr.size() == 5);
  CHECK(te.size() == 2);
  for (int r : tr) CHECK(te.count(r) == 0);
}

TEST_CASE("sample csv round trip") {
  const auto data = noisy(50, 6);
  const std::string csv = samples_to_csv(data, kNames, "# header\n");
  std::vector<std::string> names;
  const auto back = samples_from_csv(csv, &names);
  CHECK(names == kNames);
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back[i].features == data[i].features);
    CHECK(back[i].label == data[i].label);
    CHECK(back[i].run == data[i].run);
  }
  CHECK_THROWS_AS(samples_from_csv("run,scenario,decision,label,a\n1,x,0,F\n"), Error);
}

TEST_CASE("oracle on a one-PE platform labels everything F") {
  PlatformConfig cfg;
  cfg.clusters = {{0, "cpu", ClusterKind::Cpu, 1, {0, 0}}};
  cfg.profiles = {{0, "t", {{0, 50, 100}}}};
  const Platform p = validate_platform(cfg);
  Dfg g;
  g.name = "fork";
  g.frame_bits = 4000;
  g.nodes = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  g.edges = {{0, 1, 8}, {0, 2, 8}};
  finalize_dfg(g);
  Scenario sc;
  sc.name = "solo";
  sc.mix = {{0, 1.0}};
  sc.data_rate_mbps = 100;
  sc.frame_count = 20;
  const auto r = label_scenario(p, {g}, sc, OverheadModel{}, TargetMetric::ExecTime, 0);
  CHECK(r.pending == 0);
  CHECK(r.samples.size() == 60);
  for (const auto& s : r.samples) CHECK(s.label == Label::F);
}

TEST_CASE("pending labels resolve uniformly per scenario") {
  const Platform p = dtest::default_platform();
  const AppLibrary apps = synth_app_library();
  const Suite s = workload_suite(5, 1);
  bool saw_fast_win = false, saw_slow_win = false;
  for (std::size_t w = 0; w < 5; ++w)
    for (std::size_t r : {0, 13}) {
      const auto run = label_scenario(p, apps, s.point(w, r), OverheadModel{}, TargetMetric::ExecTime,
                                      static_cast<int>(w));
      std::size_t s_count = 0;
      for (const auto& x : run.samples) {
        CHECK(x.label != Label::Pending);
        s_count += x.label == Label::S;
      }
      CHECK(run.slow_won == (run.slow.avg_job_exec_time < run.fast.avg_job_exec_time));
      CHECK(s_count == (run.slow_won ? run.pending : 0));
      (run.slow_won ? saw_slow_win : saw_fast_win) = true;
    }
  CHECK(saw_fast_win);
  CHECK(saw_slow_win);
}

TEST_CASE("metric choice changes the resolution rule") {
  CHECK(parse_metric("exec") == TargetMetric::ExecTime);
  CHECK(parse_metric("edp") == TargetMetric::Edp);
  CHECK_THROWS_AS(parse_metric("power"), Error);
  const Platform p = dtest::default_platform();
  const AppLibrary apps = synth_app_library();
  const auto run = label_scenario(p, apps, workload_suite(5, 1).point(4, 13), OverheadModel{},
                                  TargetMetric::Edp, 0);
  CHECK(run.slow_won == (run.slow.edp < run.fast.edp));
}
