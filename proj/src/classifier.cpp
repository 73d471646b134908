#include "das/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "das/io.hpp"

namespace das {

char label_char(Label l) {
  switch (l) {
    case Label::F:
      return 'F';
    case Label::S:
      return 'S';
    case Label::Pending:
      return 'P';
  }
  return '?';
}

TargetMetric parse_metric(const std::string& s) {
  if (s == "exec") return TargetMetric::ExecTime;
  if (s == "edp") return TargetMetric::Edp;
  throw Error("unknown metric '" + s + "' (expected exec|edp)");
}

LabeledRun label_scenario(const Platform& platform, const AppLibrary& apps, const Scenario& sc,
                          const OverheadModel& overhead, TargetMetric metric, int run_id,
                          const RunOptions& opt) {
  RunOptions probe_opt = opt;
  probe_opt.oracle_probe = true;
  const SimTrace first = run(platform, apps, sc, PolicySpec::lut(), overhead, probe_opt);
  RunOptions plain = opt;
  plain.oracle_probe = false;
  const SimTrace second = run(platform, apps, sc, PolicySpec::etf(), overhead, plain);

  LabeledRun out;
  out.fast = reduce(first);
  out.slow = reduce(second);
  out.slow_won = metric == TargetMetric::ExecTime
                     ? out.slow.avg_job_exec_time < out.fast.avg_job_exec_time
                     : out.slow.edp < out.fast.edp;

  out.samples.reserve(first.probes.size());
  for (const auto& p : first.probes) {
    TrainingSample s;
    s.features = p.counters;
    s.label = p.agree ? Label::F : Label::Pending;
    s.scenario = sc.name;
    s.run = run_id;
    s.decision = p.decision;
    if (!p.agree) ++out.pending;
    out.samples.push_back(std::move(s));
  }
  const Label resolved = out.slow_won ? Label::S : Label::F;
  for (auto& s : out.samples)
    if (s.label == Label::Pending) s.label = resolved;
  return out;
}

namespace {

struct Counts {
  double f = 0;
  double s = 0;
  double n() const { return f + s; }
  /// n * gini impurity
  double weighted_gini() const { return n() > 0 ? n() - (f * f + s * s) / n() : 0.0; }
};

class TreeGrower {
 public:
  TreeGrower(std::span<const TrainingSample> samples, std::span<const int> features, int max_depth,
             std::vector<double>* importance)
      : samples_(samples), features_(features), max_depth_(max_depth), importance_(importance) {}

  DecisionTree grow() {
    std::vector<std::size_t> idx(samples_.size());
    std::iota(idx.begin(), idx.end(), 0);
    tree_.max_depth = max_depth_;
    build(idx, 0);
    return std::move(tree_);
  }

 private:
  bool is_s(std::size_t i) const { return samples_[i].label == Label::S; }

  int build(const std::vector<std::size_t>& idx, int depth) {
    Counts c;
    for (auto i : idx) (is_s(i) ? c.s : c.f) += 1;
    const int node = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes[node].label = c.s > c.f ? PolicyTag::Slow : PolicyTag::Fast;
    if (depth >= max_depth_ || c.f == 0 || c.s == 0) return node;

    const double parent = c.weighted_gini();
    const double eps = 1e-12 * c.n();
    double best = parent - eps;
    int best_feature = -1;
    double best_threshold = 0;

    std::vector<std::pair<double, bool>> vals(idx.size());
    for (int f : features_) {
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto& x = samples_[idx[k]].features;
        if (static_cast<std::size_t>(f) >= x.size())
          throw Error("sample lacks feature index " + std::to_string(f));
        vals[k] = {x[static_cast<std::size_t>(f)], is_s(idx[k])};
      }
      std::sort(vals.begin(), vals.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (vals.front().first == vals.back().first) continue;
      Counts left;
      for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
        (vals[k].second ? left.s : left.f) += 1;
        if (vals[k].first == vals[k + 1].first) continue;
        const Counts right{c.f - left.f, c.s - left.s};
        const double g = left.weighted_gini() + right.weighted_gini();
        if (g < best) {
          best = g;
          best_feature = f;
          best_threshold = vals[k].first + (vals[k + 1].first - vals[k].first) / 2;
          if (!(best_threshold > vals[k].first)) best_threshold = vals[k + 1].first;
        }
      }
    }
    if (best_feature < 0) return node;

    std::vector<std::size_t> left_idx, right_idx;
    for (auto i : idx)
      (samples_[i].features[static_cast<std::size_t>(best_feature)] < best_threshold ? left_idx
                                                                                     : right_idx)
          .push_back(i);
    if (importance_) (*importance_)[static_cast<std::size_t>(best_feature)] += parent - best;

    const int l = build(left_idx, depth + 1);
    const int r = build(right_idx, depth + 1);
    auto& n = tree_.nodes[static_cast<std::size_t>(node)];
    n.feature = best_feature;
    n.threshold = best_threshold;
    n.left = l;
    n.right = r;
    n.label = PolicyTag::Fast;  // internal nodes carry no label
    return node;
  }

  std::span<const TrainingSample> samples_;
  std::span<const int> features_;
  int max_depth_;
  std::vector<double>* importance_;
  DecisionTree tree_;
};

void require_labeled(std::span<const TrainingSample> samples) {
  for (const auto& s : samples)
    if (s.label == Label::Pending) throw Error("training set contains pending labels");
}

}  // namespace

std::vector<FeatureImportance> rank_features(std::span<const TrainingSample> samples,
                                             int reference_depth) {
  if (samples.empty()) throw Error("rank_features: no samples");
  require_labeled(samples);
  bool has_f = false, has_s = false;
  for (const auto& s : samples) (s.label == Label::S ? has_s : has_f) = true;
  if (!has_f || !has_s) throw Error("rank_features: samples contain a single class");

  const std::size_t width = samples.front().features.size();
  std::vector<int> all(width);
  std::iota(all.begin(), all.end(), 0);
  std::vector<double> importance(width, 0.0);
  TreeGrower(samples, all, reference_depth, &importance).grow();

  const double total = std::accumulate(importance.begin(), importance.end(), 0.0);
  std::vector<FeatureImportance> out;
  for (std::size_t i = 0; i < width; ++i)
    out.push_back({static_cast<int>(i), total > 0 ? importance[i] / total : 0.0});
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.importance > b.importance;
  });
  return out;
}

DecisionTree train_tree(std::span<const TrainingSample> samples, int depth,
                        std::span<const int> features,
                        const std::vector<std::string>& counter_names) {
  if (samples.empty()) throw Error("train_tree: empty sample set");
  if (depth < 1) throw Error("train_tree: depth must be >= 1");
  if (features.empty()) throw Error("train_tree: no features selected");
  require_labeled(samples);
  std::vector<int> sorted(features.begin(), features.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  DecisionTree t = TreeGrower(samples, sorted, depth, nullptr).grow();
  t.features = sorted;
  for (int f : sorted)
    t.feature_names.push_back(static_cast<std::size_t>(f) < counter_names.size()
                                  ? counter_names[static_cast<std::size_t>(f)]
                                  : "c" + std::to_string(f));
  return t;
}

double accuracy(const DecisionTree& tree, std::span<const TrainingSample> samples) {
  if (samples.empty()) return 0.0;
  std::size_t hit = 0;
  for (const auto& s : samples) {
    const PolicyTag p = classify(tree, s.features);
    hit += (p == PolicyTag::Slow) == (s.label == Label::S);
  }
  return static_cast<double>(hit) / static_cast<double>(samples.size());
}

void split_by_run(const std::vector<TrainingSample>& all, double train_fraction,
                  std::uint64_t seed, std::vector<TrainingSample>& train,
                  std::vector<TrainingSample>& test) {
  std::set<int> ids;
  for (const auto& s : all) ids.insert(s.run);
  std::vector<int> runs(ids.begin(), ids.end());
  Rng rng(seed);
  for (std::size_t i = runs.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
    std::swap(runs[i - 1], runs[std::min(j, i - 1)]);
  }
  const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(runs.size())));
  const std::set<int> train_ids(runs.begin(), runs.begin() + static_cast<std::ptrdiff_t>(std::min(n_train, runs.size())));
  train.clear();
  test.clear();
  for (const auto& s : all) (train_ids.count(s.run) ? train : test).push_back(s);
}

std::string samples_to_csv(std::span<const TrainingSample> samples,
                           const std::vector<std::string>& counter_names,
                           const std::string& preamble) {
  std::ostringstream os;
  os << preamble << "run,scenario,decision,label";
  for (const auto& n : counter_names) os << ',' << n;
  os << '\n';
  for (const auto& s : samples) {
    os << s.run << ',' << s.scenario << ',' << s.decision << ',' << label_char(s.label);
    for (double v : s.features) os << ',' << fmt_double(v);
    os << '\n';
  }
  return os.str();
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<TrainingSample> samples_from_csv(const std::string& text,
                                             std::vector<std::string>* counter_names) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  std::vector<TrainingSample> out;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto cells = split_csv(line);
    if (header.empty()) {
      if (cells.size() < 4 || cells[0] != "run" || cells[3] != "label")
        throw Error("samples file: unexpected header");
      header = std::move(cells);
      continue;
    }
    if (cells.size() != header.size())
      throw Error("samples file: line " + std::to_string(lineno) + " has " +
                  std::to_string(cells.size()) + " fields, expected " +
                  std::to_string(header.size()));
    TrainingSample s;
    try {
      s.run = std::stoi(cells[0]);
      s.scenario = cells[1];
      s.decision = std::stoull(cells[2]);
      if (cells[3] == "F") s.label = Label::F;
      else if (cells[3] == "S") s.label = Label::S;
      else if (cells[3] == "P") s.label = Label::Pending;
      else throw Error("bad label");
      for (std::size_t k = 4; k < cells.size(); ++k) s.features.push_back(std::stod(cells[k]));
    } catch (const std::exception&) {
      throw Error("samples file: malformed line " + std::to_string(lineno));
    }
    out.push_back(std::move(s));
  }
  if (header.empty()) throw Error("samples file: missing header");
  if (counter_names) counter_names->assign(header.begin() + 4, header.end());
  return out;
}

}  // namespace das
