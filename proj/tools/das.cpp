// Command-line driver: config validation, workload generation, simulation,
// sweeps, oracle labeling, training and policy comparison.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "das/classifier.hpp"
#include "das/engine.hpp"
#include "das/io.hpp"
#include "das/metrics.hpp"
#include "das/pipeline.hpp"
#include "das/platform.hpp"
#include "das/tree.hpp"
#include "das/workload.hpp"

#ifndef DAS_CONFIG_DIR
#define DAS_CONFIG_DIR "config"
#endif

namespace fs = std::filesystem;
using namespace das;

namespace {

struct Common {
  std::string manifest_file;
  std::string platform = std::string(DAS_CONFIG_DIR) + "/platform.json";
  std::string apps;
  std::string suite;
  std::string tree;
  std::string overhead;
  std::uint64_t seed = 1;
  std::string out = "out";
  int workloads = 40;
  int frames = das::SuiteOptions{}.frame_count;
  int rate_count = das::SuiteOptions{}.rate_count;
  double rate_min = das::SuiteOptions{}.rate_min_mbps;
  double rate_max = das::SuiteOptions{}.rate_max_mbps;
  std::vector<double> rates;
  std::vector<std::string> policies;
  std::string metric = "exec";
};

void add_inputs(CLI::App* c, Common& o) {
  c->add_option("--manifest", o.manifest_file, "Manifest JSON; flags given explicitly override it")
      ->check(CLI::ExistingFile);
  c->add_option("--platform", o.platform, "Platform description")->capture_default_str();
  c->add_option("--apps", o.apps, "Application library (default: built-in synthetic set)");
  c->add_option("--suite", o.suite, "Workload suite (default: generated from --seed)");
  c->add_option("--overhead", o.overhead, "JSON with scheduler-overhead overrides");
  c->add_option("--seed", o.seed, "Seed for suite generation and splits")->capture_default_str();
  c->add_option("--workloads", o.workloads, "Workload count for a generated suite")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  c->add_option("--frames", o.frames, "Frames per run")->capture_default_str()->check(CLI::PositiveNumber);
  c->add_option("--rate-count", o.rate_count, "Rungs in the generated rate ladder")->capture_default_str();
  c->add_option("--rate-min", o.rate_min, "Lowest ladder rate, Mbps")->capture_default_str();
  c->add_option("--rate-max", o.rate_max, "Highest ladder rate, Mbps")->capture_default_str();
  c->add_option("--rates", o.rates, "Explicit data rates in Mbps (overrides the ladder)")->delimiter(',');
  c->add_option("--out", o.out, "Output directory")->capture_default_str();
}

RunManifest make_manifest(const Common& o, const CLI::App* c) {
  RunManifest m;
  if (!o.manifest_file.empty()) m = RunManifest::from_json(read_json(o.manifest_file));
  auto given = [&](const char* flag) { return c->count(flag) > 0 || o.manifest_file.empty(); };
  if (given("--platform")) m.platform = o.platform;
  if (given("--apps")) m.apps = o.apps;
  if (given("--suite")) m.suite = o.suite;
  if (c->get_option_no_throw("--tree") && given("--tree")) m.tree = o.tree;
  if (given("--seed")) m.seed = o.seed;
  if (given("--out")) m.out = o.out;
  if (given("--workloads")) m.workloads = o.workloads;
  if (given("--frames")) m.suite_options.frame_count = o.frames;
  if (given("--rate-count")) m.suite_options.rate_count = o.rate_count;
  if (given("--rate-min")) m.suite_options.rate_min_mbps = o.rate_min;
  if (given("--rate-max")) m.suite_options.rate_max_mbps = o.rate_max;
  if (given("--rates")) m.rates = o.rates;
  if (!o.overhead.empty()) m.overhead = read_json(o.overhead);
  return m;
}

/// Policies are parsed before any simulation so argument errors surface first.
std::vector<PolicySpec> parse_policies(const std::vector<std::string>& texts, const std::string& tree) {
  std::vector<PolicySpec> out;
  for (const auto& t : texts) {
    if (t == "das") {
      if (tree.empty())
        throw CLI::ValidationError("--policy", "policy 'das' needs --tree <file> (or das:<file>)");
      out.push_back(PolicySpec::das(load_tree(tree), "das"));
    } else {
      try {
        out.push_back(parse_policy(t));
      } catch (const Error& e) {
        throw CLI::ValidationError("--policy", e.what());
      }
    }
  }
  if (out.empty()) throw CLI::ValidationError("--policy", "at least one policy is required");
  return out;
}

void write_out(const fs::path& path, const std::string& text) {
  write_text(path, text);
  std::cerr << "wrote " << path.generic_string() << "\n";
}

void save_manifest(const Context& ctx) {
  write_text(ctx.manifest.out / "manifest.json", ctx.manifest.to_json().dump(2) + "\n");
}

std::size_t find_workload(const Suite& s, const std::string& name) {
  for (std::size_t i = 0; i < s.workloads.size(); ++i)
    if (s.workloads[i].name == name) return i;
  throw Error("unknown workload '" + name + "'");
}

void report_oracle(const OracleResult& r) {
  std::size_t s = 0;
  for (const auto& x : r.samples) s += x.label == Label::S;
  std::cout << "oracle: " << r.runs << " runs, " << r.samples.size() << " samples, " << s
            << " labeled S, ETF won " << r.slow_wins << " runs\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic adaptive scheduling simulator and toolkit"};
  app.require_subcommand(1);
  Common o;
  std::string workload = "w0";
  double rate = 1000;
  std::string samples_file;
  std::string threshold_sweep;
  PipelineOptions popt;
  std::string trace_out;

  auto* platform = app.add_subcommand("platform", "Platform descriptions");
  platform->require_subcommand(1);
  auto* pshow = platform->add_subcommand("show", "Validate and print a platform");
  pshow->add_option("--platform", o.platform, "Platform description")->capture_default_str();

  auto* wgen = app.add_subcommand("workload", "Workload suites");
  wgen->require_subcommand(1);
  auto* gen = wgen->add_subcommand("gen", "Write the app library and workload suite");
  add_inputs(gen, o);

  auto* sim = app.add_subcommand("simulate", "Run one workload at one rate and write its trace");
  add_inputs(sim, o);
  sim->add_option("--policy", o.policies, "lut|etf|etf-ideal|das|das:<tree>|threshold:<mbps>")->required();
  sim->add_option("--tree", o.tree, "Decision tree for policy 'das'");
  sim->add_option("--workload", workload, "Workload name in the suite")->capture_default_str();
  sim->add_option("--rate", rate, "Data rate in Mbps")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "Every (workload, rate, policy) combination");
  add_inputs(sweep, o);
  sweep->add_option("--policy", o.policies, "Repeatable policy list")->required();
  sweep->add_option("--tree", o.tree, "Decision tree for policy 'das'");

  auto* oracle = app.add_subcommand("oracle", "Label scheduling decisions with the two-run oracle");
  add_inputs(oracle, o);
  oracle->add_option("--metric", o.metric, "exec|edp")->capture_default_str();

  auto* train = app.add_subcommand("train", "Rank features and fit the decision tree");
  train->add_option("--samples", samples_file, "Labeled samples CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--depth", popt.depth, "Tree depth")->capture_default_str();
  train->add_option("--top-k", popt.top_k, "Features kept after ranking")->capture_default_str();
  train->add_option("--train-fraction", popt.train_fraction, "Share of runs used for training")
      ->capture_default_str();
  train->add_option("--seed", o.seed, "Split seed")->capture_default_str();
  train->add_option("--out", o.out, "Output directory")->capture_default_str();

  auto* eval = app.add_subcommand("eval", "Accuracy of a tree on labeled samples");
  eval->add_option("--samples", samples_file, "Labeled samples CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--tree", o.tree, "Decision tree")->required()->check(CLI::ExistingFile);

  auto* cmp = app.add_subcommand("compare", "Speedup and EDP change of each policy against the first");
  add_inputs(cmp, o);
  cmp->add_option("--policy", o.policies, "Baseline first, then the others")->required();
  cmp->add_option("--tree", o.tree, "Decision tree for policy 'das'");

  auto* thr = app.add_subcommand("threshold", "Data-rate threshold heuristic");
  thr->require_subcommand(1);
  auto* fit = thr->add_subcommand("fit", "Fit the LUT/ETF switch rate from a sweep");
  add_inputs(fit, o);
  fit->add_option("--sweep", threshold_sweep, "Existing metrics CSV with lut and etf rows")
      ->check(CLI::ExistingFile);

  auto* pipe = app.add_subcommand("pipeline", "Oracle, ranking, training and held-out evaluation");
  add_inputs(pipe, o);
  pipe->add_option("--metric", o.metric, "exec|edp")->capture_default_str();
  pipe->add_option("--depth", popt.depth, "Tree depth")->capture_default_str();
  pipe->add_option("--top-k", popt.top_k, "Features kept after ranking")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  const unsigned workers = worker_count();
  try {
    if (pshow->parsed()) {
      std::cout << describe(load_platform(o.platform));
      return 0;
    }

    if (train->parsed()) {
      std::vector<std::string> names;
      const auto samples = samples_from_csv(read_text(samples_file), &names);
      const PipelineReport rep = train_pipeline(samples, names, popt, o.seed);
      save_tree(rep.tree, fs::path(o.out) / "tree.json");
      write_out(fs::path(o.out) / "report.txt", rep.to_text());
      std::cout << rep.to_text();
      return 0;
    }

    if (eval->parsed()) {
      const auto samples = samples_from_csv(read_text(samples_file));
      const DecisionTree t = load_tree(o.tree);
      std::cout << "accuracy " << fmt_double(accuracy(t, samples)) << " on " << samples.size()
                << " samples\n";
      return 0;
    }

    CLI::App* active = app.get_subcommands().front();
    if (!active->get_subcommands().empty()) active = active->get_subcommands().front();

    std::vector<PolicySpec> policies;
    if (!o.policies.empty()) {
      try {
        policies = parse_policies(o.policies, o.tree);
      } catch (const CLI::Error& e) {
        return app.exit(e);
      }
    }
    const TargetMetric metric = parse_metric(o.metric);

    RunManifest m = make_manifest(o, active);
    const Context ctx = load_context(m);
    const fs::path out = ctx.manifest.out;

    if (gen->parsed()) {
      save_manifest(ctx);
      write_out(out / "apps.json", library_to_json(ctx.apps).dump(2) + "\n");
      write_out(out / "suite.json", suite_to_json(ctx.suite).dump(2) + "\n");
      std::cout << ctx.suite.workloads.size() << " workloads x " << ctx.suite.rates_mbps.size()
                << " rates\n";
      return 0;
    }

    if (sim->parsed()) {
      if (policies.size() != 1) throw Error("simulate takes exactly one --policy");
      Scenario sc = ctx.suite.workloads.at(find_workload(ctx.suite, workload));
      sc.data_rate_mbps = rate;
      const SimTrace tr = run(ctx.platform, ctx.apps, sc, policies.front(), ctx.overhead);
      save_manifest(ctx);
      write_out(out / "trace.csv", ctx.preamble() + trace_to_csv(tr));
      std::cout << summary_table({{sc.name, rate, policies.front().name, reduce(tr)}});
      return 0;
    }

    if (sweep->parsed()) {
      const auto rows = run_sweep(ctx, policies, {}, workers);
      save_manifest(ctx);
      write_out(out / "metrics.csv", sweep_to_csv(rows, ctx.preamble()));
      write_out(out / "decisions.csv", decisions_to_csv(rows, ctx.preamble()));
      std::cout << summary_table(rows);
      return 0;
    }

    if (oracle->parsed()) {
      const OracleResult r = run_oracle(ctx, metric, workers);
      save_manifest(ctx);
      write_out(out / "samples.csv",
                samples_to_csv(r.samples, FeatureLayout(ctx.platform).names(), ctx.preamble()));
      report_oracle(r);
      return 0;
    }

    if (cmp->parsed()) {
      if (policies.size() < 2) throw Error("compare needs at least two policies");
      const auto rows = run_sweep(ctx, policies, {}, workers);
      const std::size_t P = policies.size();
      std::ostringstream csv;
      csv << ctx.preamble() << "workload,rate_mbps,baseline,policy,speedup,edp_ratio\n";
      std::map<std::string, std::pair<double, double>> mean;  // policy -> (speedup sum, edp sum)
      for (std::size_t i = 0; i < rows.size(); i += P)
        for (std::size_t p = 1; p < P; ++p) {
          const Comparison c = compare(rows[i].m, rows[i + p].m);
          csv << rows[i].workload << ',' << fmt_double(rows[i].rate_mbps) << ',' << rows[i].policy
              << ',' << rows[i + p].policy << ',' << fmt_double(c.speedup) << ','
              << fmt_double(c.edp_ratio) << '\n';
          mean[rows[i + p].policy].first += c.speedup;
          mean[rows[i + p].policy].second += c.edp_ratio;
        }
      save_manifest(ctx);
      write_out(out / "compare.csv", csv.str());
      const double cells = static_cast<double>(rows.size() / P);
      for (const auto& [name, s] : mean) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "%s vs %s: mean speedup %.3fx, mean EDP change %+.1f%%\n",
                      name.c_str(), policies.front().name.c_str(), s.first / cells,
                      (s.second / cells - 1.0) * 100.0);
        std::cout << buf;
      }
      return 0;
    }

    if (fit->parsed()) {
      std::vector<SweepRow> rows;
      if (!threshold_sweep.empty()) {
        std::istringstream in(read_text(threshold_sweep));
        std::string line;
        bool header = false;
        while (std::getline(in, line)) {
          if (line.empty() || line[0] == '#') continue;
          if (!header) {
            header = true;
            continue;
          }
          std::istringstream ls(line);
          std::string wl, r, pol, t;
          std::getline(ls, wl, ',');
          std::getline(ls, r, ',');
          std::getline(ls, pol, ',');
          std::getline(ls, t, ',');
          SweepRow row{wl, std::stod(r), pol, {}};
          row.m.avg_job_exec_time = std::stod(t);
          rows.push_back(row);
        }
      } else {
        rows = run_sweep(ctx, {PolicySpec::lut(), PolicySpec::etf()}, {}, workers);
      }
      const double t = fit_threshold(rows);
      save_manifest(ctx);
      write_out(out / "threshold.txt", ctx.preamble() + fmt_double(t) + "\n");
      std::cout << "threshold " << fmt_double(t) << " Mbps (use --policy threshold:" << fmt_double(t)
                << ")\n";
      return 0;
    }

    if (pipe->parsed()) {
      popt.metric = metric;
      std::cerr << "[oracle] labeling " << ctx.suite.point_count() << " runs\n";
      OracleResult r;
      try {
        r = run_oracle(ctx, metric, workers);
      } catch (const Error& e) {
        throw Error(std::string("oracle stage: ") + e.what());
      }
      report_oracle(r);
      save_manifest(ctx);
      const auto names = FeatureLayout(ctx.platform).names();
      write_out(out / "samples.csv", samples_to_csv(r.samples, names, ctx.preamble()));
      PipelineReport rep;
      try {
        rep = train_pipeline(r.samples, names, popt, ctx.manifest.seed);
      } catch (const Error& e) {
        throw Error(std::string("training stage: ") + e.what());
      }
      save_tree(rep.tree, out / "tree.json");
      std::cerr << "wrote " << (out / "tree.json").generic_string() << "\n";
      write_out(out / "report.txt", ctx.preamble() + rep.to_text());
      std::cout << rep.to_text();
      return 0;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    for (const auto& v : e.violations()) std::cerr << "  - " << v << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
