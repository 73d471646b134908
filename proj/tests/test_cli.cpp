#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include "doctest.h"
#include "support.hpp"
#include "das/tree.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "das_cli_test";
const std::string kSmall = " --workloads 3 --rate-count 3 --frames 20";

int das_cmd(const std::string& args, const std::string& env = {}) {
  fs::create_directories(kRoot);
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" + std::string(DAS_BIN) + "' " + args +
                          " >>'" + (kRoot / "log.txt").string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) { return das::read_text(p); }

}  // namespace

TEST_CASE("das without a tree fails before any run") {
  const fs::path out = kRoot / "no_tree";
  fs::remove_all(out);
  CHECK(das_cmd("sweep --policy das --out '" + out.string() + "'") != 0);
  CHECK_FALSE(fs::exists(out));
  CHECK(das_cmd("simulate --policy das:" + (kRoot / "missing.json").string() + " --out '" + out.string() + "'") != 0);
  CHECK_FALSE(fs::exists(out / "trace.csv"));
}

TEST_CASE("bad inputs are rejected") {
  CHECK(das_cmd("sweep --policy heft --out '" + (kRoot / "bad").string() + "'") != 0);
  CHECK(das_cmd("platform show --platform /nonexistent.json") != 0);
  CHECK(das_cmd("simulate --policy lut --workload nope" + kSmall + " --out '" + (kRoot / "bad").string() + "'") != 0);
}

TEST_CASE("platform show") { CHECK(das_cmd("platform show") == 0); }

TEST_CASE("sweep outputs are byte-identical across reruns and worker counts") {
  const fs::path a = kRoot / "sweep_a", b = kRoot / "sweep_b";
  fs::remove_all(a);
  fs::remove_all(b);
  const std::string args = "sweep" + kSmall + " --policy lut --policy etf --policy threshold:800";
  REQUIRE(das_cmd(args + " --out '" + a.string() + "'", "DAS_WORKERS=1") == 0);
  REQUIRE(das_cmd(args + " --out '" + b.string() + "'", "DAS_WORKERS=3") == 0);
  for (const char* f : {"metrics.csv", "decisions.csv"}) {
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(slurp(a / "metrics.csv").rfind("# manifest ", 0) == 0);
}

TEST_CASE("toy pipeline runs end to end and reproduces its tree") {
  const fs::path a = kRoot / "pipe_a", b = kRoot / "pipe_b";
  fs::remove_all(a);
  fs::remove_all(b);
  REQUIRE(das_cmd("pipeline" + kSmall + " --out '" + a.string() + "'") == 0);
  REQUIRE(das_cmd("pipeline" + kSmall + " --out '" + b.string() + "'") == 0);
  for (const char* f : {"tree.json", "samples.csv", "report.txt"}) {
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const auto tree = das::load_tree(a / "tree.json");
  CHECK(tree.depth() <= 2);
  CHECK(tree.features.size() <= 2);

  const fs::path s = kRoot / "pipe_sim";
  fs::remove_all(s);
  REQUIRE(das_cmd("simulate" + kSmall + " --workload w2 --rate 2000 --policy das:" + (a / "tree.json").string() +
                  " --out '" + s.string() + "'") == 0);
  CHECK(fs::exists(s / "trace.csv"));
  CHECK(das_cmd("eval --tree '" + (a / "tree.json").string() + "' --samples '" + (a / "samples.csv").string() + "'") == 0);
}

TEST_CASE("simulate and oracle are reproducible") {
  for (const char* run : {"a", "b"}) {
    const fs::path d = kRoot / (std::string("repro_") + run);
    fs::remove_all(d);
    REQUIRE(das_cmd("simulate" + kSmall + " --workload w1 --rate 1500 --policy etf --out '" + d.string() + "'") == 0);
    REQUIRE(das_cmd("oracle" + kSmall + " --out '" + (d / "oracle").string() + "'") == 0);
  }
  CHECK(slurp(kRoot / "repro_a" / "trace.csv") == slurp(kRoot / "repro_b" / "trace.csv"));
  CHECK(slurp(kRoot / "repro_a" / "oracle" / "samples.csv") == slurp(kRoot / "repro_b" / "oracle" / "samples.csv"));
}

TEST_CASE("manifest replays a run") {
  const fs::path a = kRoot / "man_a", b = kRoot / "man_b";
  fs::remove_all(a);
  fs::remove_all(b);
  REQUIRE(das_cmd("sweep" + kSmall + " --seed 5 --policy lut --out '" + a.string() + "'") == 0);
  REQUIRE(fs::exists(a / "manifest.json"));
  REQUIRE(das_cmd("sweep --manifest '" + (a / "manifest.json").string() + "' --policy lut --out '" + b.string() + "'") == 0);
  CHECK(slurp(a / "metrics.csv") == slurp(b / "metrics.csv"));
}
