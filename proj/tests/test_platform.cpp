#include "doctest.h"
#include "support.hpp"

using namespace das;

namespace {

PlatformConfig grid_config() {
  PlatformConfig cfg;
  cfg.clusters = {{0, "cpu", ClusterKind::Cpu, 2, {0, 0}},
                  {1, "acc", ClusterKind::Accelerator, 2, {0, 1}},
                  {2, "far", ClusterKind::Accelerator, 1, {1, 1}}};
  cfg.profiles = {{0, "k0", {{0, 1000, 100}, {1, 400, 250}, {2, 50, 20}}}};
  cfg.comm = {1.0, 10.0};
  return cfg;
}

bool mentions(const ValidationError& e, const std::string& text) {
  for (const auto& v : e.violations())
    if (v.find(text) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("default platform has 19 PEs in 6 clusters") {
  const Platform p = dtest::default_platform();
  CHECK(p.pe_count() == 19);
  CHECK(p.cluster_count() == 6);
  const std::vector<int> sizes{4, 4, 4, 4, 1, 2};
  for (std::size_t c = 0; c < sizes.size(); ++c)
    CHECK(p.pes_of(static_cast<ClusterId>(c)).size() == static_cast<std::size_t>(sizes[c]));
  CHECK(p.cpu_clusters() == std::vector<ClusterId>{0, 1});
  for (const auto& prof : p.profiles()) {
    if (!p.knows_type(prof.type)) continue;
    CHECK((p.supports(prof.type, 0) || p.supports(prof.type, 1)));
  }
}

TEST_CASE("minimal one-PE platform is valid") {
  PlatformConfig cfg;
  cfg.clusters = {{0, "solo", ClusterKind::Cpu, 1, {0, 0}}};
  cfg.profiles = {{0, "t", {{0, 10, 1}}}};
  const Platform p = validate_platform(cfg);
  CHECK(p.pe_count() == 1);
  CHECK(p.exec_time(0, 0) == 10);
}

TEST_CASE("validation names the offending task type") {
  PlatformConfig cfg = grid_config();
  cfg.profiles.push_back({7, "bad", {{9, 10, 1}}});
  try {
    validate_platform(cfg);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(mentions(e, "task type 7"));
  }
}

TEST_CASE("validation rejects bad constants and collects every problem") {
  PlatformConfig cfg = grid_config();
  cfg.profiles[0].entries[1].exec_ns = 0;
  cfg.profiles[0].entries[2].power_mw = 0;
  cfg.clusters[2].id = 1;
  try {
    validate_platform(cfg);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(mentions(e, "exec time must be > 0"));
    CHECK(mentions(e, "power must be > 0"));
    CHECK(mentions(e, "duplicate cluster id 1"));
  }
}

TEST_CASE("validation requires a CPU fallback for every type") {
  PlatformConfig cfg = grid_config();
  cfg.profiles.push_back({1, "acc_only", {{1, 10, 1}}});
  CHECK_THROWS_AS(validate_platform(cfg), ValidationError);
}

TEST_CASE("comm cost examples") {
  const Platform p = validate_platform(grid_config());
  // PEs: 0,1 cpu (0,0); 2,3 acc (0,1); 4 far (1,1)
  CHECK(p.comm_cost(0, 1, 4096) == 0.0);
  CHECK(p.comm_cost(0, 4, 0) == 20.0);
  CHECK(p.comm_cost(0, 2, 1000) == 1010.0);
  CHECK_THROWS_AS(p.comm_cost(0, 99, 1), Error);
}

TEST_CASE("comm cost is symmetric and monotone in bytes on the default platform") {
  const Platform p = dtest::default_platform();
  const auto n = static_cast<PeId>(p.pe_count());
  for (PeId a = 0; a < n; ++a)
    for (PeId b = 0; b < n; ++b) {
      CHECK(p.comm_cost(a, b, 512) == p.comm_cost(b, a, 512));
      CHECK(p.comm_cost(a, b, 512) <= p.comm_cost(a, b, 4096));
      if (p.cluster_of(a) == p.cluster_of(b)) CHECK(p.comm_cost(a, b, 1e6) == 0.0);
    }
}

TEST_CASE("energy examples and linearity") {
  const Platform p = validate_platform(grid_config());
  CHECK(p.energy_of(0, 0, 1000) == doctest::Approx(100.0));
  CHECK(p.energy_of(0, 1, 400) == doctest::Approx(100.0));
  CHECK(p.energy_of(0, 1, 800) == doctest::Approx(2 * p.energy_of(0, 1, 400)));
  CHECK(p.energy_of(0, 2, 50) > 0);
}

TEST_CASE("platform json round trip") {
  const PlatformConfig cfg = grid_config();
  const auto j = platform_config_to_json(cfg);
  const Platform a = validate_platform(cfg);
  const Platform b = validate_platform(platform_config_from_json(j));
  CHECK(platform_config_to_json(platform_config_from_json(j)) == j);
  CHECK(a.pe_count() == b.pe_count());
  CHECK(a.comm_cost(0, 4, 100) == b.comm_cost(0, 4, 100));
}
