#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "tiersim/config.hpp"

using namespace tiersim;

namespace {

const char* kBase = R"(seed = 5
topology.tier.1.capacity_pages = 64
topology.tier.1.cost = 1.0
topology.tier.2.capacity_pages = 256
topology.tier.2.cost = 3.0
workload.footprint_pages = 128
workload.accesses = 2000
accesses_per_interval = 200
)";

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST_CASE("key = value configs parse with comments and derived fields") {
  RunConfig cfg = parse_config_text(std::string(kBase) + "# trailing comment\nintervals = 7  # inline\n");
  cfg.finalize();
  CHECK(cfg.intervals == 7);
  CHECK(cfg.topology.tiers.size() == 2);
  CHECK(cfg.topology.tiers[0].capacity_bytes == 64 * 4096);
  CHECK(cfg.system_config.profiler.t_mi == doctest::Approx(200.0));
  CHECK(cfg.system_config.profiler.seed == 5);
  CHECK(cfg.workload.gups.seed == 5);
}

TEST_CASE("an explicit t_mi is kept") {
  RunConfig cfg = parse_config_text(std::string(kBase) + "profiler.t_mi = 5000\n");
  cfg.finalize();
  CHECK(cfg.system_config.profiler.t_mi == doctest::Approx(5000.0));
}

TEST_CASE("parse errors name the origin and line") {
  CHECK_THROWS_WITH_AS(parse_config_text("seed = 1\nnot a pair\n", "x.conf"), doctest::Contains("x.conf line 2"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("seed = 1\n\nprofiler.bogus = 3\n"), doctest::Contains("line 3"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("profiler.bogus = 3\n"), doctest::Contains("unknown key 'profiler.bogus'"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("intervals = ten\n"), doctest::Contains("intervals"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("workload.seed = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("system = tpp\n"), ConfigError);
}

TEST_CASE("finalize rejects invalid combinations by field") {
  RunConfig no_seed = parse_config_text("topology.tier.1.capacity_pages = 8\ntopology.tier.1.cost = 1\n");
  CHECK_THROWS_WITH_AS(no_seed.finalize(), doctest::Contains("field seed"), ConfigError);

  RunConfig bad_alpha = parse_config_text(std::string(kBase) + "policy.alpha = 0\n");
  CHECK_THROWS_WITH_AS(bad_alpha.finalize(), doctest::Contains("alpha"), ConfigError);

  RunConfig one_phase = parse_config_text(std::string(kBase) + "workload.kind = phase_change\nworkload.phases = 1\n");
  CHECK_THROWS_WITH_AS(one_phase.finalize(), doctest::Contains("workload.phases"), ConfigError);

  RunConfig no_trace = parse_config_text(std::string(kBase) + "workload.kind = trace\n");
  CHECK_THROWS_WITH_AS(no_trace.finalize(), doctest::Contains("trace_path"), ConfigError);

  RunConfig bad_node = parse_config_text(std::string(kBase) + "init_node = 3\n");
  CHECK_THROWS_AS(bad_node.finalize(), ConfigError);

  RunConfig thresholds = parse_config_text(std::string(kBase) + "profiler.tau1 = 2.5\n");
  CHECK_THROWS_AS(thresholds.finalize(), ConfigError);
}

TEST_CASE("phase overrides apply to their phase only") {
  RunConfig cfg = parse_config_text(std::string(kBase) +
                                    "workload.kind = phase_change\nworkload.phases = 3\n"
                                    "workload.phase.1.hotset_fraction = 0.1\n");
  cfg.finalize();
  REQUIRE(cfg.workload.phases.size() == 3);
  CHECK(cfg.workload.phases[0].hotset_fraction == doctest::Approx(0.2));
  CHECK(cfg.workload.phases[1].hotset_fraction == doctest::Approx(0.1));
  CHECK(cfg.workload.phases[0].seed != cfg.workload.phases[1].seed);

  RunConfig out_of_range = parse_config_text(std::string(kBase) +
                                             "workload.kind = phase_change\nworkload.phases = 2\n"
                                             "workload.phase.4.hotset_fraction = 0.1\n");
  CHECK_THROWS_WITH_AS(out_of_range.finalize(), doctest::Contains("workload.phase.4"), ConfigError);
}

TEST_CASE("inter-tier factors fill a symmetric matrix by tier position") {
  RunConfig cfg = parse_config_text(std::string(kBase) +
                                    "cost.inter_tier_factor.1.2 = 1.5\ncost.inter_tier_factor.2.1 = 1.5\n");
  cfg.finalize();
  CHECK(cfg.costs.copy_factor(0, 1) == doctest::Approx(1.5));
  RunConfig lopsided = parse_config_text(std::string(kBase) + "cost.inter_tier_factor.1.2 = 1.5\n");
  CHECK_THROWS_AS(lopsided.finalize(), ConfigError);
}

TEST_CASE("JSON configs flatten to the same keys") {
  const std::string json = R"({
    "seed": 5, "accesses_per_interval": 200, "intervals": 4,
    "topology": {"tier": {"1": {"capacity_pages": 64, "cost": [1.0]},
                          "2": {"capacity_pages": 256, "cost": [3.0]}}},
    "workload": {"footprint_pages": 128, "accesses": 2000},
    "profiler": {"pebs_assist": false}
  })";
  RunConfig cfg = parse_config_json(json);
  cfg.finalize();
  CHECK(cfg.intervals == 4);
  CHECK_FALSE(cfg.system_config.profiler.pebs_assist);
  CHECK(cfg.topology.tiers[1].capacity_bytes == 256 * 4096);
  CHECK_THROWS_AS(parse_config_json("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(parse_config_json("{\"seed\": "), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_json("{\"nope\": 1}"), doctest::Contains("unknown key"), ConfigError);
}

TEST_CASE("load_config picks the parser by extension and honours TIERSIM_SEED") {
  const auto conf = write_temp("tiersim_test.conf", kBase);
  unsetenv("TIERSIM_SEED");
  CHECK(load_config(conf.string()).seed == 5u);
  setenv("TIERSIM_SEED", "99", 1);
  CHECK(load_config(conf.string()).seed == 99u);
  setenv("TIERSIM_SEED", "abc", 1);
  CHECK_THROWS_AS(load_config(conf.string()), ConfigError);
  unsetenv("TIERSIM_SEED");

  const auto json = write_temp("tiersim_test.json", "{\"seed\": 12}");
  CHECK(load_config(json.string()).seed == 12u);
  CHECK_THROWS_WITH_AS(load_config("/nonexistent/x.conf"), doctest::Contains("cannot open"), ConfigError);
  std::filesystem::remove(conf);
  std::filesystem::remove(json);
}

TEST_CASE("sweep parameters map to config keys") {
  CHECK(sweep_key("tau1") == "profiler.tau1");
  CHECK(sweep_key("alpha") == "policy.alpha");
  CHECK(sweep_key("N") == "policy.migration_budget_bytes");
  CHECK_THROWS_AS(sweep_key("zeta"), ConfigError);
}
