#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "scope/harness.hpp"

using namespace scope;
using namespace scope::harness;

namespace {

const char* kSmall = R"(
schema_version: 1
master_seed: 7
interval_sec: 10
constraint_percentiles: [50, 70]
workloads:
  scenario: {kind: app-shift, seed: 3}
policies:
  - static
  - {kind: scope, gamma: 0.5}
  - scope-no
  - {kind: offline, offline_fraction: 0.25}
  - oracle
starts: {rule: bands, fast: 1, slow: 1}
traces: {policies: [scope], max_runs: 2}
)";

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("percentile by linear interpolation") {
  const std::vector<double> v{4, 1, 3, 2};
  CHECK(percentile(v, 0) == 1.0);
  CHECK(percentile(v, 100) == 4.0);
  CHECK(percentile(v, 50) == 2.5);
  CHECK(percentile(v, 25) == doctest::Approx(1.75));
  CHECK(percentile({7.0}, 30) == 7.0);
  CHECK_THROWS_AS(percentile({}, 50), std::invalid_argument);
  CHECK_THROWS_AS(percentile(v, 101), std::invalid_argument);
}

TEST_CASE("seed derivation is stable and key sensitive") {
  CHECK(derive_seed(1, "a|50|3|0") == derive_seed(1, "a|50|3|0"));
  CHECK(derive_seed(1, "a|50|3|0") != derive_seed(2, "a|50|3|0"));
  CHECK(derive_seed(1, "a|50|3|0") != derive_seed(1, "a|50|3|1"));
}

TEST_CASE("start configurations are truly safe and banded by latency") {
  const ConfigSpace space(default_params());
  const auto w = sim::default_workloads(space).front();
  const auto truth = sim::profile_truth(w, space);
  const double cap = percentile(truth.max_power, 60);
  StartRule rule;
  rule.fast = 3;
  rule.slow = 4;
  const auto starts = derive_start_configs(space, w, cap, rule, 11);
  REQUIRE(starts.size() == 7);
  std::vector<double> safe_lat;
  for (ConfigId id = 0; id < space.size(); ++id)
    if (truth.max_power[id] < cap) safe_lat.push_back(truth.latency[id]);
  for (const auto& s : starts) {
    CHECK(truth.max_power[s.id] < cap);
    if (s.kind == "fast") CHECK(truth.latency[s.id] <= percentile(safe_lat, rule.fast_percentile));
    if (s.kind == "slow") CHECK(truth.latency[s.id] >= percentile(safe_lat, rule.slow_percentile));
  }
  CHECK(derive_start_configs(space, w, cap, rule, 11)[2].id == starts[2].id);
  CHECK_THROWS_AS(derive_start_configs(space, w, 0.0, rule, 1), std::runtime_error);
}

TEST_CASE("config parsing") {
  const auto cfg = parse_config(kSmall);
  CHECK(cfg.master_seed == 7);
  CHECK(cfg.policies.size() == 5);
  CHECK(cfg.policies[1].gamma == 0.5);
  CHECK(std::isinf(cfg.policies[2].effective_gamma()));
  CHECK(cfg.policies[3].offline_fraction == 0.25);
  CHECK(cfg.starts.fast == 1);
  CHECK_FALSE(cfg.workloads.default_suite);
  REQUIRE(cfg.workloads.scenario);
  CHECK(*cfg.workloads.scenario == sim::ScenarioKind::app_shift);

  CHECK_THROWS_AS(parse_config("schema_version: 1\nbogus: 3\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("schema_version: 2\npolicies: [static]\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("policies: [warp]\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("policies: [{kind: scope, gamma: -1}]\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("interval_sec: ten\npolicies: [static]\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("policies: [{kind: scope, gama: 1}]\n"), std::invalid_argument);
  CHECK_NOTHROW(parse_config("policies: [static]\n"));
}

TEST_CASE("workload yaml round trip") {
  const ConfigSpace space(default_params());
  const auto ws = sim::default_workloads(space);
  const auto back = workloads_from_yaml(workload_to_yaml(ws));
  REQUIRE(back.size() == ws.size());
  for (std::size_t i = 0; i < ws.size(); ++i) {
    CHECK(back[i].name == ws[i].name);
    CHECK(back[i].total_work == ws[i].total_work);
    REQUIRE(back[i].phases.size() == ws[i].phases.size());
    for (std::size_t k = 0; k < ws[i].phases.size(); ++k) {
      CHECK(back[i].phases[k].start_work == ws[i].phases[k].start_work);
      CHECK(back[i].phases[k].power.dynamic == ws[i].phases[k].power.dynamic);
      CHECK(back[i].phases[k].work.ceiling == ws[i].phases[k].work.ceiling);
    }
  }
}

TEST_CASE("csv rows round trip") {
  ResultRow row{"scope", "odd,name", 50, 123.5, 17, "fast", std::nan(""), 10, 10, "gp", std::nan(""), 0, 99, {}, 3};
  row.report.speedup = 1.25;
  row.report.run_length_sec = 42;
  const auto table = parse_csv(results_header() + "\n" + format_row(row) + "\n");
  REQUIRE(table.size() == 1);
  const auto& r = table[0];
  CHECK(r.at("workload") == "odd,name");
  CHECK(r.at("gamma") == "");
  CHECK(r.at("speedup") == "1.25");
  CHECK(r.at("poc") == "");
  CHECK(r.at("run_length_sec") == "42");
  CHECK_THROWS_AS(parse_csv("a,b\n1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_csv("a\n\"open\n"), std::invalid_argument);
}

TEST_CASE("report data and best interval") {
  const Table rows{
      {{"policy", "a"}, {"workload", "w"}, {"interval_sec", "5"}, {"speedup", "1"}, {"violation_rate", "4"},
       {"poc", ""}, {"coverage", ""}, {"avm", ""}, {"run_length_sec", "10"}, {"violation_magnitude", "0"}},
      {{"policy", "a"}, {"workload", "w"}, {"interval_sec", "10"}, {"speedup", "3"}, {"violation_rate", "2"},
       {"poc", "20"}, {"coverage", "90"}, {"avm", "1.1"}, {"run_length_sec", "20"}, {"violation_magnitude", "1.5"}},
      {{"policy", "b"}, {"workload", "w"}, {"interval_sec", "10"}, {"speedup", "2"}, {"violation_rate", "0"},
       {"poc", ""}, {"coverage", ""}, {"avm", ""}, {"run_length_sec", "30"}, {"violation_magnitude", "0"}},
      {{"policy", "b"}, {"workload", "w"}, {"interval_sec", "5"}, {"speedup", "2"}, {"violation_rate", "0"},
       {"poc", ""}, {"coverage", ""}, {"avm", ""}, {"run_length_sec", "30"}, {"violation_magnitude", "0"}},
  };
  const auto rep = report_data(rows, {"policy"});
  REQUIRE(rep.size() == 2);
  CHECK(rep[0].at("n") == "2");
  CHECK(rep[0].at("speedup") == "2");
  CHECK(rep[0].at("violation_rate") == "3");
  CHECK(rep[0].at("poc") == "20");
  CHECK(rep[0].at("violation_magnitude") == "1.5");
  CHECK(rep[0].at("violation_magnitude_all") == "0.75");
  CHECK(rep[1].at("coverage") == "");

  const auto best = best_interval(rows);
  REQUIRE(best.size() == 2);
  CHECK(best[0].at("interval_sec") == "10");
  CHECK(best[1].at("interval_sec") == "5");  // tie goes to the shorter interval
}

TEST_CASE("matrix rows: cardinality, conventions and job independence") {
  auto cfg = parse_config(kSmall);
  const auto rows = run_matrix(cfg);
  CHECK(rows.size() == matrix_cardinality(cfg, 2, 2));
  for (const auto& r : rows) {
    if (r.policy == "static") {
      CHECK(r.report.speedup == 1.0);
      CHECK(std::isnan(r.gamma));
      CHECK(r.model.empty());
    }
    if (r.policy == "scope") CHECK(r.gamma == 0.5);
    if (r.policy == "scope-no") CHECK(std::isinf(r.gamma));
    if (r.policy == "offline") CHECK(r.offline_fraction == 0.25);
    if (r.policy != "offline") CHECK(std::isnan(r.offline_fraction));
    if (r.policy == "oracle") CHECK(r.model.empty());
    if (r.policy == "scope") CHECK(r.model == "gp");
  }
  cfg.jobs = 3;
  const auto again = run_matrix(cfg);
  REQUIRE(again.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(format_row(rows[i]) == format_row(again[i]));
}

TEST_CASE("sweeps vary one axis") {
  auto cfg = parse_config(kSmall);
  cfg.constraint_percentiles = {60};
  cfg.gamma_sweep = {0.0, 1.0};
  const auto g = sweep(SweepKind::gamma, cfg);
  for (const auto& r : g) CHECK(r.policy == "scope");
  CHECK(g.size() == 2 * 2 * 2);
  cfg.interval_sweep = {5, 20};
  const auto iv = sweep(SweepKind::interval, cfg);
  CHECK(iv.size() == 2 * 2 * 2 * cfg.policies.size());
  CHECK(parse_sweep_kind("offline-fraction") == SweepKind::offline_fraction);
  CHECK_THROWS_AS(parse_sweep_kind("beta"), std::invalid_argument);
}

TEST_CASE("execute writes reproducible outputs") {
  namespace fs = std::filesystem;
  auto cfg = parse_config(kSmall);
  const fs::path base = fs::temp_directory_path() / "scope_harness_test";
  fs::remove_all(base);
  cfg.output_dir = base / "a";
  const auto rows = execute(cfg, std::nullopt);
  cfg.output_dir = base / "b";
  cfg.jobs = 2;
  execute(cfg, std::nullopt);
  for (const char* f : {"results.csv", "workloads.yaml", "manifest.json", "timings.csv"})
    CHECK(fs::exists(base / "a" / f));
  CHECK(slurp(base / "a" / "results.csv") == slurp(base / "b" / "results.csv"));
  CHECK(read_csv(base / "a" / "results.csv").size() == rows.size());
  std::size_t traces = 0;
  for (const auto& e : fs::directory_iterator(base / "a" / "traces")) {
    (void)e;
    ++traces;
  }
  CHECK(traces == 2);
  fs::remove_all(base);
}
