#include <doctest.h>

#include <algorithm>
#include <limits>
#include <random>

#include "scope/controller.hpp"
#include "scope/harness.hpp"
#include "scope/sim.hpp"

using namespace scope;

namespace {

bool same_seconds(const sim::Trace& a, const sim::Trace& b) {
  if (a.seconds.size() != b.seconds.size()) return false;
  for (std::size_t i = 0; i < a.seconds.size(); ++i) {
    const auto &x = a.seconds[i], &y = b.seconds[i];
    if (x.t != y.t || x.config != y.config || x.true_power != y.true_power || x.measured_power != y.measured_power ||
        x.work_done != y.work_done || x.violated != y.violated || x.interval != y.interval)
      return false;
  }
  return true;
}

struct Fixture {
  ConfigSpace space{default_params()};
  std::vector<sim::WorkloadSpec> workloads = sim::default_workloads(space);
};

}  // namespace

TEST_CASE("policy names round trip") {
  for (PolicyKind k : kAllPolicies) CHECK(parse_policy_kind(to_string(k)) == k);
  CHECK(parse_policy_kind("rapl") == PolicyKind::rapl_like);
  CHECK_THROWS_AS(parse_policy_kind("greedy"), std::invalid_argument);
}

TEST_CASE("selection from the safe set") {
  const std::vector<double> y{5, 1, 1, 9, 3};
  const std::vector<double> z{2, 7, 7, 1, 4};
  auto fy = [&](ConfigId id) { return y[id]; };
  auto fz = [&](ConfigId id) { return z[id]; };
  const std::vector<ConfigId> safe{0, 2, 1, 4};
  CHECK(select_from_safe_set(safe, std::vector<ConfigId>{0, 1, 2, 3, 4}, fy, fz, 3) == 1);  // tie -> lower id
  CHECK(select_from_safe_set({}, std::vector<ConfigId>{0, 3, 4}, fy, fz, 1) == 4);
  CHECK(select_from_safe_set({}, std::vector<ConfigId>{2, 1}, fy, fz, 0) == 1);
  CHECK(select_from_safe_set({}, {}, fy, fz, 3) == 3);
}

TEST_CASE("safe-exploration step bookkeeping") {
  const ConfigSpace space({ParamSpec::linspace("a", 0, 2, 3), ParamSpec::linspace("b", 0, 2, 3)});
  GridSurrogate fy(ModelKind::gaussian_process, space, {});
  GridSurrogate fz(ModelKind::gaussian_process, space, {});
  ControlState st(space, 4, 100.0, 0.5, 10);

  // Unsafe reading at the start: x_s stays, the point is still marked sampled.
  auto d = scope_step(st, {150.0, 1.0, true, 1}, fy, fz);
  CHECK(st.x_s == 4);
  CHECK(st.sampled_mask[4] == 1);
  CHECK(st.interval_index == 1);
  REQUIRE(d.stats);
  CHECK(d.stats->candidate_count == 4);
  for (ConfigId id : d.stats->safe) CHECK(id != 4);

  // Safe reading moves x_s to the configuration just run.
  st.current = 1;
  d = scope_step(st, {50.0, 2.0, false, 10}, fy, fz);
  CHECK(st.x_s == 1);
  CHECK(st.sampled.size() == 2);
  CHECK(d.stats->candidate_count == 2);  // {0, 2}; 4 is sampled
  CHECK(std::find(d.stats->safe.begin(), d.stats->safe.end(), d.next) != d.stats->safe.end());

  CHECK_THROWS_AS(ControlState(space, 9, 1.0, 0.5, 1), std::out_of_range);
  CHECK_THROWS_AS(ControlState(space, 0, 1.0, -1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(ControlState(space, 0, 1.0, 0.5, 0), std::invalid_argument);
  CHECK_THROWS_AS(st.record({std::nan(""), 0.0, false, 1}), std::invalid_argument);
}

TEST_CASE("gamma zero reproduces the static policy") {
  Fixture f;
  for (std::size_t wi = 0; wi < 3; ++wi) {
    const auto& w = f.workloads[wi];
    const auto truth = sim::profile_truth(w, f.space);
    const double cap = harness::percentile(truth.max_power, 60);
    const auto starts = harness::derive_start_configs(f.space, w, cap, {}, 7);
    sim::RunParams p{cap, 10, 10, starts.front().id, 99};
    StaticPolicy st(p.x0);
    ScopePolicy sc(f.space, p.x0, cap, 0.0, 10, ModelKind::gaussian_process, {});
    CHECK(same_seconds(sim::run_experiment(st, w, f.space, p), sim::run_experiment(sc, w, f.space, p)));
  }
}

TEST_CASE("infinite gamma equals a ball larger than the grid") {
  Fixture f;
  const auto& w = f.workloads[1];
  const auto truth = sim::profile_truth(w, f.space);
  const double cap = harness::percentile(truth.max_power, 50);
  const auto starts = harness::derive_start_configs(f.space, w, cap, {}, 3);
  sim::RunParams p{cap, 10, 10, starts.front().id, 5};
  ScopePolicy no(f.space, p.x0, cap, std::numeric_limits<double>::infinity(), 10, ModelKind::gaussian_process, {});
  ScopePolicy big(f.space, p.x0, cap, 2.0 * f.space.diameter(), 10, ModelKind::gaussian_process, {});
  CHECK(no.kind() == PolicyKind::scope_no);
  CHECK(big.kind() == PolicyKind::scope);
  CHECK(same_seconds(sim::run_experiment(no, w, f.space, p), sim::run_experiment(big, w, f.space, p)));
}

TEST_CASE("oracle choice matches brute force") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 100);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> power(40), lat(40);
    for (auto& v : power) v = u(rng);
    for (auto& v : lat) v = std::floor(u(rng));  // force ties
    const double cap = u(rng);
    ConfigId want = 0;
    bool any = false;
    for (ConfigId i = 0; i < 40; ++i)
      if (power[i] < cap && (!any || lat[i] < lat[want])) want = i, any = true;
    if (!any) want = static_cast<ConfigId>(std::min_element(power.begin(), power.end()) - power.begin());
    CHECK(oracle_choice(power, lat, cap) == want);
  }
  CHECK_THROWS_AS(oracle_choice(std::vector<double>{1.0}, std::vector<double>{}, 1.0), std::invalid_argument);
}

TEST_CASE("offline policy picks the best predicted-safe configuration") {
  const std::vector<double> y{90, 120, 80, 99};
  const std::vector<double> z{1, 9, 2, 3};
  CHECK(OfflinePolicy(100.0, y, z).choice() == 3);
  CHECK(OfflinePolicy(10.0, y, z).choice() == 2);  // nothing predicted safe: lowest predicted power
}

TEST_CASE("rapl-like controller steps cpu then uncore") {
  const ConfigSpace space(default_params());
  const auto cpu = *space.find_param(param_names::cpu_freq);
  const auto unc = *space.find_param(param_names::uncore_freq);
  ConfigId x = space.with_level(space.with_level(0, cpu, 1), unc, 2);
  RaplLikePolicy r(space, x, 100.0, 0.05);
  ConfigId n = r.decide({120.0, 1.0, true, 1}).next;
  CHECK(space.level(n, cpu) == 0);
  n = r.decide({120.0, 1.0, true, 1}).next;
  CHECK(space.level(n, cpu) == 0);
  CHECK(space.level(n, unc) == 1);
  n = r.decide({97.0, 1.0, false, 10}).next;  // inside the deadband: hold
  CHECK(space.level(n, unc) == 1);
  n = r.decide({50.0, 1.0, false, 10}).next;
  CHECK(space.level(n, cpu) == 1);
}

TEST_CASE("bayesian optimization never revisits and tracks the best reading") {
  const ConfigSpace space({ParamSpec::linspace("a", 0, 1, 5), ParamSpec::linspace("b", 0, 1, 4)});
  GridSurrogate obj(ModelKind::gaussian_process, space, {});
  BoState st(space, 0);
  std::vector<ConfigId> seen{0};
  for (int i = 0; i < 10; ++i) {
    const double z = space.norm(st.current)[0] + 2.0 * space.norm(st.current)[1];
    const ConfigId next = bo_step(st, z, obj);
    CHECK(std::find(seen.begin(), seen.end(), next) == seen.end());
    seen.push_back(next);
  }
  CHECK(st.best_z >= -1.5);
  CHECK_THROWS_AS(bo_step(st, std::nan(""), obj), std::invalid_argument);
}

TEST_CASE("stageopt freezes its safe set after the expansion stage") {
  Fixture f;
  const auto& w = f.workloads[0];
  const auto truth = sim::profile_truth(w, f.space);
  const double cap = harness::percentile(truth.max_power, 60);
  const auto x0 = harness::derive_start_configs(f.space, w, cap, {}, 1).front().id;
  StageOptPolicy p(f.space, x0, cap, 10, 3, 2.0, ModelKind::gaussian_process, {});
  const IntervalReading safe{0.5 * cap, 1.0, false, 10};
  for (int i = 0; i < 3; ++i) {
    p.decide(safe);
    CHECK_FALSE(p.frozen());
  }
  const auto a = p.decide(safe);
  CHECK(p.frozen());
  const auto b = p.decide({2.0 * cap, 1.0, true, 1});
  REQUIRE(a.stats);
  REQUIRE(b.stats);
  CHECK(a.stats->safe == b.stats->safe);
}
