#include "scope/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>
#include <json.hpp>

namespace scope::harness {

double PolicyConfig::effective_gamma() const {
  return kind == PolicyKind::scope_no ? std::numeric_limits<double>::infinity() : gamma;
}

void ExperimentConfig::validate() const {
  if (schema_version != kSchemaVersion) throw std::invalid_argument("unsupported schema_version");
  ConfigSpace{space};  // validates the parameter list
  if (policies.empty()) throw std::invalid_argument("no policies configured");
  if (constraint_percentiles.empty()) throw std::invalid_argument("no constraint percentiles configured");
  for (double p : constraint_percentiles)
    if (!(p >= 0.0 && p <= 100.0)) throw std::invalid_argument("constraint percentile outside [0, 100]");
  if (interval_sec < 1) throw std::invalid_argument("interval_sec must be at least 1");
  if (max_samples && *max_samples < 1) throw std::invalid_argument("max_samples must be at least 1");
  if (repetitions < 1) throw std::invalid_argument("repetitions must be at least 1");
  if (jobs < 1) throw std::invalid_argument("jobs must be at least 1");
  if (!(hyper.length_scale > 0.0) || !(hyper.noise_ratio >= 0.0) || !(hyper.ridge >= 0.0))
    throw std::invalid_argument("invalid model hyperparameters");
  for (const auto& p : policies) {
    if (!(p.gamma >= 0.0)) throw std::invalid_argument("gamma must be non-negative");
    if (!(p.offline_fraction > 0.0 && p.offline_fraction <= 1.0))
      throw std::invalid_argument("offline_fraction must be in (0, 1]");
    if (!(p.stage1_fraction >= 0.0)) throw std::invalid_argument("stage1_fraction must be non-negative");
    if (!(p.beta >= 0.0)) throw std::invalid_argument("beta must be non-negative");
    if (!(p.rapl_deadband >= 0.0 && p.rapl_deadband < 1.0)) throw std::invalid_argument("deadband must be in [0, 1)");
  }
  for (double g : gamma_sweep)
    if (!(g >= 0.0)) throw std::invalid_argument("gamma sweep values must be non-negative");
  for (int i : interval_sweep)
    if (i < 1) throw std::invalid_argument("interval sweep values must be at least 1");
  for (double f : offline_fraction_sweep)
    if (!(f > 0.0 && f <= 1.0)) throw std::invalid_argument("offline fraction sweep values must be in (0, 1]");
  if (starts.kind == StartRule::Kind::explicit_ids && starts.ids.empty())
    throw std::invalid_argument("explicit start rule needs ids");
  if (starts.kind == StartRule::Kind::bands && starts.fast + starts.slow == 0)
    throw std::invalid_argument("start rule selects no configurations");
}

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  for (PolicyKind k : kAllPolicies) cfg.policies.push_back(PolicyConfig{k});
  return cfg;
}

std::vector<sim::WorkloadSpec> resolve_workloads(const ExperimentConfig& cfg, const ConfigSpace& space) {
  const auto& src = cfg.workloads;
  std::vector<sim::WorkloadSpec> out;
  if (src.default_suite) out = sim::default_workloads(space, src.suite_seed, src.options);
  if (src.scenario) {
    for (auto& w : sim::scenario_generator(*src.scenario, space, src.scenario_seed, src.options))
      out.push_back(std::move(w));
  }
  for (const auto& w : src.explicit_workloads) out.push_back(w);
  if (out.empty()) throw std::invalid_argument("no workloads configured");
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (out[i].name == out[j].name) throw std::invalid_argument("duplicate workload name '" + out[i].name + "'");
  return out;
}

double percentile(std::vector<double> values, double pct) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty set");
  if (!(pct >= 0.0 && pct <= 100.0)) throw std::invalid_argument("percentile outside [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = pct / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<double> derive_constraints(const ConfigSpace& space, const sim::WorkloadSpec& w,
                                       std::span<const double> percentiles) {
  const auto truth = sim::profile_truth(w, space);
  std::vector<double> caps;
  for (double p : percentiles) caps.push_back(percentile(truth.max_power, p));
  return caps;
}

namespace {

std::vector<StartConfig> starts_from_truth(const sim::TruthTable& truth, double cap, const StartRule& rule,
                                           std::uint64_t seed) {
  std::vector<StartConfig> out;
  if (rule.kind == StartRule::Kind::explicit_ids) {
    for (ConfigId id : rule.ids) {
      if (id >= truth.latency.size()) throw std::invalid_argument("explicit start id outside the grid");
      out.push_back({id, "explicit"});
    }
    return out;
  }
  std::vector<ConfigId> safe;
  std::vector<double> lat;
  for (ConfigId id = 0; id < truth.max_power.size(); ++id) {
    if (truth.max_power[id] < cap) {
      safe.push_back(id);
      lat.push_back(truth.latency[id]);
    }
  }
  if (safe.empty()) throw std::runtime_error("no truly safe configuration under the cap");
  const double fast_cut = percentile(lat, rule.fast_percentile);
  const double slow_cut = percentile(lat, rule.slow_percentile);
  std::vector<ConfigId> fast, slow;
  for (std::size_t i = 0; i < safe.size(); ++i) {
    if (lat[i] <= fast_cut) fast.push_back(safe[i]);
    if (lat[i] >= slow_cut) slow.push_back(safe[i]);
  }
  std::mt19937_64 rng(seed);
  auto draw = [&](std::vector<ConfigId> pool, std::size_t count, const char* kind) {
    count = std::min(count, pool.size());
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = std::uniform_int_distribution<std::size_t>(i, pool.size() - 1)(rng);
      std::swap(pool[i], pool[j]);
      out.push_back({pool[i], kind});
    }
  };
  draw(std::move(fast), rule.fast, "fast");
  draw(std::move(slow), rule.slow, "slow");
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Variant {
  PolicyConfig policy;
  int interval_sec;
  int max_samples;
};

bool uses_model(PolicyKind k) {
  return k == PolicyKind::scope || k == PolicyKind::scope_no || k == PolicyKind::bo || k == PolicyKind::stageopt ||
         k == PolicyKind::offline;
}

std::vector<Variant> variants_for(const ExperimentConfig& cfg, std::optional<SweepKind> kind) {
  const int n_default = cfg.max_samples.value_or(cfg.interval_sec);
  std::vector<Variant> out;
  if (!kind) {
    for (const auto& p : cfg.policies) out.push_back({p, cfg.interval_sec, n_default});
    return out;
  }
  auto first_of = [&](PolicyKind k) {
    for (const auto& p : cfg.policies)
      if (p.kind == k) return p;
    return PolicyConfig{k};
  };
  switch (*kind) {
    case SweepKind::gamma: {
      auto base = first_of(PolicyKind::scope);
      for (double g : cfg.gamma_sweep) {
        base.gamma = g;
        out.push_back({base, cfg.interval_sec, n_default});
      }
      break;
    }
    case SweepKind::interval:
      for (int interval : cfg.interval_sweep)
        for (const auto& p : cfg.policies) out.push_back({p, interval, cfg.max_samples.value_or(interval)});
      break;
    case SweepKind::model: {
      std::vector<PolicyConfig> base;
      for (const auto& p : cfg.policies)
        if (uses_model(p.kind)) base.push_back(p);
      if (base.empty()) base.push_back(PolicyConfig{PolicyKind::scope});
      for (auto p : base)
        for (ModelKind m : cfg.model_sweep) {
          p.model = m;
          out.push_back({p, cfg.interval_sec, n_default});
        }
      break;
    }
    case SweepKind::offline_fraction: {
      auto base = first_of(PolicyKind::offline);
      for (double f : cfg.offline_fraction_sweep) {
        base.offline_fraction = f;
        out.push_back({base, cfg.interval_sec, n_default});
      }
      break;
    }
  }
  return out;
}

struct WorkloadContext {
  sim::WorkloadSpec spec;
  sim::TruthTable truth;
  std::vector<double> caps;
  std::vector<std::vector<StartConfig>> starts;  // per cap
};

struct OfflineMeans {
  std::vector<double> safety;
  std::vector<double> objective;
};

using OfflineKey = std::tuple<std::size_t, double, ModelKind>;

struct Group {
  std::size_t workload;
  std::size_t cap_index;
  std::size_t start_index;
  int rep;
};

struct GroupOutput {
  std::vector<ResultRow> rows;
  std::vector<std::optional<sim::Trace>> traces;
};

std::unique_ptr<Policy> make_policy(const Variant& v, const ConfigSpace& space, const WorkloadContext& wc,
                                    std::size_t wi, double cap, ConfigId x0, const Hyperparameters& hyper,
                                    const std::map<OfflineKey, OfflineMeans>& offline) {
  const auto& p = v.policy;
  switch (p.kind) {
    case PolicyKind::static_config:
      return std::make_unique<StaticPolicy>(x0);
    case PolicyKind::offline: {
      const auto& m = offline.at({wi, p.offline_fraction, p.model});
      return std::make_unique<OfflinePolicy>(cap, m.safety, m.objective);
    }
    case PolicyKind::rapl_like:
      return std::make_unique<RaplLikePolicy>(space, x0, cap, p.rapl_deadband);
    case PolicyKind::bo:
      return std::make_unique<BoPolicy>(space, x0, p.model, hyper);
    case PolicyKind::stageopt: {
      std::size_t len = 0;
      if (p.stage1_len) {
        len = *p.stage1_len;
      } else {
        const double expected = std::ceil(wc.truth.latency[x0] / static_cast<double>(v.interval_sec));
        len = static_cast<std::size_t>(std::ceil(p.stage1_fraction * expected));
      }
      return std::make_unique<StageOptPolicy>(space, x0, cap, v.max_samples, len, p.beta, p.model, hyper);
    }
    case PolicyKind::scope_no:
    case PolicyKind::scope:
      return std::make_unique<ScopePolicy>(space, x0, cap, p.effective_gamma(), v.max_samples, p.model, hyper);
    case PolicyKind::oracle:
      return std::make_unique<OraclePolicy>(oracle_choice(wc.truth.max_power, wc.truth.latency, cap));
  }
  throw std::invalid_argument("unknown policy kind");
}

bool wants_trace(const ExperimentConfig& cfg, PolicyKind k) {
  return cfg.traces.max_runs > 0 &&
         std::find(cfg.traces.policies.begin(), cfg.traces.policies.end(), k) != cfg.traces.policies.end();
}

std::vector<ResultRow> run_variants(const ExperimentConfig& cfg, const std::vector<Variant>& variants,
                                    const RowSink& sink) {
  cfg.validate();
  const ConfigSpace space(cfg.space);
  auto specs = resolve_workloads(cfg, space);

  std::vector<WorkloadContext> contexts;
  for (auto& spec : specs) {
    WorkloadContext wc;
    wc.truth = sim::profile_truth(spec, space);
    for (double pct : cfg.constraint_percentiles) {
      const double cap = percentile(wc.truth.max_power, pct);
      wc.caps.push_back(cap);
      const auto seed = derive_seed(cfg.master_seed, fmt::format("starts|{}|{}", spec.name, pct));
      wc.starts.push_back(starts_from_truth(wc.truth, cap, cfg.starts, seed));
    }
    wc.spec = std::move(spec);
    contexts.push_back(std::move(wc));
  }

  std::map<OfflineKey, OfflineMeans> offline;
  for (std::size_t wi = 0; wi < contexts.size(); ++wi) {
    for (const auto& v : variants) {
      if (v.policy.kind != PolicyKind::offline) continue;
      const OfflineKey key{wi, v.policy.offline_fraction, v.policy.model};
      if (offline.count(key)) continue;
      const auto& w = contexts[wi].spec;
      const auto seed = derive_seed(cfg.master_seed, fmt::format("offline|{}|{}", w.name, v.policy.offline_fraction));
      const auto [power, work] = sim::offline_profile(w, space, v.policy.offline_fraction, seed);
      const auto f_y = fit(v.policy.model, power, cfg.hyper);
      const auto f_z = fit(v.policy.model, work, cfg.hyper);
      offline[key] = {f_y->predict_mean_batch(space.norm_matrix(), space.dims()),
                      f_z->predict_mean_batch(space.norm_matrix(), space.dims())};
    }
  }

  std::vector<Group> groups;
  for (std::size_t wi = 0; wi < contexts.size(); ++wi)
    for (std::size_t ci = 0; ci < contexts[wi].caps.size(); ++ci)
      for (std::size_t si = 0; si < contexts[wi].starts[ci].size(); ++si)
        for (int rep = 0; rep < cfg.repetitions; ++rep) groups.push_back({wi, ci, si, rep});

  std::vector<ResultRow> all;
  all.reserve(groups.size() * variants.size());
  std::map<std::size_t, GroupOutput> pending;
  std::size_t next_to_emit = 0;
  std::size_t traces_emitted = 0;
  std::mutex mu;
  std::exception_ptr error;

  auto emit_ready = [&] {
    // caller holds mu
    while (!pending.empty() && pending.begin()->first == next_to_emit) {
      auto out = std::move(pending.begin()->second);
      pending.erase(pending.begin());
      for (std::size_t i = 0; i < out.rows.size(); ++i) {
        const sim::Trace* trace = nullptr;
        if (out.traces[i] && traces_emitted < cfg.traces.max_runs) {
          trace = &*out.traces[i];
          ++traces_emitted;
        }
        if (sink) sink(out.rows[i], trace);
        all.push_back(std::move(out.rows[i]));
      }
      ++next_to_emit;
    }
  };

  const auto n_groups = static_cast<std::ptrdiff_t>(groups.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(cfg.jobs)
  for (std::ptrdiff_t gi = 0; gi < n_groups; ++gi) {
    {
      std::lock_guard lock(mu);
      if (error) continue;
    }
    try {
      const Group& g = groups[static_cast<std::size_t>(gi)];
      const WorkloadContext& wc = contexts[g.workload];
      const double pct = cfg.constraint_percentiles[g.cap_index];
      const double cap = wc.caps[g.cap_index];
      const StartConfig& start = wc.starts[g.cap_index][g.start_index];
      const auto seed =
          derive_seed(cfg.master_seed, fmt::format("{}|{}|{}|{}", wc.spec.name, pct, start.id, g.rep));

      sim::RunParams params;
      params.cap = cap;
      params.x0 = start.id;
      params.seed = seed;
      params.interval_sec = cfg.interval_sec;
      params.max_samples = cfg.max_samples.value_or(cfg.interval_sec);
      StaticPolicy baseline(start.id);
      const double l_static = static_cast<double>(sim::run_experiment(baseline, wc.spec, space, params).length());

      GroupOutput out;
      for (const auto& v : variants) {
        params.interval_sec = v.interval_sec;
        params.max_samples = v.max_samples;
        auto policy = make_policy(v, space, wc, g.workload, cap, start.id, cfg.hyper, offline);
        sim::Trace trace = sim::run_experiment(*policy, wc.spec, space, params);

        ResultRow row;
        row.policy = std::string(to_string(v.policy.kind));
        row.workload = wc.spec.name;
        row.percentile = pct;
        row.cap = cap;
        row.start_id = start.id;
        row.start_kind = start.kind;
        const bool scope_family = v.policy.kind == PolicyKind::scope || v.policy.kind == PolicyKind::scope_no;
        row.gamma = scope_family ? v.policy.effective_gamma() : metrics::kUndefined;
        row.interval_sec = v.interval_sec;
        row.max_samples = v.max_samples;
        row.model = uses_model(v.policy.kind) ? std::string(to_string(v.policy.model)) : std::string();
        row.offline_fraction = v.policy.kind == PolicyKind::offline ? v.policy.offline_fraction : metrics::kUndefined;
        row.rep = g.rep;
        row.seed = seed;
        row.report = metrics::evaluate(trace, l_static, wc.spec, space);
        row.intervals = trace.intervals.size();
        double us = 0.0;
        for (const auto& iv : trace.intervals) us += iv.decision_us;
        row.decision_us_mean = trace.intervals.empty() ? 0.0 : us / static_cast<double>(trace.intervals.size());

        out.rows.push_back(std::move(row));
        if (wants_trace(cfg, v.policy.kind)) {
          out.traces.emplace_back(std::move(trace));
        } else {
          out.traces.emplace_back(std::nullopt);
        }
      }
      std::lock_guard lock(mu);
      pending.emplace(static_cast<std::size_t>(gi), std::move(out));
      emit_ready();
    } catch (...) {
      std::lock_guard lock(mu);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return all;
}

}  // namespace

std::vector<StartConfig> derive_start_configs(const ConfigSpace& space, const sim::WorkloadSpec& w, double cap,
                                              const StartRule& rule, std::uint64_t seed) {
  return starts_from_truth(sim::profile_truth(w, space), cap, rule, seed);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view key) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : key) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(h ^ splitmix64(master));
}

SweepKind parse_sweep_kind(std::string_view text) {
  if (text == "gamma") return SweepKind::gamma;
  if (text == "interval") return SweepKind::interval;
  if (text == "model") return SweepKind::model;
  if (text == "offline-fraction" || text == "offline_fraction") return SweepKind::offline_fraction;
  throw std::invalid_argument("unknown sweep kind '" + std::string(text) + "'");
}

std::string_view to_string(SweepKind kind) {
  switch (kind) {
    case SweepKind::gamma:
      return "gamma";
    case SweepKind::interval:
      return "interval";
    case SweepKind::model:
      return "model";
    case SweepKind::offline_fraction:
      return "offline-fraction";
  }
  return "unknown";
}

std::size_t matrix_cardinality(const ExperimentConfig& cfg, std::size_t workload_count, std::size_t starts_per_cap) {
  return workload_count * cfg.constraint_percentiles.size() * starts_per_cap *
         static_cast<std::size_t>(cfg.repetitions) * cfg.policies.size();
}

std::vector<ResultRow> run_matrix(const ExperimentConfig& cfg, const RowSink& sink) {
  return run_variants(cfg, variants_for(cfg, std::nullopt), sink);
}

std::vector<ResultRow> sweep(SweepKind kind, const ExperimentConfig& cfg, const RowSink& sink) {
  return run_variants(cfg, variants_for(cfg, kind), sink);
}

namespace {

nlohmann::json manifest(const ExperimentConfig& cfg, std::optional<SweepKind> kind, std::size_t rows) {
  using nlohmann::json;
  json j;
  j["schema_version"] = kSchemaVersion;
  j["master_seed"] = cfg.master_seed;
  j["sweep"] = kind ? json(std::string(to_string(*kind))) : json(nullptr);
  j["rows"] = rows;
  json space = json::array();
  for (const auto& p : cfg.space) space.push_back({{"name", p.name}, {"values", p.values}});
  j["space"] = space;
  json policies = json::array();
  for (const auto& p : cfg.policies) {
    json e{{"kind", std::string(to_string(p.kind))},
           {"model", std::string(to_string(p.model))},
           {"stage1_fraction", p.stage1_fraction},
           {"beta", p.beta},
           {"offline_fraction", p.offline_fraction},
           {"deadband", p.rapl_deadband}};
    e["gamma"] = std::isinf(p.effective_gamma()) ? json("inf") : json(p.gamma);
    e["stage1_len"] = p.stage1_len ? json(*p.stage1_len) : json(nullptr);
    policies.push_back(e);
  }
  j["policies"] = policies;
  j["constraint_percentiles"] = cfg.constraint_percentiles;
  j["starts"] = {{"rule", cfg.starts.kind == StartRule::Kind::bands ? "bands" : "explicit"},
                 {"fast", cfg.starts.fast},
                 {"slow", cfg.starts.slow},
                 {"fast_percentile", cfg.starts.fast_percentile},
                 {"slow_percentile", cfg.starts.slow_percentile},
                 {"ids", cfg.starts.ids}};
  j["interval_sec"] = cfg.interval_sec;
  j["max_samples"] = cfg.max_samples.value_or(cfg.interval_sec);
  j["repetitions"] = cfg.repetitions;
  j["model"] = {{"length_scale", cfg.hyper.length_scale},
                {"noise_ratio", cfg.hyper.noise_ratio},
                {"ridge", cfg.hyper.ridge},
                {"jitter_start", kJitterStart},
                {"jitter_max", kJitterMax}};
  j["sweeps"] = {{"gamma", cfg.gamma_sweep},
                 {"interval", cfg.interval_sweep},
                 {"offline_fraction", cfg.offline_fraction_sweep}};
  json models = json::array();
  for (ModelKind m : cfg.model_sweep) models.push_back(std::string(to_string(m)));
  j["sweeps"]["model"] = models;
  j["workloads_file"] = "workloads.yaml";
  return j;
}

std::string fmt_num(double v) { return std::isnan(v) ? std::string() : fmt::format("{}", v); }

}  // namespace

std::vector<ResultRow> execute(const ExperimentConfig& cfg, std::optional<SweepKind> sweep_kind) {
  namespace fs = std::filesystem;
  cfg.validate();
  fs::create_directories(cfg.output_dir);

  const ConfigSpace space(cfg.space);
  {
    std::ofstream wf(cfg.output_dir / "workloads.yaml");
    wf << workload_to_yaml(resolve_workloads(cfg, space));
  }

  std::ofstream results(cfg.output_dir / "results.csv", std::ios::binary);
  std::ofstream timings(cfg.output_dir / "timings.csv", std::ios::binary);
  if (!results || !timings) throw std::runtime_error("cannot write to " + cfg.output_dir.string());
  results << results_header() << '\n';
  timings << "row,policy,workload,percentile,start_id,rep,intervals,decision_us_mean\n";

  const fs::path trace_dir = cfg.output_dir / "traces";
  if (cfg.traces.max_runs > 0) fs::create_directories(trace_dir);

  std::size_t index = 0;
  auto sink = [&](const ResultRow& row, const sim::Trace* trace) {
    results << format_row(row) << '\n';
    timings << fmt::format("{},{},{},{},{},{},{},{}\n", index, row.policy, row.workload, fmt_num(row.percentile),
                           row.start_id, row.rep, row.intervals, row.decision_us_mean);
    if (trace) {
      std::ofstream tf(trace_dir / fmt::format("{:06}_{}_{}.csv", index, row.policy, row.workload), std::ios::binary);
      tf << trace_header() << '\n';
      for (const auto& s : trace->seconds)
        tf << fmt::format("{},{},{},{},{},{},{}\n", s.t, s.config, s.true_power, s.measured_power, s.work_done,
                          s.violated ? 1 : 0, s.interval);
    }
    ++index;
  };

  auto rows = sweep_kind ? sweep(*sweep_kind, cfg, sink) : run_matrix(cfg, sink);

  std::ofstream mf(cfg.output_dir / "manifest.json");
  mf << manifest(cfg, sweep_kind, rows.size()).dump(2) << '\n';
  return rows;
}

}  // namespace scope::harness
