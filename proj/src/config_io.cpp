#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include <yaml-cpp/yaml.h>

#include "scope/harness.hpp"

namespace scope::harness {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw std::invalid_argument("config: " + where + ": " + what);
}

void check_keys(const YAML::Node& node, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!node.IsMap()) fail(where, "expected a table");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!ok.count(key)) fail(where, "unknown key '" + key + "'");
  }
}

template <typename T>
T get(const YAML::Node& node, const char* key, const std::string& where, T fallback) {
  const YAML::Node v = node[key];
  if (!v) return fallback;
  try {
    return v.as<T>();
  } catch (const YAML::Exception& e) {
    fail(where + "." + key, e.what());
  }
}

template <typename T>
std::vector<T> get_list(const YAML::Node& node, const char* key, const std::string& where, std::vector<T> fallback) {
  const YAML::Node v = node[key];
  if (!v) return fallback;
  if (!v.IsSequence()) fail(where + "." + key, "expected a list");
  try {
    return v.as<std::vector<T>>();
  } catch (const YAML::Exception& e) {
    fail(where + "." + key, e.what());
  }
}

ParamSpec parse_param(const YAML::Node& n, const std::string& where) {
  check_keys(n, where, {"name", "min", "max", "steps", "values"});
  const auto name = get<std::string>(n, "name", where, "");
  if (name.empty()) fail(where, "parameter needs a name");
  if (n["values"]) return ParamSpec{name, get_list<double>(n, "values", where, {})};
  if (!n["min"] || !n["max"] || !n["steps"]) fail(where, "give either values or min/max/steps");
  return ParamSpec::linspace(name, n["min"].as<double>(), n["max"].as<double>(), n["steps"].as<std::size_t>());
}

sim::Phase parse_phase(const YAML::Node& n, const std::string& where) {
  check_keys(n, where, {"start_work", "power", "work", "power_noise", "work_noise"});
  sim::Phase ph;
  ph.start_work = get(n, "start_work", where, 0.0);
  if (const auto p = n["power"]) {
    check_keys(p, where + ".power", {"idle", "dynamic", "uncore", "hyperthread"});
    ph.power.idle = get(p, "idle", where, ph.power.idle);
    ph.power.dynamic = get(p, "dynamic", where, ph.power.dynamic);
    ph.power.uncore = get(p, "uncore", where, ph.power.uncore);
    ph.power.hyperthread = get(p, "hyperthread", where, ph.power.hyperthread);
  }
  if (const auto w = n["work"]) {
    check_keys(w, where + ".work",
               {"scale", "parallelism", "freq_exponent", "ceiling", "uncore_exponent", "ht_factor"});
    ph.work.scale = get(w, "scale", where, ph.work.scale);
    ph.work.parallelism = get(w, "parallelism", where, ph.work.parallelism);
    ph.work.freq_exponent = get(w, "freq_exponent", where, ph.work.freq_exponent);
    ph.work.ceiling = get(w, "ceiling", where, ph.work.ceiling);
    ph.work.uncore_exponent = get(w, "uncore_exponent", where, ph.work.uncore_exponent);
    ph.work.ht_factor = get(w, "ht_factor", where, ph.work.ht_factor);
  }
  ph.power_noise = get(n, "power_noise", where, ph.power_noise);
  ph.work_noise = get(n, "work_noise", where, ph.work_noise);
  return ph;
}

sim::WorkloadSpec parse_workload(const YAML::Node& n, const std::string& where) {
  check_keys(n, where, {"name", "total_work", "seed", "phases"});
  sim::WorkloadSpec w;
  w.name = get<std::string>(n, "name", where, "");
  if (w.name.empty()) fail(where, "workload needs a name");
  w.total_work = get(n, "total_work", where, 0.0);
  w.seed = get<std::uint64_t>(n, "seed", where, 0);
  const auto phases = n["phases"];
  if (!phases || !phases.IsSequence()) fail(where, "workload needs a phases list");
  for (std::size_t i = 0; i < phases.size(); ++i)
    w.phases.push_back(parse_phase(phases[i], where + ".phases[" + std::to_string(i) + "]"));
  try {
    w.validate();
  } catch (const std::invalid_argument& e) {
    fail(where, e.what());
  }
  return w;
}

PolicyConfig parse_policy(const YAML::Node& n, const std::string& where) {
  if (n.IsScalar()) return PolicyConfig{parse_policy_kind(n.as<std::string>())};
  check_keys(n, where,
             {"kind", "gamma", "model", "stage1_fraction", "stage1_len", "beta", "offline_fraction", "deadband"});
  PolicyConfig p;
  try {
    p.kind = parse_policy_kind(get<std::string>(n, "kind", where, ""));
    p.model = parse_model_kind(get<std::string>(n, "model", where, "gp"));
  } catch (const std::invalid_argument& e) {
    fail(where, e.what());
  }
  p.gamma = get(n, "gamma", where, p.gamma);
  p.stage1_fraction = get(n, "stage1_fraction", where, p.stage1_fraction);
  if (n["stage1_len"]) p.stage1_len = n["stage1_len"].as<std::size_t>();
  p.beta = get(n, "beta", where, p.beta);
  p.offline_fraction = get(n, "offline_fraction", where, p.offline_fraction);
  p.rapl_deadband = get(n, "deadband", where, p.rapl_deadband);
  return p;
}

void emit_workload(YAML::Emitter& out, const sim::WorkloadSpec& w) {
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << w.name;
  out << YAML::Key << "total_work" << YAML::Value << w.total_work;
  out << YAML::Key << "seed" << YAML::Value << w.seed;
  out << YAML::Key << "phases" << YAML::Value << YAML::BeginSeq;
  for (const auto& ph : w.phases) {
    out << YAML::BeginMap;
    out << YAML::Key << "start_work" << YAML::Value << ph.start_work;
    out << YAML::Key << "power" << YAML::Value << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "idle" << YAML::Value << ph.power.idle;
    out << YAML::Key << "dynamic" << YAML::Value << ph.power.dynamic;
    out << YAML::Key << "uncore" << YAML::Value << ph.power.uncore;
    out << YAML::Key << "hyperthread" << YAML::Value << ph.power.hyperthread;
    out << YAML::EndMap;
    out << YAML::Key << "work" << YAML::Value << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "scale" << YAML::Value << ph.work.scale;
    out << YAML::Key << "parallelism" << YAML::Value << ph.work.parallelism;
    out << YAML::Key << "freq_exponent" << YAML::Value << ph.work.freq_exponent;
    out << YAML::Key << "ceiling" << YAML::Value << ph.work.ceiling;
    out << YAML::Key << "uncore_exponent" << YAML::Value << ph.work.uncore_exponent;
    out << YAML::Key << "ht_factor" << YAML::Value << ph.work.ht_factor;
    out << YAML::EndMap;
    out << YAML::Key << "power_noise" << YAML::Value << ph.power_noise;
    out << YAML::Key << "work_noise" << YAML::Value << ph.work_noise;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
}

}  // namespace

std::string workload_to_yaml(const std::vector<sim::WorkloadSpec>& workloads) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap << YAML::Key << "list" << YAML::Value << YAML::BeginSeq;
  for (const auto& w : workloads) emit_workload(out, w);
  out << YAML::EndSeq << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::vector<sim::WorkloadSpec> workloads_from_yaml(const std::string& yaml_text) {
  const YAML::Node root = YAML::Load(yaml_text);
  const auto list = root["list"];
  if (!list || !list.IsSequence()) fail("workloads", "expected a 'list' sequence");
  std::vector<sim::WorkloadSpec> out;
  for (std::size_t i = 0; i < list.size(); ++i)
    out.push_back(parse_workload(list[i], "workloads.list[" + std::to_string(i) + "]"));
  return out;
}

ExperimentConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    fail("file", e.what());
  }
  if (!root || root.IsNull()) return ExperimentConfig{};
  check_keys(root, "root",
             {"schema_version", "master_seed", "output_dir", "jobs", "interval_sec", "max_samples", "repetitions",
              "constraint_percentiles", "space", "workloads", "policies", "starts", "model", "sweeps", "traces"});

  ExperimentConfig cfg;
  cfg.schema_version = get(root, "schema_version", "root", kSchemaVersion);
  if (cfg.schema_version != kSchemaVersion) fail("root", "unsupported schema_version");
  cfg.master_seed = get<std::uint64_t>(root, "master_seed", "root", cfg.master_seed);
  cfg.output_dir = get<std::string>(root, "output_dir", "root", cfg.output_dir.string());
  cfg.jobs = get(root, "jobs", "root", cfg.jobs);
  cfg.interval_sec = get(root, "interval_sec", "root", cfg.interval_sec);
  if (root["max_samples"]) cfg.max_samples = root["max_samples"].as<int>();
  cfg.repetitions = get(root, "repetitions", "root", cfg.repetitions);
  cfg.constraint_percentiles = get_list<double>(root, "constraint_percentiles", "root", cfg.constraint_percentiles);

  if (const auto s = root["space"]) {
    check_keys(s, "space", {"params"});
    const auto params = s["params"];
    if (!params || !params.IsSequence()) fail("space", "expected a params list");
    cfg.space.clear();
    for (std::size_t i = 0; i < params.size(); ++i)
      cfg.space.push_back(parse_param(params[i], "space.params[" + std::to_string(i) + "]"));
  }

  if (const auto w = root["workloads"]) {
    check_keys(w, "workloads",
               {"default_suite", "suite_seed", "scenario", "noise", "median_seconds", "ranges", "list"});
    auto& src = cfg.workloads;
    src.default_suite = get(w, "default_suite", "workloads", false);
    src.suite_seed = get<std::uint64_t>(w, "suite_seed", "workloads", src.suite_seed);
    src.options.noise = get(w, "noise", "workloads", src.options.noise);
    src.options.median_seconds = get(w, "median_seconds", "workloads", src.options.median_seconds);
    if (const auto r = w["ranges"]) {
      check_keys(r, "workloads.ranges",
                 {"idle", "dynamic", "uncore", "hyperthread", "scale", "parallelism", "uncore_exponent", "ht_factor",
                  "ceiling_fraction", "phase_cut"});
      auto& rg = src.options.ranges;
      const std::pair<const char*, sim::Range*> fields[] = {
          {"idle", &rg.idle},           {"dynamic", &rg.dynamic},
          {"uncore", &rg.uncore},       {"hyperthread", &rg.hyperthread},
          {"scale", &rg.scale},         {"parallelism", &rg.parallelism},
          {"uncore_exponent", &rg.uncore_exponent}, {"ht_factor", &rg.ht_factor},
          {"ceiling_fraction", &rg.ceiling_fraction}, {"phase_cut", &rg.phase_cut}};
      for (const auto& [key, dst] : fields) {
        const auto pair = get_list<double>(r, key, "workloads.ranges", {dst->lo, dst->hi});
        if (pair.size() != 2) fail(std::string("workloads.ranges.") + key, "expected [lo, hi]");
        *dst = {pair[0], pair[1]};
      }
      try {
        rg.validate();
      } catch (const std::invalid_argument& e) {
        fail("workloads.ranges", e.what());
      }
    }
    if (const auto sc = w["scenario"]) {
      check_keys(sc, "workloads.scenario", {"kind", "seed", "margin"});
      try {
        src.scenario = sim::parse_scenario_kind(get<std::string>(sc, "kind", "workloads.scenario", ""));
      } catch (const std::invalid_argument& e) {
        fail("workloads.scenario", e.what());
      }
      src.scenario_seed = get<std::uint64_t>(sc, "seed", "workloads.scenario", src.scenario_seed);
      src.options.margin = get(sc, "margin", "workloads.scenario", src.options.margin);
    }
    if (const auto list = w["list"]) {
      if (!list.IsSequence()) fail("workloads.list", "expected a list");
      for (std::size_t i = 0; i < list.size(); ++i)
        src.explicit_workloads.push_back(parse_workload(list[i], "workloads.list[" + std::to_string(i) + "]"));
    }
  }

  if (const auto p = root["policies"]) {
    if (!p.IsSequence()) fail("policies", "expected a list");
    for (std::size_t i = 0; i < p.size(); ++i)
      cfg.policies.push_back(parse_policy(p[i], "policies[" + std::to_string(i) + "]"));
  }

  if (const auto s = root["starts"]) {
    check_keys(s, "starts", {"rule", "fast", "slow", "fast_percentile", "slow_percentile", "ids"});
    const auto rule = get<std::string>(s, "rule", "starts", "bands");
    if (rule == "bands") {
      cfg.starts.kind = StartRule::Kind::bands;
    } else if (rule == "explicit") {
      cfg.starts.kind = StartRule::Kind::explicit_ids;
    } else {
      fail("starts.rule", "expected 'bands' or 'explicit'");
    }
    cfg.starts.fast = get(s, "fast", "starts", cfg.starts.fast);
    cfg.starts.slow = get(s, "slow", "starts", cfg.starts.slow);
    cfg.starts.fast_percentile = get(s, "fast_percentile", "starts", cfg.starts.fast_percentile);
    cfg.starts.slow_percentile = get(s, "slow_percentile", "starts", cfg.starts.slow_percentile);
    cfg.starts.ids = get_list<ConfigId>(s, "ids", "starts", {});
  }

  if (const auto m = root["model"]) {
    check_keys(m, "model", {"length_scale", "noise_ratio", "ridge"});
    cfg.hyper.length_scale = get(m, "length_scale", "model", cfg.hyper.length_scale);
    cfg.hyper.noise_ratio = get(m, "noise_ratio", "model", cfg.hyper.noise_ratio);
    cfg.hyper.ridge = get(m, "ridge", "model", cfg.hyper.ridge);
  }

  if (const auto s = root["sweeps"]) {
    check_keys(s, "sweeps", {"gamma", "interval", "offline_fraction", "model"});
    cfg.gamma_sweep = get_list<double>(s, "gamma", "sweeps", cfg.gamma_sweep);
    cfg.interval_sweep = get_list<int>(s, "interval", "sweeps", cfg.interval_sweep);
    cfg.offline_fraction_sweep = get_list<double>(s, "offline_fraction", "sweeps", cfg.offline_fraction_sweep);
    if (s["model"]) {
      cfg.model_sweep.clear();
      for (const auto& name : get_list<std::string>(s, "model", "sweeps", {}))
        cfg.model_sweep.push_back(parse_model_kind(name));
    }
  }

  if (const auto t = root["traces"]) {
    check_keys(t, "traces", {"policies", "max_runs"});
    for (const auto& name : get_list<std::string>(t, "policies", "traces", {}))
      cfg.traces.policies.push_back(parse_policy_kind(name));
    cfg.traces.max_runs = get(t, "max_runs", "traces", cfg.traces.max_runs);
  }

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace scope::harness
