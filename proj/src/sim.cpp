#include "scope/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

namespace scope::sim {

namespace {

constexpr double kCoreExponent = 0.9;
constexpr double kFreqExponent = 2.2;

// Phase boundaries are compared against accumulated floating-point work.
constexpr double kWorkTolerance = 1e-12;

std::size_t require_param(const ConfigSpace& space, std::string_view name) {
  auto idx = space.find_param(name);
  if (!idx) throw std::invalid_argument("space has no parameter '" + std::string(name) + "'");
  return *idx;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double compute_rate(const WorkLaw& law, const Hardware& hw, const Platform& platform) {
  const double gain = hw.hyperthreading > 0.5 ? law.ht_factor : 1.0;
  return law.scale * std::pow(hw.sockets * hw.cores, law.parallelism) *
         std::pow(hw.cpu_freq / platform.cpu_max(), law.freq_exponent) * gain;
}

Phase random_phase(const ConfigSpace& space, const Platform& platform, std::mt19937_64& rng,
                   const ScenarioOptions& opt) {
  const auto& r = opt.ranges;
  auto draw = [&](const Range& range) { return uniform(rng, range.lo, range.hi); };
  Phase ph;
  ph.power.idle = draw(r.idle);
  ph.power.dynamic = draw(r.dynamic);
  ph.power.uncore = draw(r.uncore);
  ph.power.hyperthread = draw(r.hyperthread);

  ph.work.scale = draw(r.scale);
  ph.work.parallelism = draw(r.parallelism);
  ph.work.freq_exponent = ph.work.parallelism;
  ph.work.uncore_exponent = draw(r.uncore_exponent);
  ph.work.ht_factor = draw(r.ht_factor);
  double peak = 0.0;
  ph.work.ceiling = std::numeric_limits<double>::infinity();
  for (ConfigId id = 0; id < space.size(); ++id)
    peak = std::max(peak, compute_rate(ph.work, platform.at(id), platform));
  ph.work.ceiling = peak * draw(r.ceiling_fraction);

  ph.power_noise = opt.noise;
  ph.work_noise = opt.noise;
  return ph;
}

double median_rate(const Phase& ph, const ConfigSpace& space, const Platform& platform) {
  std::vector<double> rates(space.size());
  for (ConfigId id = 0; id < space.size(); ++id) rates[id] = true_work_rate(ph, platform.at(id), platform);
  auto mid = rates.begin() + static_cast<std::ptrdiff_t>(rates.size() / 2);
  std::nth_element(rates.begin(), mid, rates.end());
  return *mid;
}

double grid_max_power(const Phase& ph, const ConfigSpace& space, const Platform& platform) {
  double best = 0.0;
  for (ConfigId id = 0; id < space.size(); ++id) best = std::max(best, true_power(ph, platform.at(id), platform));
  return best;
}

}  // namespace

void CoefficientRanges::validate() const {
  const std::pair<const char*, Range> all[] = {
      {"idle", idle},           {"dynamic", dynamic},
      {"uncore", uncore},       {"hyperthread", hyperthread},
      {"scale", scale},         {"parallelism", parallelism},
      {"uncore_exponent", uncore_exponent}, {"ht_factor", ht_factor},
      {"ceiling_fraction", ceiling_fraction}, {"phase_cut", phase_cut}};
  for (const auto& [name, r] : all) {
    if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi))
      throw std::invalid_argument(std::string("invalid range for ") + name);
    if (r.lo < 0.0) throw std::invalid_argument(std::string("range for ") + name + " must be non-negative");
  }
  if (!(scale.lo > 0.0) || !(ceiling_fraction.lo > 0.0) || !(ht_factor.lo > 0.0))
    throw std::invalid_argument("scale, ht_factor and ceiling_fraction must be positive");
  if (phase_cut.hi >= 1.0 || !(phase_cut.lo > 0.0)) throw std::invalid_argument("phase cuts must lie in (0, 1)");
}

void WorkloadSpec::validate() const {
  if (!(total_work > 0.0) || !std::isfinite(total_work)) throw std::invalid_argument("total work must be positive");
  if (phases.empty()) throw std::invalid_argument("workload '" + name + "' has no phases");
  if (phases.front().start_work != 0.0) throw std::invalid_argument("first phase must start at zero work");
  for (std::size_t k = 1; k < phases.size(); ++k)
    if (!(phases[k].start_work > phases[k - 1].start_work))
      throw std::invalid_argument("phases must be ordered by start work");
  for (const auto& ph : phases)
    if (ph.power_noise < 0.0 || ph.work_noise < 0.0) throw std::invalid_argument("noise must be non-negative");
}

std::size_t WorkloadSpec::phase_index(double work_done) const {
  std::size_t k = 0;
  while (k + 1 < phases.size() && work_done + kWorkTolerance * total_work >= phases[k + 1].start_work) ++k;
  return k;
}

double WorkloadSpec::phase_work(std::size_t k) const {
  const double end = k + 1 < phases.size() ? std::min(phases[k + 1].start_work, total_work) : total_work;
  return std::max(0.0, end - std::min(phases[k].start_work, total_work));
}

Platform::Platform(const ConfigSpace& space)
    : space_(&space),
      cpu_(require_param(space, param_names::cpu_freq)),
      uncore_(require_param(space, param_names::uncore_freq)),
      ht_(require_param(space, param_names::hyperthreading)),
      sockets_(require_param(space, param_names::sockets)),
      cores_(require_param(space, param_names::cores)),
      cpu_max_(space.params()[cpu_].max()),
      uncore_max_(space.params()[uncore_].max()) {}

Hardware Platform::at(ConfigId id) const {
  auto raw = space_->raw(id);
  return {raw[cpu_], raw[uncore_], raw[ht_], raw[sockets_], raw[cores_]};
}

double true_power(const Phase& phase, const Hardware& hw, const Platform& platform) {
  const PowerLaw& p = phase.power;
  return p.idle +
         p.dynamic * hw.sockets * std::pow(hw.cores, kCoreExponent) *
             std::pow(hw.cpu_freq / platform.cpu_max(), kFreqExponent) +
         p.uncore * hw.uncore_freq + p.hyperthread * hw.hyperthreading * hw.cores;
}

double true_work_rate(const Phase& phase, const Hardware& hw, const Platform& platform) {
  const WorkLaw& law = phase.work;
  const double ceiling = law.ceiling * std::pow(hw.uncore_freq / platform.uncore_max(), law.uncore_exponent);
  return std::min(compute_rate(law, hw, platform), ceiling);
}

TruthTable profile_truth(const WorkloadSpec& w, const ConfigSpace& space) {
  w.validate();
  const Platform platform(space);
  TruthTable t;
  t.max_power.assign(space.size(), 0.0);
  t.latency.assign(space.size(), 0.0);
  for (ConfigId id = 0; id < space.size(); ++id) {
    const Hardware hw = platform.at(id);
    for (std::size_t k = 0; k < w.phases.size(); ++k) {
      t.max_power[id] = std::max(t.max_power[id], true_power(w.phases[k], hw, platform));
      const double work = w.phase_work(k);
      if (work > 0.0) t.latency[id] += work / true_work_rate(w.phases[k], hw, platform);
    }
  }
  return t;
}

Trace run_experiment(Policy& policy, const WorkloadSpec& w, const ConfigSpace& space, const RunParams& params) {
  w.validate();
  if (params.interval_sec < 1) throw std::invalid_argument("interval must be at least one second");
  if (params.max_samples < 1) throw std::invalid_argument("at least one measurement per interval is required");
  if (params.x0 >= space.size()) throw std::invalid_argument("starting configuration is outside the space");

  const Platform platform(space);
  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Trace trace;
  trace.cap = params.cap;
  const std::size_t per_interval = static_cast<std::size_t>(std::min(params.interval_sec, params.max_samples));
  const double finish = w.total_work * (1.0 - kWorkTolerance);

  ConfigId current = policy.initial().value_or(params.x0);
  if (current >= space.size()) throw std::logic_error("policy chose a configuration outside the space");

  double work = 0.0;
  std::size_t t = 0;
  std::size_t interval = 0;
  while (work < finish) {
    const std::size_t first_t = t + 1;
    std::size_t samples = 0;
    double max_power = -std::numeric_limits<double>::infinity();
    double work_sum = 0.0;
    bool violated = false;
    const Hardware hw = platform.at(current);

    while (samples < per_interval && work < finish) {
      if (++t > params.max_seconds) throw std::runtime_error("run exceeded the maximum simulated duration");
      const Phase& phase = w.phase_at(work);
      const double p_true = true_power(phase, hw, platform);
      const double r_true = true_work_rate(phase, hw, platform);
      const double p_noise = normal(rng);
      const double r_noise = normal(rng);
      const double p_meas = std::max(p_true * (1.0 + phase.power_noise * p_noise), 1e-9);
      const double r_meas = std::max(r_true * (1.0 + phase.work_noise * r_noise), 0.0);
      work += r_true;
      violated = p_meas > params.cap;
      trace.seconds.push_back({t, current, p_true, p_meas, work, violated, interval});
      ++samples;
      max_power = std::max(max_power, p_meas);
      work_sum += r_meas;
      if (violated) break;
    }
    if (work >= finish) break;

    IntervalReading reading{max_power, work_sum / static_cast<double>(samples), violated, static_cast<int>(samples)};
    const auto start = std::chrono::steady_clock::now();
    Decision decision = policy.decide(reading);
    const auto stop = std::chrono::steady_clock::now();
    if (decision.next >= space.size()) throw std::logic_error("policy chose a configuration outside the space");

    IntervalRecord rec{interval, first_t, current, w.phase_index(work), reading};
    rec.decision_us = std::chrono::duration<double, std::micro>(stop - start).count();
    if (decision.stats) {
      rec.has_safe_set = true;
      rec.candidate_count = decision.stats->candidate_count;
      rec.safe_count = decision.stats->safe.size();
      trace.final_safe_set = FinalSafeSet{std::move(decision.stats->safe), rec.phase};
    }
    trace.intervals.push_back(rec);
    current = decision.next;
    ++interval;
  }
  return trace;
}

WorkloadSpec random_workload(const ConfigSpace& space, std::string name, std::uint64_t seed, int min_phases,
                             int max_phases, const ScenarioOptions& opt) {
  if (min_phases < 1 || max_phases < min_phases) throw std::invalid_argument("invalid phase count range");
  opt.ranges.validate();
  const Platform platform(space);
  std::mt19937_64 rng(seed);
  const int count = std::uniform_int_distribution<int>(min_phases, max_phases)(rng);

  WorkloadSpec w;
  w.name = std::move(name);
  w.seed = seed;
  for (int k = 0; k < count; ++k) w.phases.push_back(random_phase(space, platform, rng, opt));
  w.total_work = opt.median_seconds * median_rate(w.phases.front(), space, platform);

  std::vector<double> cuts;
  for (int k = 1; k < count; ++k) cuts.push_back(uniform(rng, opt.ranges.phase_cut.lo, opt.ranges.phase_cut.hi));
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t k = 1; k < w.phases.size(); ++k) w.phases[k].start_work = cuts[k - 1] * w.total_work;
  // Degenerate draws that coincide are spread apart.
  for (std::size_t k = 1; k < w.phases.size(); ++k)
    if (!(w.phases[k].start_work > w.phases[k - 1].start_work))
      w.phases[k].start_work = w.phases[k - 1].start_work + 1e-6 * w.total_work;
  w.validate();
  return w;
}

std::vector<WorkloadSpec> scenario_generator(ScenarioKind kind, const ConfigSpace& space, std::uint64_t seed,
                                             const ScenarioOptions& opt) {
  switch (kind) {
    case ScenarioKind::app_shift: {
      auto a = random_workload(space, "app-a", seed, 1, 1, opt);
      auto b = random_workload(space, "app-b", seed ^ 0x9e3779b97f4a7c15ULL, 1, 1, opt);
      return {std::move(a), std::move(b)};
    }
    case ScenarioKind::input_shift: {
      const Platform platform(space);
      WorkloadSpec w = random_workload(space, "input-shift", seed, 1, 1, opt);
      Phase shifted = w.phases.front();
      shifted.start_work = 0.5 * w.total_work;
      // Power is affine in the dynamic coefficient; solve for the target grid max.
      const double base_max = grid_max_power(w.phases.front(), space, platform);
      Phase unit = shifted;
      unit.power.dynamic = 0.0;
      const double rest = grid_max_power(unit, space, platform);
      unit.power.dynamic = 1.0;
      const double per_unit = grid_max_power(unit, space, platform) - rest;
      shifted.power.dynamic = (base_max * (1.0 + opt.margin) - rest) / per_unit;
      w.phases.push_back(shifted);
      w.validate();
      return {std::move(w)};
    }
    case ScenarioKind::random:
      return {random_workload(space, "random", seed, 1, 4, opt)};
  }
  throw std::invalid_argument("unknown scenario kind");
}

ScenarioKind parse_scenario_kind(const std::string& text) {
  if (text == "app-shift") return ScenarioKind::app_shift;
  if (text == "input-shift") return ScenarioKind::input_shift;
  if (text == "random") return ScenarioKind::random;
  throw std::invalid_argument("unknown scenario kind '" + text + "'");
}

std::vector<WorkloadSpec> default_workloads(const ConfigSpace& space, std::uint64_t seed, const ScenarioOptions& opt) {
  static const char* const kNames[] = {"als", "bayes", "gbt", "kmeans", "linear", "lr",
                                       "nweight", "pagerank", "pca", "rf", "terasort", "wordcount"};
  std::vector<WorkloadSpec> out;
  std::uint64_t s = seed;
  for (const char* name : kNames) {
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
    out.push_back(random_workload(space, name, s, 1, 4, opt));
  }
  return out;
}

std::pair<Dataset, Dataset> offline_profile(const WorkloadSpec& w, const ConfigSpace& space, double fraction,
                                            std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("profiling fraction must be in (0, 1]");
  w.validate();
  const Platform platform(space);
  const auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(space.size())));
  if (count == 0) throw std::invalid_argument("profiling fraction selects no configurations");

  std::mt19937_64 rng(seed);
  std::vector<ConfigId> ids(space.size());
  for (ConfigId id = 0; id < ids.size(); ++id) ids[id] = id;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(i, ids.size() - 1)(rng);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(count);
  std::sort(ids.begin(), ids.end());

  std::normal_distribution<double> normal(0.0, 1.0);
  const Phase& phase = w.phases.front();
  Dataset power, work;
  for (ConfigId id : ids) {
    const Hardware hw = platform.at(id);
    const double p = true_power(phase, hw, platform) * (1.0 + phase.power_noise * normal(rng));
    const double r = true_work_rate(phase, hw, platform) * (1.0 + phase.work_noise * normal(rng));
    power.add(space.norm(id), std::max(p, 1e-9));
    work.add(space.norm(id), std::max(r, 0.0));
  }
  return {std::move(power), std::move(work)};
}

}  // namespace scope::sim
