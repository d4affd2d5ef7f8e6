#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scope/controller.hpp"
#include "scope/model.hpp"
#include "scope/space.hpp"

namespace scope::sim {

/// power = idle + dynamic * sockets * cores^0.9 * (f/f_max)^2.2
///       + uncore * uncore_freq + hyperthread * ht * cores
struct PowerLaw {
  double idle = 80.0;
  double dynamic = 12.0;
  double uncore = 10.0;
  double hyperthread = 1.0;
};

/// rate = min(scale * (sockets*cores)^parallelism * (f/f_max)^freq_exponent * ht_gain,
///            ceiling * (u/u_max)^uncore_exponent), ht_gain = ht_factor when HT is on.
struct WorkLaw {
  double scale = 1.0;
  double parallelism = 0.8;
  double freq_exponent = 0.8;
  double ceiling = 10.0;
  double uncore_exponent = 0.3;
  double ht_factor = 1.1;
};

struct Phase {
  double start_work = 0.0;
  PowerLaw power;
  WorkLaw work;
  /// Measurement noise as a fraction of the true value (Gaussian std).
  double power_noise = 0.02;
  double work_noise = 0.02;
};

/// Ground truth for one (application, input): phases keyed by cumulative work.
struct WorkloadSpec {
  std::string name;
  double total_work = 1.0;
  std::vector<Phase> phases;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t phase_index(double work_done) const;
  const Phase& phase_at(double work_done) const { return phases[phase_index(work_done)]; }
  /// Work executed inside phase `k`.
  double phase_work(std::size_t k) const;
};

/// Hardware coordinates of a configuration, resolved by parameter name.
struct Hardware {
  double cpu_freq;
  double uncore_freq;
  double hyperthreading;
  double sockets;
  double cores;
};

/// Index of each hardware parameter within a ConfigSpace. Missing parameters
/// are an error.
class Platform {
 public:
  explicit Platform(const ConfigSpace& space);
  Hardware at(ConfigId id) const;
  double cpu_max() const { return cpu_max_; }
  double uncore_max() const { return uncore_max_; }

 private:
  const ConfigSpace* space_;
  std::size_t cpu_, uncore_, ht_, sockets_, cores_;
  double cpu_max_, uncore_max_;
};

double true_power(const Phase& phase, const Hardware& hw, const Platform& platform);
double true_work_rate(const Phase& phase, const Hardware& hw, const Platform& platform);

/// Per-configuration truth over the whole run.
struct TruthTable {
  std::vector<double> max_power;  // max over phases
  std::vector<double> latency;    // sum over phases of phase work / rate
};
TruthTable profile_truth(const WorkloadSpec& w, const ConfigSpace& space);

struct Second {
  std::size_t t;  // 1-based
  ConfigId config;
  double true_power;
  double measured_power;
  double work_done;  // cumulative
  bool violated;
  std::size_t interval;
};

struct IntervalRecord {
  std::size_t index;
  std::size_t first_t;
  ConfigId config;
  std::size_t phase;  // phase at the end of the interval
  IntervalReading reading;
  std::size_t candidate_count = 0;
  std::size_t safe_count = 0;
  bool has_safe_set = false;
  double decision_us = 0.0;
};

struct FinalSafeSet {
  std::vector<ConfigId> safe;
  std::size_t phase;
};

struct Trace {
  double cap = 0.0;
  std::vector<Second> seconds;
  std::vector<IntervalRecord> intervals;
  std::optional<FinalSafeSet> final_safe_set;

  std::size_t length() const { return seconds.size(); }
};

struct RunParams {
  double cap = 0.0;
  int interval_sec = 10;
  int max_samples = 10;
  ConfigId x0 = 0;
  std::uint64_t seed = 0;
  std::size_t max_seconds = 1'000'000;
};

/// Drives `policy` against the workload one simulated second at a time until
/// the total work is done. An interval closes after min(N, interval_sec)
/// measurements, or right after the first measurement above the cap; the
/// returned configuration runs from the next second.
Trace run_experiment(Policy& policy, const WorkloadSpec& w, const ConfigSpace& space, const RunParams& params);

enum class ScenarioKind { app_shift, input_shift, random };

struct Range {
  double lo;
  double hi;
};

/// Per-phase coefficient draws for generated workloads. The work law uses one
/// exponent for cores*sockets and frequency, drawn from `parallelism`.
struct CoefficientRanges {
  Range idle{70.0, 90.0};
  Range dynamic{8.0, 15.0};
  Range uncore{6.0, 14.0};
  Range hyperthread{0.5, 2.0};
  Range scale{0.8, 1.2};
  Range parallelism{0.3, 1.0};
  Range uncore_exponent{0.1, 0.6};
  Range ht_factor{0.92, 1.28};
  /// Memory ceiling as a fraction of the grid's best compute rate.
  Range ceiling_fraction{0.2, 0.6};
  /// Phase boundaries as fractions of total work.
  Range phase_cut{0.15, 0.85};

  void validate() const;
};

struct ScenarioOptions {
  /// input-shift: phase-2 grid-max power over phase-1 grid-max power, minus 1.
  double margin = 0.2;
  double noise = 0.02;
  /// Target run length in seconds at the grid's median work rate.
  double median_seconds = 300.0;
  CoefficientRanges ranges;
};

/// Seeded random workload with between min_phases and max_phases phases.
WorkloadSpec random_workload(const ConfigSpace& space, std::string name, std::uint64_t seed, int min_phases = 1,
                             int max_phases = 4, const ScenarioOptions& opt = {});

/// app-shift: two workloads with independent coefficients. input-shift: one
/// workload whose second half has its dynamic power raised by `margin` at the
/// grid maximum. random: one workload with 1-4 phases.
std::vector<WorkloadSpec> scenario_generator(ScenarioKind kind, const ConfigSpace& space, std::uint64_t seed,
                                             const ScenarioOptions& opt = {});

ScenarioKind parse_scenario_kind(const std::string& text);

/// The twelve named default workloads.
std::vector<WorkloadSpec> default_workloads(const ConfigSpace& space, std::uint64_t seed = 2023,
                                            const ScenarioOptions& opt = {});

/// Noisy profiling measurements of floor(fraction*|D|) random configurations
/// in the first phase. Returns (power dataset, work-rate dataset).
std::pair<Dataset, Dataset> offline_profile(const WorkloadSpec& w, const ConfigSpace& space, double fraction,
                                            std::uint64_t seed);

}  // namespace scope::sim
