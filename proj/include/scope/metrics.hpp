#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "scope/sim.hpp"
#include "scope/space.hpp"

namespace scope::metrics {

inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

struct MetricsReport {
  double speedup = 1.0;
  double violation_rate = 0.0;       // percent
  double violation_magnitude = 0.0;  // 0 or > 1
  double poc = kUndefined;           // percent; NaN when the policy keeps no safe set
  double coverage = kUndefined;      // percent; NaN when the safe set is empty
  double avm = kUndefined;           // 0 when the safe set has no unsafe member
  std::size_t run_length_sec = 0;
};

/// l_static / l_confg.
double speedup(double l_static, double l_confg);

/// 100 * (seconds with measured power above the cap) / (all seconds).
double violation_rate(const sim::Trace& trace, double cap);

/// Mean measured power over violating seconds divided by the cap; 0 when none.
double violation_magnitude(const sim::Trace& trace, double cap);

struct SafeSetQuality {
  double poc;
  double coverage;
  double avm;
};

/// POC, coverage and AVM of `safe` judged against the true power of `phase`.
SafeSetQuality safe_set_stats(std::span<const ConfigId> safe, const sim::WorkloadSpec& w, std::size_t phase,
                              const ConfigSpace& space, double cap);

/// All report fields for one run; `l_static` is the matching static run's length.
MetricsReport evaluate(const sim::Trace& trace, double l_static, const sim::WorkloadSpec& w,
                       const ConfigSpace& space);

/// Arithmetic mean ignoring NaN entries; NaN if nothing remains.
double mean_defined(std::span<const double> values);
/// Mean over entries that are strictly positive (violation-magnitude convention); 0 if none.
double mean_nonzero(std::span<const double> values);

}  // namespace scope::metrics
