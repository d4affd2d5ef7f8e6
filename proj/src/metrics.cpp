#include "scope/metrics.hpp"

#include <stdexcept>

namespace scope::metrics {

double speedup(double l_static, double l_confg) {
  if (!(l_static > 0.0) || !(l_confg > 0.0)) throw std::invalid_argument("latencies must be positive");
  return l_static / l_confg;
}

double violation_rate(const sim::Trace& trace, double cap) {
  if (trace.seconds.empty()) throw std::invalid_argument("trace has no measurements");
  std::size_t violations = 0;
  for (const auto& s : trace.seconds)
    if (s.measured_power > cap) ++violations;
  return 100.0 * static_cast<double>(violations) / static_cast<double>(trace.seconds.size());
}

double violation_magnitude(const sim::Trace& trace, double cap) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& s : trace.seconds) {
    if (s.measured_power > cap) {
      sum += s.measured_power;
      ++count;
    }
  }
  if (count == 0) return 0.0;
  const double p = sum / static_cast<double>(count);
  return p > cap ? p / cap : 0.0;
}

SafeSetQuality safe_set_stats(std::span<const ConfigId> safe, const sim::WorkloadSpec& w, std::size_t phase,
                              const ConfigSpace& space, double cap) {
  if (phase >= w.phases.size()) throw std::out_of_range("phase index out of range");
  const sim::Platform platform(space);
  SafeSetQuality q{100.0 * static_cast<double>(safe.size()) / static_cast<double>(space.size()), kUndefined, 0.0};
  if (safe.empty()) return q;
  std::size_t truly_safe = 0;
  double overshoot = 0.0;
  for (ConfigId id : safe) {
    const double p = sim::true_power(w.phases[phase], platform.at(id), platform);
    if (p < cap) {
      ++truly_safe;
    } else {
      overshoot += p / cap;
    }
  }
  const std::size_t unsafe = safe.size() - truly_safe;
  q.coverage = 100.0 * static_cast<double>(truly_safe) / static_cast<double>(safe.size());
  q.avm = unsafe == 0 ? 0.0 : overshoot / static_cast<double>(unsafe);
  return q;
}

MetricsReport evaluate(const sim::Trace& trace, double l_static, const sim::WorkloadSpec& w,
                       const ConfigSpace& space) {
  MetricsReport r;
  r.run_length_sec = trace.length();
  r.speedup = speedup(l_static, static_cast<double>(trace.length()));
  r.violation_rate = violation_rate(trace, trace.cap);
  r.violation_magnitude = violation_magnitude(trace, trace.cap);
  if (trace.final_safe_set) {
    const auto q = safe_set_stats(trace.final_safe_set->safe, w, trace.final_safe_set->phase, space, trace.cap);
    r.poc = q.poc;
    r.coverage = q.coverage;
    r.avm = q.avm;
  }
  return r;
}

double mean_defined(std::span<const double> values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    sum += v;
    ++n;
  }
  return n == 0 ? kUndefined : sum / static_cast<double>(n);
}

double mean_nonzero(std::span<const double> values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : values) {
    if (!(v > 0.0)) continue;
    sum += v;
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

}  // namespace scope::metrics
