#include "scope/controller.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace scope {

ControlState::ControlState(const ConfigSpace& s, ConfigId start, double p, double g, int n)
    : space(&s), x0(start), x_s(start), current(start), cap(p), gamma(g), max_samples(n),
      sampled_mask(s.size(), 0) {
  if (start >= s.size()) throw std::out_of_range("starting configuration is outside the space");
  if (!(g >= 0.0)) throw std::invalid_argument("gamma must be non-negative");
  if (n < 1) throw std::invalid_argument("at least one measurement per interval is required");
}

void ControlState::record(const IntervalReading& reading) {
  if (!std::isfinite(reading.y) || !std::isfinite(reading.z))
    throw std::invalid_argument("interval reading is not finite");
  sampled.push_back({current, reading.y, reading.z});
  sampled_mask[current] = 1;
  ++interval_index;
}

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::static_config: return "static";
    case PolicyKind::offline: return "offline";
    case PolicyKind::rapl_like: return "rapl-like";
    case PolicyKind::bo: return "bo";
    case PolicyKind::stageopt: return "stageopt";
    case PolicyKind::scope_no: return "scope-no";
    case PolicyKind::scope: return "scope";
    case PolicyKind::oracle: return "oracle";
  }
  return "unknown";
}

PolicyKind parse_policy_kind(std::string_view text) {
  for (PolicyKind k : kAllPolicies)
    if (to_string(k) == text) return k;
  if (text == "rapl") return PolicyKind::rapl_like;
  throw std::invalid_argument("unknown policy '" + std::string(text) + "'");
}

ConfigId select_from_safe_set(std::span<const ConfigId> safe, std::span<const ConfigId> candidates,
                              const PredictFn& f_y, const PredictFn& f_z, ConfigId hold) {
  if (!safe.empty()) {
    ConfigId best = safe.front();
    double best_z = f_z(best);
    for (std::size_t i = 1; i < safe.size(); ++i) {
      const double z = f_z(safe[i]);
      if (z > best_z || (z == best_z && safe[i] < best)) {
        best = safe[i];
        best_z = z;
      }
    }
    return best;
  }
  if (!candidates.empty()) {
    ConfigId best = candidates.front();
    double best_y = f_y(best);
    for (std::size_t i = 1; i < candidates.size(); ++i) {
      const double y = f_y(candidates[i]);
      if (y < best_y || (y == best_y && candidates[i] < best)) {
        best = candidates[i];
        best_y = y;
      }
    }
    return best;
  }
  return hold;
}

Decision scope_step(ControlState& state, const IntervalReading& reading, GridSurrogate& safety,
                    GridSurrogate& objective) {
  const ConfigId ran = state.current;
  state.record(reading);
  safety.observe(ran, reading.y);
  if (reading.y < state.cap) state.x_s = ran;

  const std::vector<ConfigId> candidates = candidate_set(*state.space, state.sampled_mask, state.x_s, state.gamma);

  std::vector<double> predicted_y(candidates.size());
  std::vector<ConfigId> safe;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    predicted_y[i] = safety.mean(candidates[i]);
    if (predicted_y[i] < state.cap) safe.push_back(candidates[i]);
  }

  objective.observe(ran, reading.z);

  // Candidates are in id order, so a binary search recovers the cached f_y.
  auto f_y = [&](ConfigId id) {
    auto it = std::lower_bound(candidates.begin(), candidates.end(), id);
    return predicted_y[static_cast<std::size_t>(it - candidates.begin())];
  };
  auto f_z = [&](ConfigId id) { return objective.mean(id); };
  const ConfigId next = select_from_safe_set(safe, candidates, f_y, f_z, state.x_s);

  state.current = next;
  return {next, SafeSetStats{candidates.size(), std::move(safe)}};
}

ScopePolicy::ScopePolicy(const ConfigSpace& space, ConfigId x0, double cap, double gamma, int max_samples,
                         ModelKind model, const Hyperparameters& hyper)
    : state_(space, x0, cap, gamma, max_samples), safety_(model, space, hyper), objective_(model, space, hyper) {}

PolicyKind ScopePolicy::kind() const {
  return std::isinf(state_.gamma) ? PolicyKind::scope_no : PolicyKind::scope;
}

Decision ScopePolicy::decide(const IntervalReading& reading) {
  return scope_step(state_, reading, safety_, objective_);
}

OfflinePolicy::OfflinePolicy(const ConfigSpace& space, double cap, const Model& safety, const Model& objective)
    : OfflinePolicy(cap, safety.predict_mean_batch(space.norm_matrix(), space.dims()),
                    objective.predict_mean_batch(space.norm_matrix(), space.dims())) {}

OfflinePolicy::OfflinePolicy(double cap, std::span<const double> safety_mean, std::span<const double> objective_mean) {
  if (safety_mean.size() != objective_mean.size() || safety_mean.empty())
    throw std::invalid_argument("offline predictions must be nonempty and aligned");
  bool found = false;
  double best_z = 0.0;
  ConfigId lowest = 0;
  for (ConfigId id = 0; id < safety_mean.size(); ++id) {
    if (safety_mean[id] < safety_mean[lowest]) lowest = id;
    if (safety_mean[id] < cap && (!found || objective_mean[id] > best_z)) {
      found = true;
      best_z = objective_mean[id];
      choice_ = id;
    }
  }
  if (!found) choice_ = lowest;
}

RaplLikePolicy::RaplLikePolicy(const ConfigSpace& space, ConfigId x0, double cap, double deadband)
    : space_(&space), current_(x0), cap_(cap), deadband_(deadband) {
  auto cpu = space.find_param(param_names::cpu_freq);
  auto uncore = space.find_param(param_names::uncore_freq);
  if (!cpu || !uncore) throw std::invalid_argument("rapl-like policy needs cpu_freq and uncore_freq parameters");
  cpu_dim_ = *cpu;
  uncore_dim_ = *uncore;
}

Decision RaplLikePolicy::decide(const IntervalReading& reading) {
  const std::size_t cpu = space_->level(current_, cpu_dim_);
  const std::size_t uncore = space_->level(current_, uncore_dim_);
  const std::size_t cpu_top = space_->params()[cpu_dim_].values.size() - 1;
  const std::size_t uncore_top = space_->params()[uncore_dim_].values.size() - 1;
  if (reading.y > cap_) {
    if (cpu > 0) {
      current_ = space_->with_level(current_, cpu_dim_, cpu - 1);
    } else if (uncore > 0) {
      current_ = space_->with_level(current_, uncore_dim_, uncore - 1);
    }
  } else if (reading.y < (1.0 - deadband_) * cap_) {
    if (cpu < cpu_top) {
      current_ = space_->with_level(current_, cpu_dim_, cpu + 1);
    } else if (uncore < uncore_top) {
      current_ = space_->with_level(current_, uncore_dim_, uncore + 1);
    }
  }
  return {current_, std::nullopt};
}

BoState::BoState(const ConfigSpace& space, ConfigId x0) : current(x0), sampled_mask(space.size(), 0), best_id(x0) {
  if (x0 >= space.size()) throw std::out_of_range("starting configuration is outside the space");
}

ConfigId bo_step(BoState& state, double z, GridSurrogate& objective) {
  if (!std::isfinite(z)) throw std::invalid_argument("objective reading is not finite");
  const ConfigId ran = state.current;
  state.sampled_mask[ran] = 1;
  objective.observe(ran, z);
  if (z > state.best_z) {
    state.best_z = z;
    state.best_id = ran;
  }

  bool found = false;
  double best_ei = 0.0;
  ConfigId next = state.best_id;
  for (ConfigId id = 0; id < state.sampled_mask.size(); ++id) {
    if (state.sampled_mask[id]) continue;
    const double ei = expected_improvement(objective.predict(id), state.best_z);
    if (!found || ei > best_ei) {
      found = true;
      best_ei = ei;
      next = id;
    }
  }
  state.current = next;
  return next;
}

BoPolicy::BoPolicy(const ConfigSpace& space, ConfigId x0, ModelKind model, const Hyperparameters& hyper)
    : state_(space, x0), objective_(model, space, hyper) {}

Decision BoPolicy::decide(const IntervalReading& reading) {
  return {bo_step(state_, reading.z, objective_), std::nullopt};
}

StageOptPolicy::StageOptPolicy(const ConfigSpace& space, ConfigId x0, double cap, int max_samples,
                               std::size_t stage1_len, double beta, ModelKind model, const Hyperparameters& hyper)
    : state_(space, x0, cap, 0.0, max_samples), stage1_len_(stage1_len), beta_(beta), safety_(model, space, hyper),
      objective_(model, space, hyper) {}

Decision StageOptPolicy::decide(const IntervalReading& reading) {
  const std::size_t interval = state_.interval_index;
  const ConfigId ran = state_.current;
  state_.record(reading);
  safety_.observe(ran, reading.y);
  objective_.observe(ran, reading.z);
  if (reading.y < state_.cap) state_.x_s = ran;

  const ConfigSpace& space = *state_.space;
  auto upper_safe = [&](ConfigId id) {
    const Prediction p = safety_.predict(id);
    return p.mean + beta_ * p.stddev < state_.cap;
  };

  if (interval < stage1_len_) {
    // Expansion: the most uncertain unsampled configuration that is safe with high confidence.
    SafeSetStats stats;
    ConfigId next = state_.x_s;
    double best_sd = -1.0;
    for (ConfigId id = 0; id < space.size(); ++id) {
      if (state_.sampled_mask[id]) continue;
      ++stats.candidate_count;
      const Prediction p = safety_.predict(id);
      if (!(p.mean + beta_ * p.stddev < state_.cap)) continue;
      stats.safe.push_back(id);
      if (p.stddev > best_sd) {
        best_sd = p.stddev;
        next = id;
      }
    }
    state_.current = next;
    return {next, std::move(stats)};
  }

  if (!frozen_) {
    std::vector<ConfigId> safe;
    for (ConfigId id = 0; id < space.size(); ++id)
      if (upper_safe(id)) safe.push_back(id);
    frozen_ = std::move(safe);
  }
  ConfigId next = state_.x_s;
  double best_z = 0.0;
  bool found = false;
  for (ConfigId id : *frozen_) {
    const double z = objective_.mean(id);
    if (!found || z > best_z) {
      found = true;
      best_z = z;
      next = id;
    }
  }
  state_.current = next;
  return {next, SafeSetStats{space.size(), *frozen_}};
}

ConfigId oracle_choice(std::span<const double> max_power, std::span<const double> latency, double cap) {
  if (max_power.size() != latency.size() || max_power.empty())
    throw std::invalid_argument("oracle tables must be nonempty and aligned");
  bool found = false;
  ConfigId best = 0;
  ConfigId lowest = 0;
  for (ConfigId id = 0; id < max_power.size(); ++id) {
    if (max_power[id] < max_power[lowest]) lowest = id;
    if (max_power[id] < cap && (!found || latency[id] < latency[best])) {
      found = true;
      best = id;
    }
  }
  return found ? best : lowest;
}

}  // namespace scope
