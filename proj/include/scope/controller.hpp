#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "scope/grid_surrogate.hpp"
#include "scope/model.hpp"
#include "scope/space.hpp"

namespace scope {

/// Aggregate of one control interval: the maximum measured power and the
/// mean measured work rate over the seconds actually monitored.
struct IntervalReading {
  double y = 0.0;
  double z = 0.0;
  bool violated = false;
  int samples_taken = 1;
};

/// Candidate/safe set snapshot produced by a safe-exploration step.
struct SafeSetStats {
  std::size_t candidate_count = 0;
  std::vector<ConfigId> safe;  // id order
};

struct Decision {
  ConfigId next = 0;
  std::optional<SafeSetStats> stats;
};

struct Observation {
  ConfigId id;
  double y;
  double z;
};

struct ControlState {
  ControlState(const ConfigSpace& space, ConfigId x0, double cap, double gamma, int max_samples);

  /// Appends (current, y, z) to the training set and advances the interval counter.
  void record(const IntervalReading& reading);

  const ConfigSpace* space;
  ConfigId x0;
  ConfigId x_s;
  ConfigId current;
  double cap;
  double gamma;
  int max_samples;
  std::size_t interval_index = 0;
  std::vector<Observation> sampled;
  std::vector<std::uint8_t> sampled_mask;
};

enum class PolicyKind { static_config, offline, rapl_like, bo, stageopt, scope_no, scope, oracle };

std::string_view to_string(PolicyKind kind);
PolicyKind parse_policy_kind(std::string_view text);
inline constexpr PolicyKind kAllPolicies[] = {PolicyKind::static_config, PolicyKind::offline, PolicyKind::rapl_like,
                                              PolicyKind::bo,            PolicyKind::stageopt, PolicyKind::scope_no,
                                              PolicyKind::scope,         PolicyKind::oracle};

using PredictFn = std::function<double(ConfigId)>;

/// argmax f_z over `safe` if nonempty, else argmin f_y over `candidates` if
/// nonempty, else `hold`. Both spans in id order; ties go to the lower id.
ConfigId select_from_safe_set(std::span<const ConfigId> safe, std::span<const ConfigId> candidates,
                              const PredictFn& f_y, const PredictFn& f_z, ConfigId hold);

/// One pass of the safe-exploration loop after an interval at state.current:
/// record, refit the safety model, move x_s if the reading was safe, build the
/// candidate ball and the predicted-safe subset, refit the objective model and
/// pick the next configuration.
Decision scope_step(ControlState& state, const IntervalReading& reading, GridSurrogate& safety,
                    GridSurrogate& objective);

/// Decides the next configuration after each interval. A policy owns its
/// state and is used by one experiment at a time.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual PolicyKind kind() const = 0;
  /// `reading` aggregates the interval just spent at the previously returned
  /// configuration (the starting one on the first call).
  virtual Decision decide(const IntervalReading& reading) = 0;
  /// Configuration to run from the first second instead of the shared start.
  virtual std::optional<ConfigId> initial() const { return std::nullopt; }
};

class StaticPolicy final : public Policy {
 public:
  explicit StaticPolicy(ConfigId x0) : x0_(x0) {}
  PolicyKind kind() const override { return PolicyKind::static_config; }
  Decision decide(const IntervalReading&) override { return {x0_, std::nullopt}; }

 private:
  ConfigId x0_;
};

/// Safe exploration with the locality ball; gamma = +inf gives SCOPE-NO.
class ScopePolicy final : public Policy {
 public:
  ScopePolicy(const ConfigSpace& space, ConfigId x0, double cap, double gamma, int max_samples, ModelKind model,
              const Hyperparameters& hyper);
  PolicyKind kind() const override;
  Decision decide(const IntervalReading& reading) override;
  const ControlState& state() const { return state_; }

 private:
  ControlState state_;
  GridSurrogate safety_;
  GridSurrogate objective_;
};

/// Frozen pretrained models; picks argmax f_z over {f_y < P} once.
class OfflinePolicy final : public Policy {
 public:
  OfflinePolicy(const ConfigSpace& space, double cap, const Model& safety, const Model& objective);
  /// From precomputed per-grid-point predicted means.
  OfflinePolicy(double cap, std::span<const double> safety_mean, std::span<const double> objective_mean);
  PolicyKind kind() const override { return PolicyKind::offline; }
  Decision decide(const IntervalReading&) override { return {choice_, std::nullopt}; }
  ConfigId choice() const { return choice_; }

 private:
  ConfigId choice_ = 0;
};

/// Step controller on CPU then uncore frequency with a hysteresis band.
class RaplLikePolicy final : public Policy {
 public:
  RaplLikePolicy(const ConfigSpace& space, ConfigId x0, double cap, double deadband = 0.05);
  PolicyKind kind() const override { return PolicyKind::rapl_like; }
  Decision decide(const IntervalReading& reading) override;

 private:
  const ConfigSpace* space_;
  ConfigId current_;
  double cap_;
  double deadband_;
  std::size_t cpu_dim_;
  std::size_t uncore_dim_;
};

/// Unconstrained Bayesian optimization with expected improvement. Only the
/// objective reaches the model.
struct BoState {
  BoState(const ConfigSpace& space, ConfigId x0);
  ConfigId current;
  std::vector<std::uint8_t> sampled_mask;
  double best_z = -std::numeric_limits<double>::infinity();
  ConfigId best_id;
};

ConfigId bo_step(BoState& state, double z, GridSurrogate& objective);

class BoPolicy final : public Policy {
 public:
  BoPolicy(const ConfigSpace& space, ConfigId x0, ModelKind model, const Hyperparameters& hyper);
  PolicyKind kind() const override { return PolicyKind::bo; }
  Decision decide(const IntervalReading& reading) override;

 private:
  BoState state_;
  GridSurrogate objective_;
};

/// Two-stage safe optimization: expand the safe set for `stage1_len`
/// intervals, then freeze it and optimize the objective inside it.
class StageOptPolicy final : public Policy {
 public:
  StageOptPolicy(const ConfigSpace& space, ConfigId x0, double cap, int max_samples, std::size_t stage1_len,
                 double beta, ModelKind model, const Hyperparameters& hyper);
  PolicyKind kind() const override { return PolicyKind::stageopt; }
  Decision decide(const IntervalReading& reading) override;
  bool frozen() const { return frozen_.has_value(); }

 private:
  ControlState state_;
  std::size_t stage1_len_;
  double beta_;
  GridSurrogate safety_;
  GridSurrogate objective_;
  std::optional<std::vector<ConfigId>> frozen_;
};

/// Fastest configuration whose true power stays under the cap in every
/// phase; falls back to the lowest-power configuration when none does.
ConfigId oracle_choice(std::span<const double> max_power, std::span<const double> latency, double cap);

class OraclePolicy final : public Policy {
 public:
  explicit OraclePolicy(ConfigId choice) : choice_(choice) {}
  PolicyKind kind() const override { return PolicyKind::oracle; }
  Decision decide(const IntervalReading&) override { return {choice_, std::nullopt}; }
  std::optional<ConfigId> initial() const override { return choice_; }

 private:
  ConfigId choice_;
};

}  // namespace scope
