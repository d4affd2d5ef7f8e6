#pragma once

#include <memory>
#include <span>
#include <vector>

#include "scope/model.hpp"
#include "scope/space.hpp"

namespace scope {

/// A regression model over the points of one ConfigSpace, refit after every
/// observation. Predictions equal fit() + predict() on the same data.
///
/// The GP route keeps the Cholesky factor L of K + noise*I and the whitened
/// cross-covariance V = L^{-1} K(train, grid) and extends both by one row per
/// observation, so an update costs O(n * |D|) instead of a refactorization.
/// Targets are standardized, so K does not depend on them; only the weights
/// L^{-1} y are recomputed.
class GridSurrogate {
 public:
  GridSurrogate(ModelKind kind, const ConfigSpace& space, Hyperparameters hyper);

  void observe(ConfigId id, double target);

  ModelKind kind() const { return kind_; }
  std::size_t observations() const { return targets_.size(); }
  double jitter() const { return jitter_; }

  /// Requires at least one observation.
  Prediction predict(ConfigId id) const;
  double mean(ConfigId id) const { return predict(id).mean; }
  /// Posterior means for every grid point.
  void means(std::span<double> out) const;

 private:
  bool append_gp_row(std::size_t index);
  void escalate_jitter();
  void refactor_gp();
  void refresh_weights();

  ModelKind kind_;
  const ConfigSpace* space_;
  Hyperparameters hyper_;
  double inv_two_l2_;
  double jitter_ = 0.0;

  std::vector<ConfigId> ids_;
  std::vector<double> targets_;
  Standardizer standardizer_;

  // GP state. chol_ holds the rows of L packed (row i has i+1 entries).
  std::vector<double> chol_;
  std::vector<double> whitened_;  // n rows of |D|
  std::vector<double> sumsq_;     // per grid point, squared norm of its V column
  std::vector<double> weights_;   // L^{-1} y_unit
  std::vector<double> kernel_row_;

  // Linear state.
  Dataset data_;
  std::unique_ptr<Model> linear_;
};

}  // namespace scope
