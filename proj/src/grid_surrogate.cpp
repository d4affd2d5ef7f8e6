#include "scope/grid_surrogate.hpp"

#include <cmath>
#include <stdexcept>

#include "scope/kernels.hpp"

namespace scope {

GridSurrogate::GridSurrogate(ModelKind kind, const ConfigSpace& space, Hyperparameters hyper)
    : kind_(kind), space_(&space), hyper_(hyper) {
  if (!(hyper_.length_scale > 0.0)) throw std::invalid_argument("length scale must be positive");
  if (!(hyper_.noise_ratio >= 0.0)) throw std::invalid_argument("noise ratio must be non-negative");
  inv_two_l2_ = 1.0 / (2.0 * hyper_.length_scale * hyper_.length_scale);
  if (kind_ == ModelKind::gaussian_process) {
    sumsq_.assign(space.size(), 0.0);
    kernel_row_.resize(space.size());
  }
}

void GridSurrogate::observe(ConfigId id, double target) {
  if (id >= space_->size()) throw std::out_of_range("configuration id out of range");
  if (!std::isfinite(target)) throw std::invalid_argument("observation is not finite");
  ids_.push_back(id);
  targets_.push_back(target);
  standardizer_ = Standardizer::of(targets_);

  if (kind_ == ModelKind::linear) {
    data_.add(space_->norm(id), target);
    linear_ = fit(ModelKind::linear, data_, hyper_);
    return;
  }
  if (!append_gp_row(ids_.size() - 1)) {
    escalate_jitter();
    refactor_gp();
  }
  refresh_weights();
}

bool GridSurrogate::append_gp_row(std::size_t index) {
  const std::size_t n = index;  // rows already factored
  const std::size_t width = space_->size();
  const ConfigId id = ids_[index];

  // Column `id` of V is L^{-1} k(train, x_new), i.e. the new row of L.
  std::vector<double> l(n);
  for (std::size_t j = 0; j < n; ++j) l[j] = whitened_[j * width + id];
  const double pivot = 1.0 + hyper_.noise_ratio + jitter_ - sumsq_[id];
  if (!(pivot > 0.0)) return false;
  const double diag = std::sqrt(pivot);

  chol_.insert(chol_.end(), l.begin(), l.end());
  chol_.push_back(diag);

  // The cross-covariance row is noise-free; noise only enters the pivot.
  kernels::se_kernel_row(space_->norm_matrix(), space_->dims(), space_->norm(id), inv_two_l2_, kernel_row_);
  whitened_.resize((n + 1) * width);
  std::span<const double> prev(whitened_.data(), n * width);
  std::span<double> row(whitened_.data() + n * width, width);
  kernels::whiten_append(prev, l, diag, kernel_row_, row, sumsq_);
  return true;
}

void GridSurrogate::escalate_jitter() {
  jitter_ = jitter_ == 0.0 ? kJitterStart : jitter_ * 10.0;
  if (jitter_ > kJitterMax * (1.0 + 1e-9))
    throw std::runtime_error("GP covariance is not positive definite even with maximum jitter");
}

void GridSurrogate::refactor_gp() {
  for (;;) {
    chol_.clear();
    whitened_.clear();
    sumsq_.assign(space_->size(), 0.0);
    bool ok = true;
    for (std::size_t i = 0; i < ids_.size() && ok; ++i) ok = append_gp_row(i);
    if (ok) return;
    escalate_jitter();
  }
}

void GridSurrogate::refresh_weights() {
  // Forward substitution L w = y_unit over the packed factor.
  const std::size_t n = ids_.size();
  weights_.assign(n, 0.0);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = standardizer_.to_unit(targets_[i]);
    for (std::size_t j = 0; j < i; ++j) acc -= chol_[offset + j] * weights_[j];
    weights_[i] = acc / chol_[offset + i];
    offset += i + 1;
  }
}

Prediction GridSurrogate::predict(ConfigId id) const {
  if (targets_.empty()) throw std::logic_error("model has no observations");
  if (id >= space_->size()) throw std::out_of_range("configuration id out of range");
  if (kind_ == ModelKind::linear) return linear_->predict(space_->norm(id));

  const std::size_t width = space_->size();
  double acc = 0.0;
  for (std::size_t j = 0; j < weights_.size(); ++j) acc += whitened_[j * width + id] * weights_[j];
  const double var = std::max(0.0, 1.0 - sumsq_[id]);
  return {standardizer_.from_unit(acc), standardizer_.scale * std::sqrt(var)};
}

void GridSurrogate::means(std::span<double> out) const {
  if (targets_.empty()) throw std::logic_error("model has no observations");
  if (out.size() != space_->size()) throw std::invalid_argument("output does not match the space");
  if (kind_ == ModelKind::linear) {
    for (ConfigId id = 0; id < out.size(); ++id) out[id] = linear_->predict(space_->norm(id)).mean;
    return;
  }
  kernels::project(whitened_, weights_, out);
  for (double& v : out) v = standardizer_.from_unit(v);
}

}  // namespace scope
