#include "scope/model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace scope {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::gaussian_process:
      return "gp";
    case ModelKind::linear:
      return "linear";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "gp" || text == "gaussian-process" || text == "gaussian_process") return ModelKind::gaussian_process;
  if (text == "linear") return ModelKind::linear;
  throw std::invalid_argument("unknown model kind '" + std::string(text) + "'");
}

void Dataset::add(std::span<const double> x, double y) {
  inputs.emplace_back(x.begin(), x.end());
  targets.push_back(y);
}

void Dataset::validate() const {
  if (targets.empty()) throw std::invalid_argument("dataset is empty");
  if (inputs.size() != targets.size()) throw std::invalid_argument("dataset inputs and targets differ in length");
  const std::size_t d = inputs.front().size();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != d) throw std::invalid_argument("dataset inputs have inconsistent dimension");
    for (double v : inputs[i])
      if (!std::isfinite(v)) throw std::invalid_argument("dataset input is not finite");
    if (!std::isfinite(targets[i])) throw std::invalid_argument("dataset target is not finite");
  }
}

Standardizer Standardizer::of(std::span<const double> targets) {
  Standardizer s;
  if (targets.empty()) return s;
  double sum = 0.0;
  for (double y : targets) sum += y;
  s.mean = sum / static_cast<double>(targets.size());
  double ss = 0.0;
  for (double y : targets) ss += (y - s.mean) * (y - s.mean);
  const double sd = std::sqrt(ss / static_cast<double>(targets.size()));
  if (sd > 1e-12 * std::max(1.0, std::abs(s.mean))) {
    s.scale = sd;
  } else {
    s.scale = s.mean != 0.0 ? std::abs(s.mean) : 1.0;
  }
  return s;
}

std::vector<Prediction> Model::predict_batch(std::span<const double> points, std::size_t dims) const {
  if (dims == 0 || points.size() % dims != 0) throw std::invalid_argument("point matrix has the wrong shape");
  std::vector<Prediction> out(points.size() / dims);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = predict(points.subspan(i * dims, dims));
  return out;
}

std::vector<double> Model::predict_mean_batch(std::span<const double> points, std::size_t dims) const {
  if (dims == 0 || points.size() % dims != 0) throw std::invalid_argument("point matrix has the wrong shape");
  std::vector<double> out(points.size() / dims);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = predict_mean(points.subspan(i * dims, dims));
  return out;
}

namespace {

double squared_distance(std::span<const double> a, const Eigen::MatrixXd& rows, Eigen::Index r) {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - rows(r, static_cast<Eigen::Index>(j));
    acc += d * d;
  }
  return acc;
}

}  // namespace

GaussianProcess::GaussianProcess(const Dataset& data, const Hyperparameters& hyper) {
  data.validate();
  if (!(hyper.length_scale > 0.0)) throw std::invalid_argument("length scale must be positive");
  if (!(hyper.noise_ratio >= 0.0)) throw std::invalid_argument("noise ratio must be non-negative");

  const auto n = static_cast<Eigen::Index>(data.size());
  const auto d = static_cast<Eigen::Index>(data.inputs.front().size());
  inputs_.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) inputs_(i, j) = data.inputs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];

  standardizer_ = Standardizer::of(data.targets);
  inv_two_l2_ = 1.0 / (2.0 * hyper.length_scale * hyper.length_scale);

  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::span<const double> xi(data.inputs[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = std::exp(-squared_distance(xi, inputs_, j) * inv_two_l2_);
      k(i, j) = v;
      k(j, i) = v;
    }
    k(i, i) += hyper.noise_ratio;
  }

  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) {
    bool ok = false;
    for (double jitter = kJitterStart; jitter <= kJitterMax * (1.0 + 1e-9); jitter *= 10.0) {
      Eigen::MatrixXd kj = k;
      kj.diagonal().array() += jitter;
      llt.compute(kj);
      if (llt.info() == Eigen::Success) {
        jitter_ = jitter;
        ok = true;
        break;
      }
    }
    if (!ok) throw std::runtime_error("GP covariance is not positive definite even with maximum jitter");
  }
  chol_ = llt.matrixL();

  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = standardizer_.to_unit(data.targets[static_cast<std::size_t>(i)]);
  alpha_ = llt.solve(y);
}

Prediction GaussianProcess::predict(std::span<const double> x) const {
  if (static_cast<Eigen::Index>(x.size()) != inputs_.cols()) throw std::invalid_argument("input has the wrong dimension");
  for (double v : x)
    if (!std::isfinite(v)) throw std::invalid_argument("input is not finite");
  const Eigen::Index n = inputs_.rows();
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) k(i) = std::exp(-squared_distance(x, inputs_, i) * inv_two_l2_);
  const double mean_unit = k.dot(alpha_);
  const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(k);
  const double var_unit = std::max(0.0, 1.0 - v.squaredNorm());
  return {standardizer_.from_unit(mean_unit), standardizer_.scale * std::sqrt(var_unit)};
}

double GaussianProcess::predict_mean(std::span<const double> x) const {
  if (static_cast<Eigen::Index>(x.size()) != inputs_.cols()) throw std::invalid_argument("input has the wrong dimension");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < inputs_.rows(); ++i) acc += std::exp(-squared_distance(x, inputs_, i) * inv_two_l2_) * alpha_(i);
  return standardizer_.from_unit(acc);
}

LinearModel::LinearModel(const Dataset& data, const Hyperparameters& hyper) {
  data.validate();
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto d = static_cast<Eigen::Index>(data.inputs.front().size());
  Eigen::MatrixXd a(n, d + 1);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, 0) = 1.0;
    for (Eigen::Index j = 0; j < d; ++j) a(i, j + 1) = data.inputs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    y(i) = data.targets[static_cast<std::size_t>(i)];
  }
  Eigen::MatrixXd normal = a.transpose() * a;
  normal.diagonal().array() += hyper.ridge;
  const Eigen::VectorXd rhs = a.transpose() * y;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    weights_ = ldlt.solve(rhs);
  }
  if (weights_.size() == 0 || !weights_.allFinite()) {
    weights_ = a.completeOrthogonalDecomposition().solve(y);
  }
}

Prediction LinearModel::predict(std::span<const double> x) const {
  if (static_cast<Eigen::Index>(x.size()) + 1 != weights_.size()) throw std::invalid_argument("input has the wrong dimension");
  double acc = weights_(0);
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!std::isfinite(x[j])) throw std::invalid_argument("input is not finite");
    acc += weights_(static_cast<Eigen::Index>(j) + 1) * x[j];
  }
  return {acc, 0.0};
}

std::unique_ptr<Model> fit(ModelKind kind, const Dataset& data, const Hyperparameters& hyper) {
  switch (kind) {
    case ModelKind::gaussian_process:
      return std::make_unique<GaussianProcess>(data, hyper);
    case ModelKind::linear:
      return std::make_unique<LinearModel>(data, hyper);
  }
  throw std::invalid_argument("unknown model kind");
}

double expected_improvement(const Prediction& pred, double best_so_far) {
  const double gain = pred.mean - best_so_far;
  if (!(pred.stddev > 0.0)) return std::max(gain, 0.0);
  const double z = gain / pred.stddev;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(0.0, gain * cdf + pred.stddev * pdf);
}

}  // namespace scope
