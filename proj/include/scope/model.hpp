#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace scope {

enum class ModelKind { gaussian_process, linear };

std::string_view to_string(ModelKind kind);
/// Accepts "gp", "gaussian-process", "linear".
ModelKind parse_model_kind(std::string_view text);

struct Hyperparameters {
  /// Shared squared-exponential length scale on normalized inputs.
  double length_scale = 0.5;
  /// Observation noise as a fraction of the target variance.
  double noise_ratio = 1e-4;
  /// Tikhonov term for the linear model's normal equations.
  double ridge = 1e-8;
};

struct Dataset {
  std::vector<std::vector<double>> inputs;
  std::vector<double> targets;

  std::size_t size() const { return targets.size(); }
  void add(std::span<const double> x, double y);
  /// Throws std::invalid_argument on empty, ragged or non-finite data.
  void validate() const;
};

struct Prediction {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Zero-mean, unit-variance rescaling of targets. A constant target vector
/// keeps its mean and scales by |mean| (or 1 when the mean is 0), so the prior
/// stays on the scale of the data.
struct Standardizer {
  double mean = 0.0;
  double scale = 1.0;

  static Standardizer of(std::span<const double> targets);
  double to_unit(double y) const { return (y - mean) / scale; }
  double from_unit(double u) const { return mean + scale * u; }
};

class Model {
 public:
  virtual ~Model() = default;
  virtual ModelKind kind() const = 0;
  virtual Prediction predict(std::span<const double> x) const = 0;
  /// Posterior mean only; skips the variance solve.
  virtual double predict_mean(std::span<const double> x) const { return predict(x).mean; }
  /// `points` is row-major with `dims` columns.
  std::vector<Prediction> predict_batch(std::span<const double> points, std::size_t dims) const;
  std::vector<double> predict_mean_batch(std::span<const double> points, std::size_t dims) const;
};

/// Exact GP regression, squared-exponential kernel, standardized targets.
class GaussianProcess final : public Model {
 public:
  GaussianProcess(const Dataset& data, const Hyperparameters& hyper);

  ModelKind kind() const override { return ModelKind::gaussian_process; }
  Prediction predict(std::span<const double> x) const override;
  double predict_mean(std::span<const double> x) const override;
  /// Extra diagonal added to get a positive-definite factorization (0 if none was needed).
  double jitter() const { return jitter_; }

 private:
  Eigen::MatrixXd inputs_;
  Eigen::MatrixXd chol_;  // lower triangular
  Eigen::VectorXd alpha_;
  Standardizer standardizer_;
  double inv_two_l2_ = 0.0;
  double jitter_ = 0.0;
};

/// Least squares with intercept.
class LinearModel final : public Model {
 public:
  LinearModel(const Dataset& data, const Hyperparameters& hyper);

  ModelKind kind() const override { return ModelKind::linear; }
  Prediction predict(std::span<const double> x) const override;
  const Eigen::VectorXd& weights() const { return weights_; }  // [intercept, w_1..w_d]

 private:
  Eigen::VectorXd weights_;
};

std::unique_ptr<Model> fit(ModelKind kind, const Dataset& data, const Hyperparameters& hyper);

/// Expected improvement of a maximization objective over `best_so_far`.
double expected_improvement(const Prediction& pred, double best_so_far);

/// Jitter schedule tried, in order, when a covariance matrix fails to factor.
inline constexpr double kJitterStart = 1e-8;
inline constexpr double kJitterMax = 1e-4;

}  // namespace scope
