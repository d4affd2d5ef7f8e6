#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scope {

/// Index of a point in a ConfigSpace grid.
using ConfigId = std::size_t;

/// One tunable hardware parameter and its ordered, strictly increasing levels.
struct ParamSpec {
  std::string name;
  std::vector<double> values;

  /// `steps` evenly spaced levels on [min, max]; one level gives {min}.
  static ParamSpec linspace(std::string name, double min, double max, std::size_t steps);

  void validate() const;
  double min() const { return values.front(); }
  double max() const { return values.back(); }
};

/// A grid point. `raw` holds parameter levels, `norm` their image in [-0.5, 0.5].
struct Configuration {
  ConfigId id = 0;
  std::vector<double> raw;
  std::vector<double> norm;
  std::uint64_t space_tag = 0;
};

/// Cross product of parameter levels, enumerated lexicographically with the
/// first parameter varying slowest. Immutable once built.
class ConfigSpace {
 public:
  explicit ConfigSpace(std::vector<ParamSpec> specs);

  std::size_t dims() const { return params_.size(); }
  std::size_t size() const { return size_; }
  const std::vector<ParamSpec>& params() const { return params_; }

  std::span<const double> raw(ConfigId id) const;
  std::span<const double> norm(ConfigId id) const;
  /// Row-major size() x dims() matrix of normalized points.
  std::span<const double> norm_matrix() const { return norm_; }

  Configuration at(ConfigId id) const;
  /// Level index of parameter `dim` at grid point `id`.
  std::size_t level(ConfigId id, std::size_t dim) const;
  /// Grid point equal to `id` except parameter `dim` set to level `lvl`.
  ConfigId with_level(ConfigId id, std::size_t dim, std::size_t lvl) const;
  /// Throws std::invalid_argument if any coordinate is not one of its levels.
  ConfigId id_of(std::span<const double> raw) const;

  std::optional<std::size_t> find_param(std::string_view name) const;
  /// Content hash of the parameter list; equal for identically built spaces.
  std::uint64_t tag() const { return tag_; }
  /// Largest distance between two grid points.
  double diameter() const;

 private:
  std::vector<ParamSpec> params_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
  std::vector<double> raw_;
  std::vector<double> norm_;
  std::uint64_t tag_ = 0;
};

ConfigSpace build_grid(std::vector<ParamSpec> specs);

/// CPU 1.0-3.7 GHz (10 levels), uncore 1.0-2.4 GHz (4), hyperthreading {0,1},
/// sockets {1,2}, cores per socket 1-12. 1920 points.
std::vector<ParamSpec> default_params();

namespace param_names {
inline constexpr std::string_view cpu_freq = "cpu_freq";
inline constexpr std::string_view uncore_freq = "uncore_freq";
inline constexpr std::string_view hyperthreading = "hyperthreading";
inline constexpr std::string_view sockets = "sockets";
inline constexpr std::string_view cores = "cores_per_socket";
}  // namespace param_names

/// Maps each raw level to (v - (min+max)/2) / (max-min); single-level params map to 0.
std::vector<double> normalize(const ConfigSpace& space, std::span<const double> raw);

/// Euclidean distance between normalized vectors.
double distance(const Configuration& a, const Configuration& b);
double distance(const ConfigSpace& space, ConfigId a, ConfigId b);

/// Unsampled grid points within `gamma` of `x_s`, in id order.
/// `sampled` is a per-grid-point mask (nonzero = already in the training set).
std::vector<ConfigId> candidate_set(const ConfigSpace& space, std::span<const std::uint8_t> sampled,
                                    ConfigId x_s, double gamma);
std::vector<ConfigId> candidate_set(const ConfigSpace& space, std::span<const ConfigId> sampled,
                                    ConfigId x_s, double gamma);

}  // namespace scope
