#include "scope/space.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "scope/kernels.hpp"

namespace scope {

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

double normalize_level(const ParamSpec& p, double v) {
  const double lo = p.min();
  const double hi = p.max();
  if (hi == lo) return 0.0;
  return (v - 0.5 * (lo + hi)) / (hi - lo);
}

// Level index of `v`, matched with a relative tolerance so that values
// round-tripped through text still resolve.
std::optional<std::size_t> find_level(const ParamSpec& p, double v) {
  const double span = std::max(p.max() - p.min(), 1.0);
  const double tol = 1e-9 * span;
  auto it = std::lower_bound(p.values.begin(), p.values.end(), v - tol);
  if (it != p.values.end() && std::abs(*it - v) <= tol)
    return static_cast<std::size_t>(it - p.values.begin());
  return std::nullopt;
}

}  // namespace

ParamSpec ParamSpec::linspace(std::string name, double min, double max, std::size_t steps) {
  if (steps == 0) throw std::invalid_argument("parameter '" + name + "' needs at least one level");
  ParamSpec p{std::move(name), {}};
  p.values.reserve(steps);
  if (steps == 1) {
    p.values.push_back(min);
  } else {
    const double step = (max - min) / static_cast<double>(steps - 1);
    for (std::size_t i = 0; i < steps; ++i)
      p.values.push_back(i + 1 == steps ? max : min + step * static_cast<double>(i));
  }
  return p;
}

void ParamSpec::validate() const {
  if (values.empty()) throw std::invalid_argument("parameter '" + name + "' has zero levels");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]))
      throw std::invalid_argument("parameter '" + name + "' has a non-finite level");
    if (i > 0 && !(values[i] > values[i - 1]))
      throw std::invalid_argument("parameter '" + name + "' levels must be strictly increasing");
  }
}

ConfigSpace::ConfigSpace(std::vector<ParamSpec> specs) : params_(std::move(specs)) {
  if (params_.empty()) throw std::invalid_argument("configuration space needs at least one parameter");
  for (const auto& p : params_) p.validate();

  const std::size_t d = params_.size();
  strides_.assign(d, 1);
  size_ = 1;
  for (std::size_t j = d; j-- > 0;) {
    strides_[j] = size_;
    size_ *= params_[j].values.size();
  }

  raw_.resize(size_ * d);
  norm_.resize(size_ * d);
  for (ConfigId id = 0; id < size_; ++id) {
    for (std::size_t j = 0; j < d; ++j) {
      const auto& p = params_[j];
      const double v = p.values[(id / strides_[j]) % p.values.size()];
      raw_[id * d + j] = v;
      norm_[id * d + j] = normalize_level(p, v);
    }
  }

  std::uint64_t h = 14695981039346656037ULL;
  for (const auto& p : params_) {
    h = fnv1a(h, p.name.data(), p.name.size());
    h = fnv1a(h, p.values.data(), p.values.size() * sizeof(double));
  }
  tag_ = h;
}

std::span<const double> ConfigSpace::raw(ConfigId id) const {
  if (id >= size_) throw std::out_of_range("configuration id out of range");
  return {raw_.data() + id * dims(), dims()};
}

std::span<const double> ConfigSpace::norm(ConfigId id) const {
  if (id >= size_) throw std::out_of_range("configuration id out of range");
  return {norm_.data() + id * dims(), dims()};
}

Configuration ConfigSpace::at(ConfigId id) const {
  auto r = raw(id);
  auto n = norm(id);
  return Configuration{id, {r.begin(), r.end()}, {n.begin(), n.end()}, tag_};
}

std::size_t ConfigSpace::level(ConfigId id, std::size_t dim) const {
  return (id / strides_.at(dim)) % params_[dim].values.size();
}

ConfigId ConfigSpace::with_level(ConfigId id, std::size_t dim, std::size_t lvl) const {
  if (lvl >= params_.at(dim).values.size()) throw std::out_of_range("level out of range");
  const std::size_t cur = level(id, dim);
  return id - cur * strides_[dim] + lvl * strides_[dim];
}

ConfigId ConfigSpace::id_of(std::span<const double> raw) const {
  if (raw.size() != dims()) throw std::invalid_argument("configuration has the wrong number of parameters");
  ConfigId id = 0;
  for (std::size_t j = 0; j < dims(); ++j) {
    auto lvl = find_level(params_[j], raw[j]);
    if (!lvl) throw std::invalid_argument("value is not a level of parameter '" + params_[j].name + "'");
    id += *lvl * strides_[j];
  }
  return id;
}

std::optional<std::size_t> ConfigSpace::find_param(std::string_view name) const {
  for (std::size_t j = 0; j < params_.size(); ++j)
    if (params_[j].name == name) return j;
  return std::nullopt;
}

double ConfigSpace::diameter() const {
  // Each multi-level parameter spans exactly 1 in normalized units.
  std::size_t spanning = 0;
  for (const auto& p : params_) spanning += p.values.size() > 1 ? 1 : 0;
  return std::sqrt(static_cast<double>(spanning));
}

ConfigSpace build_grid(std::vector<ParamSpec> specs) { return ConfigSpace(std::move(specs)); }

std::vector<ParamSpec> default_params() {
  return {
      ParamSpec::linspace(std::string(param_names::cpu_freq), 1.0, 3.7, 10),
      ParamSpec::linspace(std::string(param_names::uncore_freq), 1.0, 2.4, 4),
      ParamSpec{std::string(param_names::hyperthreading), {0.0, 1.0}},
      ParamSpec{std::string(param_names::sockets), {1.0, 2.0}},
      ParamSpec::linspace(std::string(param_names::cores), 1.0, 12.0, 12),
  };
}

std::vector<double> normalize(const ConfigSpace& space, std::span<const double> raw) {
  if (raw.size() != space.dims()) throw std::invalid_argument("configuration has the wrong number of parameters");
  std::vector<double> out(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j) {
    const auto& p = space.params()[j];
    auto lvl = find_level(p, raw[j]);
    if (!lvl) throw std::invalid_argument("value is not a level of parameter '" + p.name + "'");
    out[j] = normalize_level(p, p.values[*lvl]);
  }
  return out;
}

double distance(const Configuration& a, const Configuration& b) {
  if (a.space_tag != b.space_tag || a.norm.size() != b.norm.size())
    throw std::invalid_argument("configurations come from different spaces");
  double acc = 0.0;
  for (std::size_t j = 0; j < a.norm.size(); ++j) {
    const double d = a.norm[j] - b.norm[j];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double distance(const ConfigSpace& space, ConfigId a, ConfigId b) {
  auto na = space.norm(a);
  auto nb = space.norm(b);
  double acc = 0.0;
  for (std::size_t j = 0; j < na.size(); ++j) {
    const double d = na[j] - nb[j];
    acc += d * d;
  }
  return std::sqrt(acc);
}

std::vector<ConfigId> candidate_set(const ConfigSpace& space, std::span<const std::uint8_t> sampled,
                                    ConfigId x_s, double gamma) {
  if (sampled.size() != space.size()) throw std::invalid_argument("sampled mask does not match the space");
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be non-negative");
  std::vector<std::uint8_t> inside(space.size());
  kernels::ball_filter(space.norm_matrix(), space.dims(), space.norm(x_s), gamma, sampled, inside);
  std::vector<ConfigId> out;
  for (ConfigId id = 0; id < inside.size(); ++id)
    if (inside[id]) out.push_back(id);
  return out;
}

std::vector<ConfigId> candidate_set(const ConfigSpace& space, std::span<const ConfigId> sampled,
                                    ConfigId x_s, double gamma) {
  std::vector<std::uint8_t> mask(space.size(), 0);
  for (ConfigId id : sampled) mask.at(id) = 1;
  return candidate_set(space, mask, x_s, gamma);
}

}  // namespace scope
