#include "scope/kernels.hpp"

#include <cmath>
#include <cstdint>

namespace scope::kernels {

namespace {

// Below this many grid points the thread fork costs more than the loop.
constexpr std::int64_t kParallelThreshold = 512;

inline double squared_distance(const double* a, const double* b, std::size_t dims) {
  double acc = 0.0;
  for (std::size_t j = 0; j < dims; ++j) {
    const double d = a[j] - b[j];
    acc += d * d;
  }
  return acc;
}

inline double whiten_one(const double* rows, const double* l, std::size_t n, std::size_t width,
                         std::size_t i, double k, double diag) {
  double acc = k;
  for (std::size_t j = 0; j < n; ++j) acc -= l[j] * rows[j * width + i];
  return acc / diag;
}

inline double project_one(const double* rows, const double* w, std::size_t n, std::size_t width,
                          std::size_t i) {
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) acc += rows[j * width + i] * w[j];
  return acc;
}

}  // namespace

void ball_filter(std::span<const double> points, std::size_t dims, std::span<const double> center,
                 double radius, std::span<const std::uint8_t> excluded, std::span<std::uint8_t> out) {
  const auto count = static_cast<std::int64_t>(out.size());
  const double* p = points.data();
  const double* c = center.data();
#pragma omp parallel for schedule(static) if (count > kParallelThreshold)
  for (std::int64_t i = 0; i < count; ++i) {
    const auto u = static_cast<std::size_t>(i);
    out[u] = (excluded[u] == 0 && std::sqrt(squared_distance(p + u * dims, c, dims)) <= radius) ? 1 : 0;
  }
}

void se_kernel_row(std::span<const double> points, std::size_t dims, std::span<const double> x,
                   double inv_two_l2, std::span<double> out) {
  const auto count = static_cast<std::int64_t>(out.size());
  const double* p = points.data();
  const double* c = x.data();
#pragma omp parallel for schedule(static) if (count > kParallelThreshold)
  for (std::int64_t i = 0; i < count; ++i) {
    const auto u = static_cast<std::size_t>(i);
    out[u] = std::exp(-squared_distance(p + u * dims, c, dims) * inv_two_l2);
  }
}

void whiten_append(std::span<const double> rows, std::span<const double> l, double diag,
                   std::span<const double> k, std::span<double> out, std::span<double> sumsq) {
  const std::size_t width = k.size();
  const std::size_t n = l.size();
  const auto count = static_cast<std::int64_t>(width);
#pragma omp parallel for schedule(static) if (count > kParallelThreshold)
  for (std::int64_t i = 0; i < count; ++i) {
    const auto u = static_cast<std::size_t>(i);
    const double v = whiten_one(rows.data(), l.data(), n, width, u, k[u], diag);
    out[u] = v;
    sumsq[u] += v * v;
  }
}

void project(std::span<const double> rows, std::span<const double> weights, std::span<double> out) {
  const std::size_t width = out.size();
  const std::size_t n = weights.size();
  const auto count = static_cast<std::int64_t>(width);
#pragma omp parallel for schedule(static) if (count > kParallelThreshold)
  for (std::int64_t i = 0; i < count; ++i) {
    const auto u = static_cast<std::size_t>(i);
    out[u] = project_one(rows.data(), weights.data(), n, width, u);
  }
}

namespace serial {

void ball_filter(std::span<const double> points, std::size_t dims, std::span<const double> center,
                 double radius, std::span<const std::uint8_t> excluded, std::span<std::uint8_t> out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (excluded[i] == 0 &&
              std::sqrt(squared_distance(points.data() + i * dims, center.data(), dims)) <= radius)
                 ? 1
                 : 0;
  }
}

void se_kernel_row(std::span<const double> points, std::size_t dims, std::span<const double> x,
                   double inv_two_l2, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::exp(-squared_distance(points.data() + i * dims, x.data(), dims) * inv_two_l2);
}

void whiten_append(std::span<const double> rows, std::span<const double> l, double diag,
                   std::span<const double> k, std::span<double> out, std::span<double> sumsq) {
  const std::size_t width = k.size();
  for (std::size_t i = 0; i < width; ++i) {
    const double v = whiten_one(rows.data(), l.data(), l.size(), width, i, k[i], diag);
    out[i] = v;
    sumsq[i] += v * v;
  }
}

void project(std::span<const double> rows, std::span<const double> weights, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = project_one(rows.data(), weights.data(), weights.size(), out.size(), i);
}

}  // namespace serial

}  // namespace scope::kernels
