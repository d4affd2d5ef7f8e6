#pragma once

// Data-parallel inner loops over the configuration grid. The default entry
// points run under OpenMP; `serial::` holds the straight-line references the
// tests and the benchmark compare against. Every output element is computed
// independently with the same operation order, so both routes agree bitwise.

#include <cstddef>
#include <cstdint>
#include <span>

namespace scope::kernels {

/// out[i] = 1 if row i of `points` is within `radius` of `center` and
/// excluded[i] == 0, else 0.
void ball_filter(std::span<const double> points, std::size_t dims, std::span<const double> center,
                 double radius, std::span<const std::uint8_t> excluded, std::span<std::uint8_t> out);

/// out[i] = exp(-|points_i - x|^2 * inv_two_l2).
void se_kernel_row(std::span<const double> points, std::size_t dims, std::span<const double> x,
                   double inv_two_l2, std::span<double> out);

/// Appends one row to the whitened cross-covariance V = L^{-1} K(train, grid):
/// out[i] = (k[i] - sum_j l[j] * rows[j][i]) / diag, with rows stored row-major
/// (rows.size() == l.size() * k.size()). Also accumulates sumsq[i] += out[i]^2.
void whiten_append(std::span<const double> rows, std::span<const double> l, double diag,
                   std::span<const double> k, std::span<double> out, std::span<double> sumsq);

/// out[i] = sum_j rows[j][i] * weights[j].
void project(std::span<const double> rows, std::span<const double> weights, std::span<double> out);

namespace serial {
void ball_filter(std::span<const double> points, std::size_t dims, std::span<const double> center,
                 double radius, std::span<const std::uint8_t> excluded, std::span<std::uint8_t> out);
void se_kernel_row(std::span<const double> points, std::size_t dims, std::span<const double> x,
                   double inv_two_l2, std::span<double> out);
void whiten_append(std::span<const double> rows, std::span<const double> l, double diag,
                   std::span<const double> k, std::span<double> out, std::span<double> sumsq);
void project(std::span<const double> rows, std::span<const double> weights, std::span<double> out);
}  // namespace serial

}  // namespace scope::kernels
