#include <doctest.h>

#include <random>
#include <vector>

#include "scope/kernels.hpp"

using namespace scope;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("parallel kernels agree bitwise with the serial references") {
  std::mt19937_64 rng(3);
  for (std::size_t count : {7u, 513u, 4000u}) {
    const std::size_t dims = 5;
    const auto pts = random_vec(rng, count * dims);
    const auto center = random_vec(rng, dims);
    std::vector<std::uint8_t> excluded(count);
    for (auto& e : excluded) e = rng() % 5 == 0;

    std::vector<std::uint8_t> a(count), b(count);
    kernels::ball_filter(pts, dims, center, 0.9, excluded, a);
    kernels::serial::ball_filter(pts, dims, center, 0.9, excluded, b);
    CHECK(a == b);

    std::vector<double> ka(count), kb(count);
    kernels::se_kernel_row(pts, dims, center, 2.0, ka);
    kernels::serial::se_kernel_row(pts, dims, center, 2.0, kb);
    CHECK(ka == kb);

    const std::size_t n = 6;
    const auto rows = random_vec(rng, n * count);
    const auto l = random_vec(rng, n);
    std::vector<double> oa(count), ob(count), sa(count, 0.25), sb(count, 0.25);
    kernels::whiten_append(rows, l, 1.7, ka, oa, sa);
    kernels::serial::whiten_append(rows, l, 1.7, kb, ob, sb);
    CHECK(oa == ob);
    CHECK(sa == sb);

    const auto w = random_vec(rng, n);
    std::vector<double> pa(count), pb(count);
    kernels::project(rows, w, pa);
    kernels::serial::project(rows, w, pb);
    CHECK(pa == pb);
  }
}

TEST_CASE("serial kernels match hand evaluation") {
  const std::vector<double> pts{0.0, 0.0, 1.0, 0.0, 0.0, 2.0};
  const std::vector<double> x{0.0, 0.0};
  std::vector<double> k(3);
  kernels::serial::se_kernel_row(pts, 2, x, 0.5, k);
  CHECK(k[0] == 1.0);
  CHECK(k[1] == doctest::Approx(std::exp(-0.5)));
  CHECK(k[2] == doctest::Approx(std::exp(-2.0)));

  std::vector<std::uint8_t> out(3);
  const std::vector<std::uint8_t> excl{0, 0, 0};
  kernels::serial::ball_filter(pts, 2, x, 1.0, excl, out);
  CHECK(out == std::vector<std::uint8_t>{1, 1, 0});

  // One previous row [1, 2, 3], l = [0.5], diag 2: out = (k - 0.5*row) / 2.
  const std::vector<double> rows{1, 2, 3};
  const std::vector<double> l{0.5};
  const std::vector<double> kk{1, 1, 1};
  std::vector<double> o(3), ss(3, 0.0);
  kernels::serial::whiten_append(rows, l, 2.0, kk, o, ss);
  CHECK(o == std::vector<double>{0.25, 0.0, -0.25});
  CHECK(ss == std::vector<double>{0.0625, 0.0, 0.0625});
}
