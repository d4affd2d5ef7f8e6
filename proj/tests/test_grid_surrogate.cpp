#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "scope/grid_surrogate.hpp"

using namespace scope;

namespace {

ConfigSpace small_space() {
  return ConfigSpace({ParamSpec::linspace("a", 0, 1, 6), ParamSpec::linspace("b", 0, 2, 5),
                      ParamSpec{"c", {0, 1}}});
}

void check_matches_batch(ModelKind kind, const Hyperparameters& h, std::uint64_t seed, std::size_t n) {
  const auto space = small_space();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(100.0, 20.0);
  GridSurrogate s(kind, space, h);
  Dataset data;
  for (std::size_t i = 0; i < n; ++i) {
    const ConfigId id = rng() % space.size();
    const double y = g(rng);
    s.observe(id, y);
    data.add(space.norm(id), y);
    const auto ref = fit(kind, data, h);
    std::vector<double> all(space.size());
    s.means(all);
    for (ConfigId q = 0; q < space.size(); ++q) {
      const auto want = ref->predict(space.norm(q));
      const auto got = s.predict(q);
      const double tol = 1e-7 * std::max(1.0, std::abs(want.mean));
      REQUIRE(std::abs(got.mean - want.mean) <= tol);
      REQUIRE(std::abs(got.stddev - want.stddev) <= 1e-6 * std::max(1.0, want.stddev));
      REQUIRE(std::abs(all[q] - got.mean) <= 1e-9 * std::max(1.0, std::abs(got.mean)));
    }
  }
}

}  // namespace

TEST_CASE("incremental GP surrogate equals a batch fit after every observation") {
  check_matches_batch(ModelKind::gaussian_process, {}, 3, 25);
}

TEST_CASE("incremental GP surrogate handles repeated configurations") {
  Hyperparameters h;
  h.noise_ratio = 1e-4;
  const auto space = small_space();
  GridSurrogate s(ModelKind::gaussian_process, space, h);
  Dataset data;
  for (int i = 0; i < 6; ++i) {
    s.observe(7, 100.0 + i);
    data.add(space.norm(7), 100.0 + i);
  }
  const auto ref = fit(ModelKind::gaussian_process, data, h);
  CHECK(s.mean(7) == doctest::Approx(ref->predict(space.norm(7)).mean).epsilon(1e-7));
}

TEST_CASE("linear surrogate equals a batch fit") {
  check_matches_batch(ModelKind::linear, {}, 4, 12);
}

TEST_CASE("surrogate input checks") {
  const auto space = small_space();
  GridSurrogate s(ModelKind::gaussian_process, space, {});
  CHECK_THROWS(s.predict(0));
  CHECK_THROWS_AS(s.observe(space.size(), 1.0), std::out_of_range);
  CHECK_THROWS_AS(s.observe(0, std::nan("")), std::invalid_argument);
  s.observe(0, 5.0);
  CHECK(s.observations() == 1);
  CHECK(s.mean(0) == doctest::Approx(5.0));
}
