#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "scope/model.hpp"

using namespace scope;

namespace {

Dataset random_dataset(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::normal_distribution<double> g(150.0, 40.0);
  Dataset data;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(d);
    for (auto& v : x) v = u(rng);
    data.add(x, g(rng));
  }
  return data;
}

}  // namespace

TEST_CASE("model kind names") {
  CHECK(parse_model_kind("gp") == ModelKind::gaussian_process);
  CHECK(parse_model_kind("gaussian-process") == ModelKind::gaussian_process);
  CHECK(parse_model_kind("linear") == ModelKind::linear);
  CHECK(to_string(ModelKind::linear) == "linear");
  CHECK_THROWS_AS(parse_model_kind("mlp"), std::invalid_argument);
}

TEST_CASE("dataset validation") {
  Dataset empty;
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
  Dataset ragged;
  ragged.add(std::vector<double>{0.0, 1.0}, 1.0);
  ragged.add(std::vector<double>{0.0}, 1.0);
  CHECK_THROWS_AS(ragged.validate(), std::invalid_argument);
  Dataset nan;
  nan.add(std::vector<double>{0.0}, std::nan(""));
  CHECK_THROWS_AS(fit(ModelKind::gaussian_process, nan, {}), std::invalid_argument);
}

TEST_CASE("standardizer") {
  const std::vector<double> ys{1.0, 3.0};
  const auto s = Standardizer::of(ys);
  CHECK(s.mean == 2.0);
  CHECK(s.scale == 1.0);
  CHECK(s.from_unit(s.to_unit(7.5)) == doctest::Approx(7.5));
  const std::vector<double> flat{120.0, 120.0};
  CHECK(Standardizer::of(flat).scale == 120.0);
  const std::vector<double> zeros{0.0, 0.0};
  CHECK(Standardizer::of(zeros).scale == 1.0);
}

TEST_CASE("GP interpolates a single point and reverts to its mean far away") {
  Dataset d;
  d.add(std::vector<double>{0.1, -0.2}, 42.0);
  Hyperparameters h;
  h.noise_ratio = 1e-6;
  const auto gp = fit(ModelKind::gaussian_process, d, h);
  const auto at = gp->predict(std::vector<double>{0.1, -0.2});
  CHECK(at.mean == doctest::Approx(42.0).epsilon(1e-6));
  CHECK(at.stddev <= 1e-3 * 42.0);
  const auto far = gp->predict(std::vector<double>{50.0, 50.0});
  CHECK(far.mean == doctest::Approx(42.0));
  CHECK(far.stddev == doctest::Approx(42.0));  // constant targets scale by |mean|
}

TEST_CASE("GP stddev collapses at training inputs") {
  std::mt19937_64 rng(11);
  Hyperparameters h;
  h.noise_ratio = 1e-6;
  const auto data = random_dataset(rng, 12, 3);
  const auto gp = fit(ModelKind::gaussian_process, data, h);
  const double scale = Standardizer::of(data.targets).scale;
  for (const auto& x : data.inputs) CHECK(gp->predict(x).stddev <= 1e-3 * scale);
}

TEST_CASE("GP posterior matches a dense direct solve") {
  std::mt19937_64 rng(5);
  Hyperparameters h;
  for (int trial = 0; trial < 20; ++trial) {
    const auto data = random_dataset(rng, 1 + rng() % 40, 5);
    const auto gp = fit(ModelKind::gaussian_process, data, h);
    for (int q = 0; q < 5; ++q) {
      const auto x = random_dataset(rng, 1, 5).inputs.front();
      const auto ref = oracle::gp(data.inputs, data.targets, x, h.length_scale, h.noise_ratio);
      const auto got = gp->predict(x);
      CHECK(got.mean == doctest::Approx(ref.mean).epsilon(1e-8));
      CHECK(std::abs(got.stddev - ref.stddev) <= 1e-8 * std::max(1.0, ref.stddev));
      CHECK(gp->predict_mean(x) == doctest::Approx(got.mean).epsilon(1e-12));
    }
  }
}

TEST_CASE("GP escalates jitter on duplicated inputs without noise") {
  Dataset d;
  for (int i = 0; i < 4; ++i) d.add(std::vector<double>{0.0, 0.0}, 10.0 + i);
  Hyperparameters h;
  h.noise_ratio = 0.0;
  GaussianProcess gp(d, h);
  CHECK(gp.jitter() >= kJitterStart);
  CHECK(gp.jitter() <= kJitterMax);
  CHECK(gp.predict(std::vector<double>{0.0, 0.0}).mean == doctest::Approx(11.5).epsilon(1e-3));
}

TEST_CASE("batch predictions equal element-wise predictions") {
  std::mt19937_64 rng(9);
  const auto data = random_dataset(rng, 10, 2);
  const auto gp = fit(ModelKind::gaussian_process, data, {});
  std::vector<double> pts;
  for (const auto& x : data.inputs) pts.insert(pts.end(), x.begin(), x.end());
  const auto batch = gp->predict_batch(pts, 2);
  const auto means = gp->predict_mean_batch(pts, 2);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto one = gp->predict(data.inputs[i]);
    CHECK(batch[i].mean == one.mean);
    CHECK(batch[i].stddev == one.stddev);
    CHECK(means[i] == gp->predict_mean(data.inputs[i]));
  }
  CHECK_THROWS_AS(gp->predict_batch(std::vector<double>{1, 2, 3}, 2), std::invalid_argument);
  CHECK_THROWS_AS(gp->predict(std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("linear model reproduces a hyperplane and ignores row order") {
  Dataset d;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int i = 0; i < 20; ++i) {
    const std::vector<double> x{u(rng), u(rng), u(rng)};
    d.add(x, 3.0 + 2.0 * x[0] - 1.5 * x[1] + 0.25 * x[2]);
  }
  const auto lin = fit(ModelKind::linear, d, {});
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(lin->predict(d.inputs[i]).mean == doctest::Approx(d.targets[i]).epsilon(1e-8));
  CHECK(lin->predict(d.inputs[0]).stddev == 0.0);

  Dataset rev;
  for (std::size_t i = d.size(); i-- > 0;) rev.add(d.inputs[i], d.targets[i]);
  const auto lin2 = fit(ModelKind::linear, rev, {});
  const std::vector<double> q{0.3, -0.1, 0.2};
  CHECK(lin2->predict(q).mean == doctest::Approx(lin->predict(q).mean).epsilon(1e-12));
}

TEST_CASE("linear model falls back on rank-deficient data") {
  Dataset d;
  d.add(std::vector<double>{0.0, 0.0}, 1.0);
  d.add(std::vector<double>{0.0, 0.0}, 3.0);
  Hyperparameters h;
  h.ridge = 0.0;
  const auto lin = fit(ModelKind::linear, d, h);
  CHECK(lin->predict(std::vector<double>{0.0, 0.0}).mean == doctest::Approx(2.0));
}

TEST_CASE("expected improvement") {
  CHECK(expected_improvement({5.0, 0.0}, 5.0) == 0.0);
  CHECK(expected_improvement({8.0, 0.0}, 5.0) == 3.0);
  CHECK(expected_improvement({1.0, 0.0}, 5.0) == 0.0);
  CHECK(expected_improvement({0.0, 1.0}, 0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-12));

  // Monte Carlo estimate of E[max(G - b, 0)].
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  double acc = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) acc += std::max(g(rng), 0.0);
  CHECK(std::abs(acc / n - expected_improvement({0.0, 1.0}, 0.0)) < 1e-2);

  double prev = 0.0;
  for (double mu = -3.0; mu <= 3.0; mu += 0.25) {
    const double ei = expected_improvement({mu, 0.7}, 0.0);
    CHECK(ei >= prev);
    prev = ei;
  }
  prev = 0.0;
  for (double sd = 0.0; sd <= 3.0; sd += 0.25) {
    const double ei = expected_improvement({-0.5, sd}, 0.0);
    CHECK(ei >= prev);
    prev = ei;
  }
}
