#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "sphereflow/optimizer.hpp"
#include "support.hpp"

using namespace sphereflow;
using doctest::Approx;

namespace {

FreeParams random_free(std::mt19937_64& rng, int k, int p) {
  FreeParams f(k, p);
  std::normal_distribution<double> g;
  for (int l = 0; l < k; ++l) {
    auto v = f.layer(l);
    for (int i = 0; i < p; ++i) v[i] = 1.5 * g(rng) - 0.5;
    for (int i = 0; i < 3 * p; ++i) v[p + i] = g(rng);
    for (int i = 0; i < p; ++i) v[4 * p + i] = g(rng);
  }
  return f;
}

WeightedBatch random_batch(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> w(0.0, 2.0);
  WeightedBatch b;
  b.points = testing::random_points(rng, n);
  for (std::size_t i = 0; i < n; ++i) b.weights.push_back(w(rng));
  return b;
}

double max_relative_fd_error(const FreeParams& free, const WeightedBatch& batch) {
  const auto g = gradient(free, batch);
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t i = 0; i < free.size(); ++i) {
    FreeParams up = free, down = free;
    up.values[i] += h;
    down.values[i] -= h;
    const double fd = (objective(up, batch) - objective(down, batch)) / (2 * h);
    worst = std::max(worst, std::abs(g[i] - fd) / std::max({std::abs(g[i]), std::abs(fd), 1e-3}));
  }
  return worst;
}

// Points scattered around one direction.
std::vector<UnitVector> cluster(std::mt19937_64& rng, const UnitVector& mu, double spread, std::size_t n) {
  std::vector<UnitVector> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(exp_map(mu, testing::random_tangent(rng, mu, spread)));
  return out;
}

}  // namespace

TEST_CASE("decode produces valid parameters") {
  FreeParams f(2, 3);
  for (int l = 0; l < 2; ++l) {
    for (int i = 0; i < 3; ++i) f.layer(l)[3 + 3 * i + i % 3] = 1.0;
  }
  const auto comp = decode(f);
  CHECK_NOTHROW(comp.validate());
  for (const auto& layer : comp.layers) {
    for (double e : layer.etas) CHECK(e == Approx(1.0 / 3.0).epsilon(1e-15));
    for (double b : layer.betas) {
      CHECK(b == Approx(50.0 * std::tanh(std::log(2.0) / 50.0)).epsilon(1e-14));
      CHECK(b == Approx(std::log(2.0)).epsilon(1e-4));
    }
  }
  std::mt19937_64 rng(31);
  for (int i = 0; i < 100; ++i) {
    const auto c = decode(random_free(rng, 3, 2));
    for (const auto& layer : c.layers) {
      for (const auto& m : layer.centers) CHECK(std::abs(m.vec().norm() - 1.0) < 1e-12);
      for (double b : layer.betas) CHECK((b > 0.0 && b <= 50.0));
    }
  }
}

TEST_CASE("encode is a right inverse of decode") {
  std::mt19937_64 rng(32);
  for (int i = 0; i < 100; ++i) {
    const auto comp = testing::random_component(rng, 3, 1 + i % 3, 0.01, 45.0);
    const auto back = decode(encode(comp));
    for (std::size_t k = 0; k < comp.layers.size(); ++k) {
      for (std::size_t j = 0; j < comp.layers[k].size(); ++j) {
        CHECK(std::abs(back.layers[k].betas[j] - comp.layers[k].betas[j]) < 1e-10);
        CHECK(std::abs(back.layers[k].etas[j] - comp.layers[k].etas[j]) < 1e-10);
        CHECK((back.layers[k].centers[j].vec() - comp.layers[k].centers[j].vec()).norm() < 1e-10);
      }
    }
  }
}

TEST_CASE("objective matches term-by-term recomputation") {
  std::mt19937_64 rng(33);
  for (int i = 0; i < 20; ++i) {
    const auto free = random_free(rng, 3, 2);
    const auto batch = random_batch(rng, 10);
    const auto comp = decode(free);
    double naive = 0.0;
    for (std::size_t j = 0; j < batch.size(); ++j) naive += batch.weights[j] * component_logdensity(batch.points[j], comp);
    CHECK(std::abs(objective(free, batch) - naive) < 1e-10);
  }
}

TEST_CASE("objective special cases") {
  std::mt19937_64 rng(34);
  auto batch = random_batch(rng, 7);
  const auto free = random_free(rng, 2, 2);
  std::fill(batch.weights.begin(), batch.weights.end(), 0.0);
  CHECK(objective(free, batch) == 0.0);
  const auto g = gradient(free, batch);
  CHECK(std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; }));

  // Near-identity layers: two antipodal bumps with tiny beta.
  ComponentParams comp;
  for (int k = 0; k < 4; ++k) {
    const auto m = testing::random_unit(rng);
    comp.layers.push_back({{1e-6, 1e-6}, {m, -m}, {0.5, 0.5}});
  }
  const auto unit = WeightedBatch::unit(testing::random_points(rng, 25));
  CHECK(objective(encode(comp), unit) == Approx(-25 * kLogFourPi).epsilon(1e-3));
}

TEST_CASE("gradient matches central finite differences") {
  std::mt19937_64 rng(35);
  for (int i = 0; i < 30; ++i) {
    const int k = 1 + i % 3, p = 1 + (i / 3) % 2;
    const auto free = random_free(rng, k, p);
    const auto batch = random_batch(rng, 1 + i % 10);
    CHECK(max_relative_fd_error(free, batch) < 1e-4);
  }
  SUBCASE("K=2, p=1, N=5") {
    const auto free = random_free(rng, 2, 1);
    CHECK(max_relative_fd_error(free, WeightedBatch::unit(testing::random_points(rng, 5))) < 1e-4);
  }
  SUBCASE("p up to 8") {
    for (int p = 3; p <= 8; ++p) CHECK(max_relative_fd_error(random_free(rng, 2, p), random_batch(rng, 4)) < 1e-4);
  }
}

TEST_CASE("a weight of two equals two unit copies") {
  std::mt19937_64 rng(36);
  const auto free = random_free(rng, 2, 2);
  const auto pts = testing::random_points(rng, 3);
  const WeightedBatch doubled{{pts[0], pts[1], pts[2]}, {2.0, 1.0, 1.0}};
  const WeightedBatch copies{{pts[0], pts[0], pts[1], pts[2]}, {1.0, 1.0, 1.0, 1.0}};
  CHECK(objective(free, doubled) == Approx(objective(free, copies)).epsilon(1e-13));
  const auto g1 = gradient(free, doubled), g2 = gradient(free, copies);
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(std::abs(g1[i] - g2[i]) < 1e-10 * (1 + std::abs(g1[i])));
}

TEST_CASE("objective and gradient are invariant under permuting basis functions") {
  std::mt19937_64 rng(37);
  const int p = 3;
  const auto free = random_free(rng, 2, p);
  const auto batch = random_batch(rng, 8);
  const int perm[p] = {2, 0, 1};
  FreeParams shuffled = free;
  for (int l = 0; l < 2; ++l) {
    const auto src = free.layer(l);
    auto dst = shuffled.layer(l);
    for (int i = 0; i < p; ++i) {
      dst[i] = src[perm[i]];
      for (int c = 0; c < 3; ++c) dst[p + 3 * i + c] = src[p + 3 * perm[i] + c];
      dst[4 * p + i] = src[4 * p + perm[i]];
    }
  }
  CHECK(objective(shuffled, batch) == Approx(objective(free, batch)).epsilon(1e-13));
  const auto g = gradient(free, batch), gs = gradient(shuffled, batch);
  const int per = FreeParams::per_layer(p);
  for (int l = 0; l < 2; ++l) {
    for (int i = 0; i < p; ++i) {
      const int a = l * per, j = perm[i];
      CHECK(gs[a + i] == Approx(g[a + j]).epsilon(1e-10));
      for (int c = 0; c < 3; ++c) CHECK(gs[a + p + 3 * i + c] == Approx(g[a + p + 3 * j + c]).epsilon(1e-10));
      CHECK(gs[a + 4 * p + i] == Approx(g[a + 4 * p + j]).epsilon(1e-10));
    }
  }
}

TEST_CASE("maximize with zero epochs returns the start") {
  std::mt19937_64 rng(38);
  const auto free = random_free(rng, 2, 1);
  SgdConfig cfg;
  cfg.epochs_per_mstep = 0;
  const auto r = maximize(free, WeightedBatch::unit(testing::random_points(rng, 20)), cfg);
  CHECK(r.params.values == free.values);
  CHECK(r.objective_after == r.objective_before);
}

TEST_CASE("maximize improves the fit to a single cluster") {
  std::mt19937_64 rng(39);
  const auto data = WeightedBatch::unit(cluster(rng, UnitVector(1, 2, 3), 0.3, 300));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SgdConfig cfg;
    cfg.seed = seed;
    cfg.epochs_per_mstep = 5;
    const auto r = maximize(init_free_params(20, 1, seed + 100), data, cfg);
    CHECK(r.objective_after >= r.objective_before);
    CHECK(r.objective_after == Approx(objective(r.params, data)).epsilon(1e-12));
  }
}

TEST_CASE("maximize is deterministic for a fixed seed") {
  std::mt19937_64 rng(40);
  const auto data = WeightedBatch::unit(cluster(rng, UnitVector(0, 0, 1), 0.5, 200));
  SgdConfig cfg;
  cfg.seed = 7;
  cfg.batch_size = 32;
  cfg.epochs_per_mstep = 3;
  const auto start = init_free_params(5, 2, 9);
  CHECK(maximize(start, data, cfg).params.values == maximize(start, data, cfg).params.values);
}

TEST_CASE("full-batch backtracking steps never decrease the objective") {
  std::mt19937_64 rng(41);
  const auto data = WeightedBatch::unit(cluster(rng, UnitVector(1, 0, 0), 0.4, 150));
  SgdConfig cfg;
  cfg.batch_size = data.size();
  cfg.momentum = 0.0;
  cfg.backtracking = true;
  cfg.learning_rate = 0.5;
  cfg.epochs_per_mstep = 1;
  auto free = init_free_params(5, 1, 3);
  double last = objective(free, data);
  for (int step = 0; step < 30; ++step) {
    const auto r = maximize(free, data, cfg);
    CHECK(r.objective_after >= last);
    last = r.objective_after;
    free = r.params;
  }
}

TEST_CASE("config validation") {
  SgdConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.momentum = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  WeightedBatch bad{{UnitVector(1, 0, 0)}, {-1.0}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
