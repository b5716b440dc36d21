#include "doctest.h"

#include <cmath>
#include <random>
#include <set>

#include "facildyn/error.hpp"
#include "facildyn/stochastic.hpp"

using namespace facildyn;

namespace {

NoiseConfig noise(double sigma, std::uint64_t seed = 1) {
  NoiseConfig c;
  c.sigma = sigma;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("zero noise is explicit Euler") {
  const auto p = SmoothParams::make(1, 3, 2.2, 1.5);
  const auto c = noise(0.0);
  const State s{1.7, 0.4};
  const auto f = field(p, s);
  const auto n = em_step(p, s, c, 0.37);
  CHECK(n.x == s.x + f[0] * c.dt);
  CHECK(n.y == s.y + f[1] * c.dt);

  const auto o = em_step(p, {0, 0}, c, 0.0);
  CHECK(o.x == 0.0);
  CHECK(o.y == 0.0);
}

TEST_CASE("noise increment variance") {
  const auto p = SmoothParams::make(1, 3, 2.2, 1.5);
  const double sigma = 0.8;
  const auto c = noise(sigma);
  const State s{1.7, 0.4};
  const double drift = field(p, s)[0] * c.dt;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> nd(0.0, std::sqrt(c.dt));
  const int n = 100000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    const double d = em_step(p, s, c, nd(rng)).x - s.x - drift;
    sum += d;
    sum2 += d * d;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  const double target = sigma * sigma * c.dt;
  CHECK(std::abs(var - target) < 3.0 * target * std::sqrt(2.0 / (n - 1)));
}

TEST_CASE("negative coordinates are clamped") {
  const auto p = SmoothParams::make(1, 3, 2.2, 1.5);
  const auto s = em_step(p, {0.01, 0.3}, noise(1.0), -1.0);
  CHECK(s.x == 0.0);
  CHECK(s.y > 0.0);
}

TEST_CASE("zero noise never needs the clamp from interior starts") {
  for (double xe : {1.6, 1.9, 1.95, 2.1, 2.6}) {
    for (double F : {0.5, 1.0, 5.0}) {
      const auto p = SmoothParams::make(1, 3, xe, F);
      const auto c = noise(0.0);
      State s = c.initial;
      for (int k = 0; k < 30000; ++k) {
        const auto f = field(p, s);
        CHECK_MESSAGE(s.x + f[0] * c.dt >= 0.0, "xe=" << xe << " F=" << F << " step " << k);
        CHECK_MESSAGE(s.y + f[1] * c.dt >= 0.0, "xe=" << xe << " F=" << F << " step " << k);
        if (s.x + f[0] * c.dt < 0.0 || s.y + f[1] * c.dt < 0.0) break;
        s = em_step(p, s, c, 0.0);
      }
    }
  }
}

TEST_CASE("deterministic realizations") {
  CHECK(simulate_realization(SmoothParams::make(1, 3, 1.98, 1), noise(0.0)).survived);
  CHECK(simulate_realization(SmoothParams::make(1, 3, 1.905, 1), noise(0.0)).survived);
  // 1.9 lies just below the solved heteroclinic value 1.90127 at F = 1
  const auto r = simulate_realization(SmoothParams::make(1, 3, 1.9, 1), noise(0.0));
  CHECK_FALSE(r.survived);
  REQUIRE(r.extinction_time.has_value());
  CHECK_FALSE(r.blowup);
}

TEST_CASE("strong noise: extinction times vary between realizations") {
  auto c = noise(5.0);
  c.scaling = NoiseScaling::DriftWeighted;
  std::set<double> times;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    c.seed = s;
    const auto r = simulate_realization(SmoothParams::make(1, 3, 1.9, 1), c);
    CHECK_FALSE(r.survived);
    if (r.extinction_time) times.insert(*r.extinction_time);
  }
  CHECK(times.size() >= 3);
}

TEST_CASE("same seed, same realization") {
  const auto p = SmoothParams::make(1, 3, 1.95, 1);
  const auto a = simulate_realization(p, noise(1.0, 42));
  const auto b = simulate_realization(p, noise(1.0, 42));
  CHECK(a.survived == b.survived);
  CHECK(a.final_state.x == b.final_state.x);
  CHECK(a.final_state.y == b.final_state.y);
  const auto c = simulate_realization(p, noise(1.0, 43));
  CHECK(c.final_state.x != a.final_state.x);
}

TEST_CASE("seed derivation") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t cell = 0; cell < 50; ++cell) {
    for (std::uint64_t r = 0; r < 50; ++r) seen.insert(derive_seed(7, cell, r));
  }
  CHECK(seen.size() == 2500);
  CHECK(derive_seed(7, 1, 2) == derive_seed(7, 1, 2));
  CHECK(derive_seed(7, 1, 2) != derive_seed(7, 2, 1));
  CHECK(derive_seed(7, 1, 2) != derive_seed(8, 1, 2));
}

TEST_CASE("ensembles do not depend on the thread count") {
  auto c = noise(0.0, 2024);
  c.t_max = 100;
  const std::vector<double> sig{0.0, 1.0}, xe{1.8, 1.95, 2.1};
  const auto a = survival_grid(1, 3, 1, sig, xe, 12, c, 1);
  const auto b = survival_grid(1, 3, 1, sig, xe, 12, c, 3);
  REQUIRE(a.cells.size() == 6);
  REQUIRE(b.cells.size() == 6);
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    CHECK(a.cells[i].survival == b.cells[i].survival);
    CHECK(a.cells[i].n_extinct == b.cells[i].n_extinct);
    CHECK(a.cells[i].mean_ext_time == b.cells[i].mean_ext_time);
    CHECK(a.cells[i].std_ext_time == b.cells[i].std_ext_time);
    CHECK(a.cells[i].cell_index == i);
  }
  CHECK(a.at(1, 2).sigma == 1.0);
  CHECK(a.at(1, 2).xe == 2.1);
}

TEST_CASE("cell statistics") {
  auto c = noise(0.0, 5);
  const auto r = survival_grid(1, 3, 1, {0.0}, {1.7, 1.98}, 6, c, 1);
  const auto& dead = r.at(0, 0);
  CHECK(dead.survival == 0.0);
  CHECK(dead.n_extinct == 6);
  REQUIRE(dead.mean_ext_time.has_value());
  CHECK(*dead.std_ext_time < 1e-9);  // identical deterministic runs
  const auto& alive = r.at(0, 1);
  CHECK(alive.survival == 1.0);
  CHECK_FALSE(alive.mean_ext_time.has_value());
  CHECK_FALSE(alive.std_ext_time.has_value());
  for (const auto& cell : r.cells) {
    CHECK(cell.survival >= 0.0);
    CHECK(cell.survival <= 1.0);
    CHECK(cell.n == 6);
  }
}

TEST_CASE("deterministic column steps at the heteroclinic value") {
  std::vector<double> xe;
  for (int i = 0; i <= 50; ++i) xe.push_back(1.5 + 0.01 * i);
  const auto r = survival_grid(1, 3, 1, {0.0}, xe, 1, noise(0.0), 1);
  // a single 0 -> 1 step
  int steps = 0;
  for (std::size_t i = 1; i < xe.size(); ++i) {
    if (r.at(0, i).survival != r.at(0, i - 1).survival) ++steps;
  }
  CHECK(steps == 1);
  const double thr = survival_threshold(r, 0, 0.5);
  CHECK(thr >= 1.90);
  CHECK(thr <= 1.92);
}

TEST_CASE("survival threshold interpolation") {
  EnsembleResult r;
  r.sigma_grid = {0.0};
  r.xe_grid = {1.0, 2.0, 3.0};
  r.cells.resize(3);
  r.cells[0].survival = 0.0;
  r.cells[1].survival = 0.25;
  r.cells[2].survival = 0.75;
  CHECK(survival_threshold(r, 0, 0.5) == doctest::Approx(2.5));
  r.cells[2].survival = 0.1;
  CHECK(survival_threshold(r, 0, 0.5) == 3.0);
  for (auto& c : r.cells) c.survival = 1.0;
  CHECK(survival_threshold(r, 0, 0.5) == 1.0);
}

TEST_CASE("halving dt barely changes the deterministic classification") {
  std::vector<double> xe;
  for (int i = 0; i <= 50; ++i) xe.push_back(1.5 + 0.014 * i);
  int differ = 0, total = 0;
  for (double F : {0.5, 1.0, 2.0, 5.0}) {
    auto c = noise(0.0);
    const auto a = survival_grid(1, 3, F, {0.0}, xe, 1, c, 1);
    c.dt = 0.005;
    const auto b = survival_grid(1, 3, F, {0.0}, xe, 1, c, 1);
    for (std::size_t i = 0; i < xe.size(); ++i, ++total) differ += a.at(0, i).survival != b.at(0, i).survival;
  }
  CHECK(differ <= 0.02 * total);
}

TEST_CASE("configuration checks") {
  auto c = noise(-1.0);
  CHECK_THROWS_AS(c.validate(), Error);
  c = noise(1.0);
  c.dt = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK(parse_noise_scaling("drift-weighted") == NoiseScaling::DriftWeighted);
  CHECK(std::string(to_string(NoiseScaling::Increment)) == "increment");
  CHECK_THROWS_AS((void)parse_noise_scaling("nope"), Error);
}
