#include "doctest.h"

#include <cmath>
#include <queue>
#include <set>

#include "facildyn/bifurcation.hpp"
#include "facildyn/error.hpp"

using namespace facildyn;

namespace {

BifurcationConfig config() {
  BifurcationConfig c;
  c.threads = 1;
  return c;
}

// 4-connected components of cells carrying the given label on an (nx x nF) raster.
int components(const std::vector<RegionCell>& cells, std::size_t nx, std::size_t nF, Region r) {
  std::vector<char> seen(cells.size(), 0);
  int count = 0;
  for (std::size_t s = 0; s < cells.size(); ++s) {
    if (seen[s] || cells[s].label.region != r) continue;
    ++count;
    std::queue<std::size_t> q;
    q.push(s);
    seen[s] = 1;
    while (!q.empty()) {
      const std::size_t k = q.front();
      q.pop();
      const std::size_t f = k / nx, i = k % nx;
      auto visit = [&](std::size_t ff, std::size_t ii) {
        const std::size_t j = ff * nx + ii;
        if (!seen[j] && cells[j].label.region == r) {
          seen[j] = 1;
          q.push(j);
        }
      };
      if (i > 0) visit(f, i - 1);
      if (i + 1 < nx) visit(f, i + 1);
      if (f > 0) visit(f - 1, i);
      if (f + 1 < nF) visit(f + 1, i);
    }
  }
  return count;
}

}  // namespace

TEST_CASE("bracket ends have opposite gap signs") {
  const auto cfg = config();
  for (double F : {0.05, 0.2, 1.0, 5.0, 20.0, 50.0}) {
    CAPTURE(F);
    const double lo = section_gap(SmoothParams::make(1, 3, 1.5 + 1e-4, F), cfg.shooting);
    const double hi = section_gap(SmoothParams::make(1, 3, 2.0 - 1e-4, F), cfg.shooting);
    CHECK(lo > 0.0);
    CHECK(hi < 0.0);
  }
}

TEST_CASE("one sign change over 200 samples") {
  const auto cfg = config();
  int changes = 0;
  double prev = NAN;
  for (int i = 0; i < 200; ++i) {
    const double xe = 1.5 + 1e-4 + (0.5 - 2e-4) * i / 199.0;
    const double g = section_gap(SmoothParams::make(1, 3, xe, 1), cfg.shooting);
    if (i > 0 && (g > 0) != (prev > 0)) ++changes;
    prev = g;
  }
  CHECK(changes == 1);
}

TEST_CASE("heteroclinic solve at F = 1") {
  const auto s = heteroclinic_xe(1, 3, 1, config());
  CHECK(s.xe_h > 1.5);
  CHECK(s.xe_h < 2.0);
  CHECK(s.bracket_width <= 1e-6);
  CHECK(s.residual < 1e-6);
  CHECK(s.gap_lo > 0.0);
  CHECK(s.gap_hi < 0.0);
  // cycle just above, collapse just below
  ShootingConfig sh;
  CHECK(find_limit_cycle(SmoothParams::make(1, 3, s.xe_h + 0.01, 1), sh).has_value());
  CHECK_FALSE(find_limit_cycle(SmoothParams::make(1, 3, s.xe_h - 0.01, 1), sh).has_value());
}

TEST_CASE("heteroclinic curve properties") {
  std::vector<double> F;
  for (int i = 1; i <= 100; ++i) F.push_back(0.05 * i);
  const auto c = heteroclinic_curve(1, 3, F, config());
  REQUIRE(c.size() == F.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    CAPTURE(F[i]);
    CHECK(c.ok(i));
    CHECK(c.values[i] >= 1.5);
    CHECK(c.values[i] < 2.0);
    if (i > 0) CHECK(c.values[i] < c.values[i - 1]);
  }
  CHECK(c.strictly_decreasing);
  CHECK(c.confined);
}

TEST_CASE("empty grid gives an empty curve") {
  const auto c = heteroclinic_curve(1, 3, {}, config());
  CHECK(c.size() == 0);
  CHECK(c.strictly_decreasing);
}

TEST_CASE("distance to x_c shrinks as F grows") {
  const auto c = heteroclinic_curve(1, 3, {0.5, 2, 8, 32}, config());
  for (std::size_t i = 1; i < c.size(); ++i) CHECK(c.values[i] - 1.5 < c.values[i - 1] - 1.5);
}

TEST_CASE("region labels") {
  const auto cfg = config();
  CHECK(classify_region(SmoothParams::make(1, 3, 2.5, 1), cfg).region == Region::Static);
  CHECK(classify_region(SmoothParams::make(1, 3, 1.98, 1), cfg).region == Region::Oscillation);
  CHECK(classify_region(SmoothParams::make(1, 3, 1.55, 1), cfg).region == Region::Collapse);

  const auto s = heteroclinic_xe(1, 3, 1, cfg);
  const auto on = classify_region(SmoothParams::make(1, 3, s.xe_h, 1), cfg);
  CHECK(on.region == Region::Heteroclinic);

  const auto l = label_region(1, 3, 1.8, 1.9, 1e-6);
  CHECK(l.region == Region::Collapse);
  CHECK(l.margin == doctest::Approx(0.1));
}

TEST_CASE("collapse label matches a collapsing trajectory") {
  const auto p = SmoothParams::make(1, 3, 1.55, 1);
  IntegratorConfig ic;
  ic.t_max = 300;
  const auto t = integrate(p, {1.5, 0.3}, ic);
  CHECK(t.back().x < 1e-3);
}

TEST_CASE("region grid has one collapse band and one oscillation band") {
  std::vector<double> xe, F;
  for (int i = 0; i < 100; ++i) xe.push_back(1.05 + 1.9 * i / 99.0);
  for (int j = 0; j < 50; ++j) F.push_back(0.1 + 4.9 * j / 49.0);
  const auto cells = region_grid(1, 3, xe, F, config());
  REQUIRE(cells.size() == xe.size() * F.size());
  CHECK(components(cells, xe.size(), F.size(), Region::Collapse) == 1);
  CHECK(components(cells, xe.size(), F.size(), Region::Oscillation) == 1);
  // collapse sits left of oscillation in every row
  for (std::size_t f = 0; f < F.size(); ++f) {
    double last_collapse = 0, first_osc = 10;
    for (std::size_t i = 0; i < xe.size(); ++i) {
      const auto& c = cells[f * xe.size() + i];
      CHECK(c.F == F[f]);
      if (c.label.region == Region::Collapse) last_collapse = std::max(last_collapse, c.xe);
      if (c.label.region == Region::Oscillation) first_osc = std::min(first_osc, c.xe);
    }
    CHECK(last_collapse < first_osc);
  }
}

TEST_CASE("cycle sweep") {
  const auto cfg = config();
  const double xe_h = heteroclinic_xe(1, 3, 1, cfg).xe_h;
  std::vector<double> grid;
  for (int i = 0; i < 8; ++i) grid.push_back(1.99 - (1.99 - xe_h - 0.002) * i / 7.0);
  grid.push_back(xe_h - 0.05);
  grid.push_back(2.2);
  const auto rows = cycle_sweep(1, 3, grid, 1, cfg);
  REQUIRE(rows.size() == grid.size());
  for (int i = 0; i < 8; ++i) CHECK(rows[i].status == CycleStatus::Cycle);
  for (int i = 1; i < 8; ++i) CHECK(rows[i].period > rows[i - 1].period);
  CHECK(rows[8].status == CycleStatus::Collapse);
  CHECK(rows[9].status == CycleStatus::Static);
}

TEST_CASE("period tends to T0 at the Hopf point") {
  const double T0 = hopf_constants(1, 3, 1).T0;
  const auto rows = cycle_sweep(1, 3, {2 - 4e-3, 2 - 2e-3, 2 - 1e-3}, 1, config());
  double prev_err = INFINITY;
  for (const auto& r : rows) {
    REQUIRE(r.status == CycleStatus::Cycle);
    const double err = std::abs(r.period - T0) / T0;
    CHECK(err < prev_err);
    prev_err = err;
  }
  CHECK(prev_err < 5e-3);
}

TEST_CASE("thread count does not change the curve") {
  auto a = config();
  auto b = config();
  b.threads = 4;
  const std::vector<double> F{0.3, 0.9, 2.7};
  const auto ca = heteroclinic_curve(1, 3, F, a);
  const auto cb = heteroclinic_curve(1, 3, F, b);
  for (std::size_t i = 0; i < F.size(); ++i) CHECK(ca.values[i] == cb.values[i]);
}
