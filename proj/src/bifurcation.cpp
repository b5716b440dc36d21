#include "facildyn/bifurcation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "facildyn/error.hpp"
#include "facildyn/parallel.hpp"

namespace facildyn {

HeteroclinicSolve heteroclinic_xe(double x0, double x1, double F, const BifurcationConfig& cfg) {
  const auto L = loci(x0, x1);
  if (!(F > 0.0) || !std::isfinite(F)) throw Error(ErrorCode::InvalidArgument, "F must be finite and > 0");
  if (!(cfg.xe_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "xe_tol must be > 0");
  const SmoothParams base = SmoothParams::make(x0, x1, L.x_H, F);
  auto gap = [&](double xe) { return section_gap(base.with_xe(xe), cfg.shooting); };

  HeteroclinicSolve s;
  s.F = F;
  double lo = L.x_c + cfg.bracket_margin;
  double hi = L.x_H - cfg.bracket_margin;
  double g_lo = gap(lo);
  double g_hi = gap(hi);
  s.gap_lo = g_lo;
  s.gap_hi = g_hi;
  if ((g_lo > 0.0) == (g_hi > 0.0)) {
    std::ostringstream os;
    os.precision(10);
    os << "no sign change of the section gap on [" << lo << ", " << hi << "] at F = " << F << ": gaps " << g_lo
       << ", " << g_hi;
    throw Error(ErrorCode::Bracket, os.str());
  }

  // gap > 0 on the collapse side (small xe), < 0 on the cycle side.
  const bool lo_positive = g_lo > 0.0;
  double mid = 0.5 * (lo + hi), g_mid = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    mid = 0.5 * (lo + hi);
    g_mid = gap(mid);
    if (g_mid == 0.0) break;
    if ((g_mid > 0.0) == lo_positive) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < cfg.xe_tol && std::abs(g_mid) < cfg.gap_tol) break;
    if (hi - lo < 64.0 * std::numeric_limits<double>::epsilon() * L.x_H) break;
  }
  s.xe_h = mid;
  s.iterations = it + 1;
  s.residual = std::abs(g_mid);
  s.bracket_width = hi - lo;
  if (s.residual >= cfg.gap_tol || s.bracket_width >= cfg.xe_tol) {
    std::ostringstream os;
    os.precision(10);
    os << "bisection stopped at xe = " << mid << " with |gap| = " << s.residual << ", bracket width "
       << s.bracket_width;
    throw Error(ErrorCode::Inconclusive, os.str());
  }
  return s;
}

BifurcationCurve heteroclinic_curve(double x0, double x1, const std::vector<double>& F_grid,
                                    const BifurcationConfig& cfg) {
  const auto L = loci(x0, x1);
  const std::size_t n = F_grid.size();
  BifurcationCurve c;
  c.parameters = F_grid;
  c.values.assign(n, std::numeric_limits<double>::quiet_NaN());
  c.diagnostics.assign(n, HeteroclinicSolve{});
  c.failures.assign(n, std::nullopt);
  parallel_for(n, cfg.threads, [&](std::size_t i) {
    try {
      c.diagnostics[i] = heteroclinic_xe(x0, x1, F_grid[i], cfg);
      c.values[i] = c.diagnostics[i].xe_h;
    } catch (const Error& e) {
      c.diagnostics[i].F = F_grid[i];
      c.diagnostics[i].iterations = -1;
      c.failures[i] = std::string(to_string(e.code())) + ": " + e.what();
    }
  });
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (!c.ok(i)) continue;
    if (!(c.values[i] < prev)) c.strictly_decreasing = false;
    if (!(c.values[i] >= L.x_c && c.values[i] < L.x_H)) c.confined = false;
    prev = c.values[i];
  }
  return c;
}

const char* to_string(Region r) noexcept {
  switch (r) {
    case Region::Static: return "Omega1-static";
    case Region::Oscillation: return "Omega2-oscillation";
    case Region::Heteroclinic: return "Omega3-heteroclinic";
    case Region::Collapse: return "Omega4-collapse";
  }
  return "unknown";
}

RegionLabel label_region(double x0, double x1, double xe, std::optional<double> xe_h, double tol) {
  if (!(x0 < xe && xe < x1)) throw Error(ErrorCode::Domain, "region labels need x0 < xe < x1");
  const auto L = loci(x0, x1);
  RegionLabel r;
  r.xe_h = xe_h;
  if (xe >= L.x_H) {
    r.region = Region::Static;
    r.margin = xe - L.x_H;
    return r;
  }
  if (!xe_h) throw Error(ErrorCode::InvalidArgument, "xe below x_H needs the heteroclinic abscissa");
  const double d = xe - *xe_h;
  if (std::abs(d) < tol) {
    r.region = Region::Heteroclinic;
    r.margin = std::abs(d);
  } else if (d > 0.0) {
    r.region = Region::Oscillation;
    r.margin = std::min(d, L.x_H - xe);
  } else {
    r.region = Region::Collapse;
    r.margin = -d;
  }
  return r;
}

RegionLabel classify_region(const SmoothParams& p, const BifurcationConfig& cfg) {
  if (!p.generic_configuration()) throw Error(ErrorCode::Domain, "region labels need x0 < xe < x1");
  std::optional<double> xe_h;
  if (p.xe() < loci(p).x_H) xe_h = heteroclinic_xe(p.x0(), p.x1(), p.F(), cfg).xe_h;
  return label_region(p.x0(), p.x1(), p.xe(), xe_h, cfg.xe_tol);
}

std::vector<RegionCell> region_grid(double x0, double x1, const std::vector<double>& xe_grid,
                                    const std::vector<double>& F_grid, const BifurcationConfig& cfg) {
  const auto L = loci(x0, x1);
  const bool need = std::any_of(xe_grid.begin(), xe_grid.end(), [&](double xe) { return xe < L.x_H; });
  std::vector<std::optional<double>> roots(F_grid.size());
  if (need) {
    const auto curve = heteroclinic_curve(x0, x1, F_grid, cfg);
    for (std::size_t j = 0; j < F_grid.size(); ++j) {
      if (!curve.ok(j)) throw Error(ErrorCode::Bracket, "F = " + std::to_string(F_grid[j]) + ": " + *curve.failures[j]);
      roots[j] = curve.values[j];
    }
  }
  std::vector<RegionCell> out;
  out.reserve(xe_grid.size() * F_grid.size());
  for (std::size_t j = 0; j < F_grid.size(); ++j) {
    for (double xe : xe_grid) out.push_back({xe, F_grid[j], label_region(x0, x1, xe, roots[j], cfg.xe_tol)});
  }
  return out;
}

const char* to_string(CycleStatus s) noexcept {
  switch (s) {
    case CycleStatus::Cycle: return "cycle";
    case CycleStatus::Static: return "static";
    case CycleStatus::Collapse: return "collapse";
    case CycleStatus::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

std::vector<CycleSweepRow> cycle_sweep(double x0, double x1, const std::vector<double>& xe_grid, double F,
                                       const BifurcationConfig& cfg) {
  const auto L = loci(x0, x1);
  std::vector<CycleSweepRow> rows(xe_grid.size());
  parallel_for(xe_grid.size(), cfg.threads, [&](std::size_t i) {
    CycleSweepRow& r = rows[i];
    r.xe = xe_grid[i];
    try {
      const auto c = find_limit_cycle(SmoothParams::make(x0, x1, r.xe, F), cfg.shooting);
      if (c) {
        r.status = CycleStatus::Cycle;
        r.amplitude = c->amplitude;
        r.period = c->period;
        r.multiplier = c->multiplier;
      } else {
        r.status = r.xe >= L.x_H ? CycleStatus::Static : CycleStatus::Collapse;
      }
    } catch (const Error& e) {
      r.status = CycleStatus::Inconclusive;
      r.note = std::string(to_string(e.code())) + ": " + e.what();
    }
  });
  // A missing cycle between xe_h and x_H contradicts the region structure; flag it.
  bool any_collapse = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.status == CycleStatus::Collapse; });
  if (any_collapse) {
    try {
      const double xe_h = heteroclinic_xe(x0, x1, F, cfg).xe_h;
      for (auto& r : rows) {
        if (r.status == CycleStatus::Collapse && r.xe > xe_h + cfg.xe_tol) {
          r.status = CycleStatus::Inconclusive;
          r.note = "no cycle found although xe > xe_h";
        }
      }
    } catch (const Error& e) {
      for (auto& r : rows) {
        if (r.status == CycleStatus::Collapse) r.note = std::string("xe_h unavailable: ") + e.what();
      }
    }
  }
  return rows;
}

}  // namespace facildyn
