#pragma once

#include <optional>
#include <string>
#include <vector>

#include "facildyn/dynamics.hpp"
#include "facildyn/params.hpp"

namespace facildyn {

struct BifurcationConfig {
  ShootingConfig shooting;
  double xe_tol = 1e-6;        // bracket width in xe; also the Omega3 band half-width
  double gap_tol = 1e-6;       // |gap| required at an accepted root
  double bracket_margin = 1e-4;
  int max_iterations = 80;
  unsigned threads = 0;        // 0: FDYN_THREADS or hardware concurrency
};

struct HeteroclinicSolve {
  double F = 0.0;
  double xe_h = 0.0;
  int iterations = 0;
  double residual = 0.0;       // |gap| at xe_h
  double bracket_width = 0.0;
  double gap_lo = 0.0;         // gap at the lower bracket end (collapse side, > 0)
  double gap_hi = 0.0;         // gap at the upper bracket end (cycle side, < 0)
};

/// Bisection on xe over [x_c + margin, x_H - margin] for the zero of section_gap.
/// Throws Error(Bracket) when both ends share a sign.
[[nodiscard]] HeteroclinicSolve heteroclinic_xe(double x0, double x1, double F, const BifurcationConfig& cfg);

struct BifurcationCurve {
  std::string parameter = "F";
  std::vector<double> parameters;
  std::vector<double> values;                     // NaN where the solve failed
  std::vector<HeteroclinicSolve> diagnostics;     // iterations = -1 where failed
  std::vector<std::optional<std::string>> failures;
  bool strictly_decreasing = true;                // over successful points
  bool confined = true;                           // x_c <= xe_h < x_H at successful points

  [[nodiscard]] std::size_t size() const noexcept { return parameters.size(); }
  [[nodiscard]] bool ok(std::size_t i) const { return !failures[i].has_value(); }
};

/// Solves every grid point (parallel, ordered by index); failures are recorded, not thrown.
[[nodiscard]] BifurcationCurve heteroclinic_curve(double x0, double x1, const std::vector<double>& F_grid,
                                                  const BifurcationConfig& cfg);

enum class Region { Static, Oscillation, Heteroclinic, Collapse };

[[nodiscard]] const char* to_string(Region r) noexcept;  // "Omega1-static", ...

struct RegionLabel {
  Region region = Region::Static;
  double margin = 0.0;  // distance in xe to the nearest boundary
  std::optional<double> xe_h;
};

/// Label from an already solved xe_h (absent when xe >= x_H needs none).
[[nodiscard]] RegionLabel label_region(double x0, double x1, double xe, std::optional<double> xe_h, double tol);

[[nodiscard]] RegionLabel classify_region(const SmoothParams& p, const BifurcationConfig& cfg);

struct RegionCell {
  double xe = 0.0;
  double F = 0.0;
  RegionLabel label;
};

/// Labels every (xe, F) pair, solving xe_h once per F. Row-major in F then xe.
[[nodiscard]] std::vector<RegionCell> region_grid(double x0, double x1, const std::vector<double>& xe_grid,
                                                  const std::vector<double>& F_grid, const BifurcationConfig& cfg);

enum class CycleStatus { Cycle, Static, Collapse, Inconclusive };

[[nodiscard]] const char* to_string(CycleStatus s) noexcept;

struct CycleSweepRow {
  double xe = 0.0;
  CycleStatus status = CycleStatus::Inconclusive;
  Amplitude amplitude;
  double period = 0.0;
  double multiplier = 0.0;
  std::string note;
};

[[nodiscard]] std::vector<CycleSweepRow> cycle_sweep(double x0, double x1, const std::vector<double>& xe_grid,
                                                     double F, const BifurcationConfig& cfg);

}  // namespace facildyn
