#pragma once

#include <optional>
#include <string>
#include <vector>

#include "facildyn/integrator.hpp"
#include "facildyn/params.hpp"
#include "facildyn/smooth_model.hpp"

namespace facildyn {

struct TrajectoryEvent {
  double t = 0.0;
  std::string kind;
  State state;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  std::vector<TrajectoryEvent> events;
  /// Filippov modes (0 region 1, 1 region 2, 2 sliding); empty for smooth runs.
  std::vector<int> modes;
  bool reversed = false;
  Termination termination = Termination::TimeLimit;

  [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
  [[nodiscard]] const State& back() const { return states.back(); }
};

/// Settings for separatrix shooting, section gaps and cycle search.
struct ShootingConfig {
  IntegratorConfig integrator;
  double offset_scale = 1e-6;     // offset = offset_scale * (x1 - x0)
  double richardson_tol = 1e-4;   // allowed height shift when halving the offset
  int max_refinements = 8;
  bool richardson = true;
  double small_F_horizon = 40.0;  // t_max >= small_F_horizon / (F min(xe - x0, x1 - xe))
  double escape_radius = 1e3;     // scaled by max(1, F)
  double cycle_tol = 1e-9;        // |P(y) - y| at an accepted fixed point
  double cycle_agreement = 1e-6;  // seeds must agree to this
  double equilibrium_floor = 1e-4;  // times (x1 - x0); closer fixed points are the equilibrium
  int max_map_iterations = 400;
  int scan_points = 24;
};

[[nodiscard]] Trajectory integrate(const SmoothParams& p, const State& s0, const IntegratorConfig& cfg);

enum class Separatrix { UnstableOfX0, StableOfX0, UnstableOfX1, StableOfX1 };

[[nodiscard]] const char* to_string(Separatrix which) noexcept;

/// Saddle + offset * unit eigenvector (into the open first quadrant); stable
/// branches run in reversed time. Stops at the first crossing of x = xe, or with
/// an "equilibrium" event when the branch is absorbed by (xe, ye).
[[nodiscard]] Trajectory trace_separatrix(const SmoothParams& p, Separatrix which, double offset,
                                          const ShootingConfig& cfg);

struct SectionCrossing {
  double height = 0.0;
  double offset = 0.0;
  double richardson_shift = 0.0;
  double time = 0.0;
};

/// Height on x = xe of the traced separatrix, with offset refinement.
[[nodiscard]] SectionCrossing separatrix_crossing(const SmoothParams& p, Separatrix which, const ShootingConfig& cfg);

struct GapResult {
  double gap = 0.0;  // h_u - h_s
  SectionCrossing unstable_x1;
  SectionCrossing stable_x0;
};

/// Signed gap between W^u(x1,0) and W^s(x0,0) on x = xe. Negative: the
/// unstable manifold returns inside (cycle intact); positive: collapse.
[[nodiscard]] GapResult section_gap_detail(const SmoothParams& p, const ShootingConfig& cfg);
[[nodiscard]] double section_gap(const SmoothParams& p, const ShootingConfig& cfg);

enum class ReturnOutcome { Returned, Collapse, Escape, Settled, TimeLimit };

struct ReturnMapResult {
  ReturnOutcome outcome = ReturnOutcome::TimeLimit;
  double y = 0.0;       // next crossing height when returned
  double period = 0.0;  // elapsed time
};

/// First return to x = xe with x decreasing (counter-clockwise flow), from (xe, y0).
/// reversed = true follows the clockwise reversed flow back to the same branch.
[[nodiscard]] ReturnMapResult return_map(const SmoothParams& p, double y0, const ShootingConfig& cfg,
                                         bool reversed = false);

struct Amplitude {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;
};

struct LimitCycle {
  State section_point;
  double period = 0.0;
  std::vector<double> times;
  std::vector<State> samples;
  Amplitude amplitude;
  double residual = 0.0;    // |P(y) - y| at the section point
  double multiplier = 0.0;  // dP/dy at the section point
  std::vector<double> seed_fixed_points;
};

/// Stable cycle around the coexistence point, or nullopt when trajectories
/// settle on the equilibrium or collapse. Throws Error(Inconclusive) if the
/// iteration stalls or seeds disagree.
[[nodiscard]] std::optional<LimitCycle> find_limit_cycle(const SmoothParams& p, const ShootingConfig& cfg);

/// Integration horizon used for shooting at this F.
[[nodiscard]] double shooting_horizon(const SmoothParams& p, const ShootingConfig& cfg) noexcept;

}  // namespace facildyn
