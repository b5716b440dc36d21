#pragma once

// Piecewise-linear (Filippov) version of the model. Sigma is the line x = xe;
// Z1 acts on x0 < x < xe, Z2 on xe < x < x1.

#include <optional>
#include <string>
#include <vector>

#include "facildyn/dynamics.hpp"
#include "facildyn/integrator.hpp"
#include "facildyn/params.hpp"

namespace facildyn {

struct PwlParams {
  double x0 = 1.0;
  double x1 = 3.0;
  double xe = 2.0;
  double F = 1.0;

  /// Requires 0 < x0 < xe < x1 and F > 0.
  static PwlParams make(double x0, double x1, double xe, double F);
  static PwlParams from(const SmoothParams& p);
  void validate() const;

  [[nodiscard]] double lambda() const noexcept { return xe - 0.5 * (x0 + x1); }
  /// Height of the double-tangency (fold) point, origin of the translated frame.
  [[nodiscard]] double fold_height() const noexcept { return (x1 - x0) * (x1 - x0) / (2.0 * x0 * x1); }
};

enum class PwlMode { Region1 = 0, Region2 = 1, Sliding = 2 };

[[nodiscard]] const char* to_string(PwlMode m) noexcept;

struct PwlState {
  double x = 0.0;
  double y = 0.0;
  PwlMode mode = PwlMode::Region1;
};

/// Z1 or Z2 at s; throws InvalidArgument for the sliding mode.
[[nodiscard]] Velocity pwl_field(const PwlParams& p, const PwlState& s);

/// Filippov sliding velocity (0, y') at height y on Sigma.
[[nodiscard]] Velocity sliding_field(const PwlParams& p, double y);

/// Normal components of Z1 and Z2 on Sigma at height y.
struct SigmaNormals {
  double z1 = 0.0;
  double z2 = 0.0;
};
[[nodiscard]] SigmaNormals sigma_normals(const PwlParams& p, double y) noexcept;

struct SaddleMatch {
  std::array<double, 2> pwl_x0{};     // {unstable, stable}
  std::array<double, 2> smooth_x0{};
  std::array<double, 2> pwl_x1{};
  std::array<double, 2> smooth_x1{};
  double pwl_ratio = 0.0;
  double smooth_ratio = 0.0;
  bool match = false;
};

[[nodiscard]] SaddleMatch saddle_eigenstructure_match(const PwlParams& p);

/// H1 (side 1) or H2 (side 2) in the translated frame x - xe, y - fold_height.
[[nodiscard]] double first_integral(const PwlParams& p, int side, const State& s);

struct SlidingData {
  double lambda = 0.0;
  double T1 = 0.0;        // tangency heights relative to the fold point
  double T2 = 0.0;
  double P_lambda = 0.0;  // pseudo-equilibrium, relative to the fold point
  double T1_abs = 0.0;    // absolute heights on Sigma
  double T2_abs = 0.0;
  double P_abs = 0.0;
  bool attracting = false;  // segment attracting (lambda > 0)
  bool stable = false;      // pseudo-equilibrium stable (lambda > 0)
};

/// Throws Error(Degenerate) at lambda = 0.
[[nodiscard]] SlidingData sliding_data(const PwlParams& p);

struct PwlLoci {
  double x0 = 0.0;
  double x1 = 0.0;
  double x_H = 0.0;
  double x_geo = 0.0;

  /// Heteroclinic curve on (x_geo, x_H]; Domain error elsewhere.
  [[nodiscard]] double F_het(double xe) const;
  [[nodiscard]] double xe_het(double F) const;
  /// No-return curves, defined geometrically (both >= 0): W^s(x0) meets the
  /// Z2 tangency (F_B1, xe < x_H) and W^u(x1) meets the Z1 tangency (F_B2, xe > x_H).
  [[nodiscard]] double F_B1(double xe) const;
  [[nodiscard]] double F_B2(double xe) const;
  [[nodiscard]] double T1(double lambda) const noexcept;
  [[nodiscard]] double T2(double lambda) const noexcept;
  [[nodiscard]] double P_lambda(double lambda) const noexcept;
  [[nodiscard]] double V1(double F) const;
  /// dF_het/dxe at x_H.
  [[nodiscard]] double F_het_slope_at_hopf() const noexcept;
  /// Heights on Sigma of W^s(x0,0) and W^u(x1,0).
  [[nodiscard]] double h_s(double xe, double F) const noexcept;
  [[nodiscard]] double h_u(double xe, double F) const noexcept;
};

[[nodiscard]] PwlLoci pwl_loci(double x0, double x1);
[[nodiscard]] PwlLoci pwl_loci(const PwlParams& p);

/// xe_het(F) from x_H and the product x0 x1.
[[nodiscard]] double pwl_xe_het(double F, double x_H, double x0x1);

struct PwlConfig {
  double t_max = 100.0;
  double sample_dt = 0.01;
  std::size_t max_sigma_events = 10000;
  double tangency_tol = 1e-10;
  double settle_tol = 1e-9;       // pseudo-equilibrium neighbourhood, times (x1 - x0)
  double return_horizon = 1e4;    // time allowed for one half-return
  double cycle_tol = 1e-9;
  double cycle_agreement = 1e-6;
  double equilibrium_floor = 1e-9;  // times (x1 - x0) above the upper tangency
  int max_map_iterations = 2000;
  int scan_points = 40;
  IntegratorConfig sliding;
};

/// Closed-form propagation inside the regions, Filippov rules on Sigma. Events:
/// "cross-1-2", "cross-2-1", "slide-enter", "slide-exit", "pseudo-equilibrium",
/// "exit-left" (x reaches x0 with y > 0; the run stops there).
[[nodiscard]] Trajectory pwl_integrate(const PwlParams& p, const PwlState& s0, const PwlConfig& cfg);

enum class PwlReturn { Returned, Collapse, Sliding, TimeLimit };

struct PwlReturnResult {
  PwlReturn outcome = PwlReturn::TimeLimit;
  double y = 0.0;
  double period = 0.0;
};

/// Return to Sigma above the tangencies (crossing from side 2 into side 1).
[[nodiscard]] PwlReturnResult pwl_return_map(const PwlParams& p, double y0, const PwlConfig& cfg);

[[nodiscard]] std::optional<LimitCycle> pwl_find_limit_cycle(const PwlParams& p, const PwlConfig& cfg);

enum class PwlRegion { Omega1, Omega2, Omega3, Omega4, Omega5, Omega6, Omega7 };

[[nodiscard]] const char* to_string(PwlRegion r) noexcept;

struct PwlRegionLabel {
  PwlRegion region = PwlRegion::Omega1;
  double margin = 0.0;  // distance in xe to the curve that decided the label
};

[[nodiscard]] PwlRegionLabel pwl_classify_region(const PwlParams& p, double tol = 1e-9);

struct Resilience {
  double distance = 0.0;
  double xe_star = 0.0;
  double F_star = 0.0;
};

/// Euclidean distance in (xe, F) to the heteroclinic curve; Domain error
/// unless p is in the cycle region (or on the curve).
[[nodiscard]] Resilience resilience_distance(const PwlParams& p);

struct HabitatEffect {
  double xe_het = 0.0;
  double x_H = 0.0;
  double d_o = 0.0;                 // x_H - xe_het
  double dxe_het_dD = 0.0;          // closed form
  double dxe_het_dD_numeric = 0.0;  // central difference
  double d_o_prime = 0.0;
  int d_o_prime_sign = 0;
};

[[nodiscard]] HabitatEffect habitat_effect(const OriginalParams& p, double F);

}  // namespace facildyn
