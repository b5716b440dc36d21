#pragma once

// Parameterizations of the facilitation / habitat-loss resource-consumer model
// and the closed-form loci of its smooth version.
//
//   original:  dV/dt = alpha V^2 (1 - D - V) - eps V - epsS V S
//              dS/dt = mu epsS V S - delta S
//   rescaled:  x' = -A x^3 + B x^2 - x y - x,   y' = F x y - G y
//   smooth:    x' = -x^3/(x0 x1) + (x0 + x1) x^2/(x0 x1) - x y - x
//              y' = F (x y - xe y)

#include <optional>
#include <string_view>

namespace facildyn {

struct OriginalParams {
  double alpha = 0.0;
  double D = 0.0;
  double eps = 1.0;
  double epsS = 0.0;
  double mu = 0.0;
  double delta = 0.0;

  /// Throws Error(InvalidArgument / DivisionByZero) if a range invariant is broken.
  static OriginalParams make(double alpha, double D, double eps, double epsS, double mu, double delta);
  void validate() const;
};

struct RescaledParams {
  double A = 0.0;
  double B = 0.0;
  double F = 0.0;
  double G = 0.0;

  [[nodiscard]] bool generic() const noexcept { return B * B - 4.0 * A > 0.0; }
};

/// Equilibrium-coordinate parameterization. Always holds 0 < x0 < x1, F > 0,
/// xe > 0 and xe != x0, x1; xe outside (x0, x1) is representable.
class SmoothParams {
 public:
  static SmoothParams make(double x0, double x1, double xe, double F);

  [[nodiscard]] double x0() const noexcept { return x0_; }
  [[nodiscard]] double x1() const noexcept { return x1_; }
  [[nodiscard]] double xe() const noexcept { return xe_; }
  [[nodiscard]] double F() const noexcept { return F_; }

  [[nodiscard]] SmoothParams with_xe(double xe) const { return make(x0_, x1_, xe, F_); }
  [[nodiscard]] SmoothParams with_F(double F) const { return make(x0_, x1_, xe_, F); }

  /// Coexistence height (x1 - xe)(xe - x0)/(x0 x1); negative outside (x0, x1).
  [[nodiscard]] double ye() const noexcept { return (x1_ - xe_) * (xe_ - x0_) / (x0_ * x1_); }
  [[nodiscard]] bool generic_configuration() const noexcept { return x0_ < xe_ && xe_ < x1_; }

  [[nodiscard]] RescaledParams rescaled() const noexcept;

 private:
  SmoothParams(double x0, double x1, double xe, double F) : x0_(x0), x1_(x1), xe_(xe), F_(F) {}
  double x0_, x1_, xe_, F_;
};

struct LocusSet {
  double x_c = 0.0;    // harmonic mean 2 x0 x1 / (x0 + x1)
  double x_H = 0.0;    // arithmetic mean (x0 + x1) / 2
  double x_geo = 0.0;  // geometric mean sqrt(x0 x1)
  double x0 = 0.0;
  double x1 = 0.0;
  std::optional<double> D_SN;

  /// Focus-node boundary F_FN(xe); +inf at xe = x0 and xe = x1.
  [[nodiscard]] double F_FN(double xe) const noexcept;
};

struct HabitatRatios {
  double R_c = 0.0;
  double R_o = 0.0;
  double R_s = 0.0;
};

struct HopfConstants {
  double L1 = 0.0;  // first Lyapunov constant
  double T0 = 0.0;  // period at the bifurcation
  double dT = 0.0;  // d(period)/d(lambda), lambda = xe - x_H
};

[[nodiscard]] RescaledParams rescale(const OriginalParams& p);
[[nodiscard]] SmoothParams to_smooth_params(const OriginalParams& p);

/// Saddle-node habitat threshold 1 - 2 sqrt(eps/alpha).
[[nodiscard]] double saddle_node_threshold(const OriginalParams& p);

[[nodiscard]] LocusSet loci(double x0, double x1);
[[nodiscard]] LocusSet loci(const SmoothParams& p);
[[nodiscard]] LocusSet loci(const OriginalParams& p);

[[nodiscard]] double focus_node_boundary(double x0, double x1, double xe) noexcept;

/// f = (xe - x0) x1 / ((x1 - xe) x0); equals 1 at xe = x_c.
[[nodiscard]] double hyperbolicity_ratio(double x0, double x1, double xe);
[[nodiscard]] double hyperbolicity_ratio(const SmoothParams& p);

[[nodiscard]] HabitatRatios habitat_ratios(double x0, double x1);
[[nodiscard]] HabitatRatios habitat_ratios(const SmoothParams& p);
[[nodiscard]] HabitatRatios habitat_ratios(const OriginalParams& p);

[[nodiscard]] HopfConstants hopf_constants(double x0, double x1, double F);
[[nodiscard]] HopfConstants hopf_constants(const SmoothParams& p);

/// Coefficient of F in the small-F expansion of the canard (and heteroclinic) curve.
[[nodiscard]] double canard_slope(double x0, double x1) noexcept;
[[nodiscard]] double canard_slope(const SmoothParams& p) noexcept;

/// Parameters read from a JSON object. Keys {x0,x1,xe,F} select the smooth
/// form, {alpha,D,eps,epsS,mu,delta} the original form; mixing is an error.
struct ParsedParams {
  SmoothParams smooth;
  std::optional<OriginalParams> original;
};

[[nodiscard]] ParsedParams params_from_json(std::string_view json_text);

}  // namespace facildyn
