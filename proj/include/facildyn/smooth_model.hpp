#pragma once

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "facildyn/params.hpp"

namespace facildyn {

struct State {
  double x = 0.0;
  double y = 0.0;

  /// Checked constructor: finite, nonnegative coordinates.
  static State make(double x, double y);
};

using Velocity = std::array<double, 2>;
using Matrix2 = std::array<std::array<double, 2>, 2>;

enum class EquilibriumKind { StableNode, StableFocus, UnstableNode, UnstableFocus, Saddle, Center, Degenerate };

[[nodiscard]] const char* to_string(EquilibriumKind kind) noexcept;

/// Kind from trace/determinant; det == trace^2/4 counts as a node.
[[nodiscard]] EquilibriumKind classify_linear(double trace, double det) noexcept;

struct EquilibriumReport {
  std::string name;  // "origin", "x0", "x1", "coexistence"
  State point;
  EquilibriumKind kind = EquilibriumKind::Degenerate;
  double trace = 0.0;
  double det = 0.0;
  double discriminant = 0.0;
  std::array<std::complex<double>, 2> eigenvalues{};  // real case: descending
  /// Unit eigenvectors matching eigenvalues; only for real eigenvalues.
  std::optional<std::array<std::array<double, 2>, 2>> eigenvectors;
  /// Complex case: +1 counter-clockwise, -1 clockwise.
  int rotation = 0;
  /// Set when the point leaves the closed first quadrant or sits on a transcritical exchange.
  bool degenerate_configuration = false;
};

[[nodiscard]] Velocity field(const SmoothParams& p, const State& s) noexcept;
[[nodiscard]] Matrix2 jacobian(const SmoothParams& p, const State& s) noexcept;

/// Origin, (x0,0), (x1,0) and the coexistence point, in that order.
[[nodiscard]] std::vector<EquilibriumReport> equilibria(const SmoothParams& p);

/// Theta = -F y P(x,y), P the x-velocity; sign of rotation in xe.
[[nodiscard]] double rotation_determinant(const SmoothParams& p, const State& s) noexcept;

/// True on {y > -(x-x0)(x-x1)/(x0 x1), y > 0}.
[[nodiscard]] bool in_rotation_region(const SmoothParams& p, const State& s) noexcept;

enum class Chart { U1, U2, U3 };

[[nodiscard]] const char* to_string(Chart chart) noexcept;

/// Poincare compactification chart field in local coordinates (u, v).
/// U1: x = 1/v, y = u/v;  U2: x = u/v, y = 1/v;  U3: the plane itself.
class ChartField {
 public:
  ChartField(const SmoothParams& p, Chart chart) : p_(p), chart_(chart) {}

  [[nodiscard]] Chart chart() const noexcept { return chart_; }
  [[nodiscard]] Velocity operator()(double u, double v) const noexcept;
  [[nodiscard]] Matrix2 jacobian(double u, double v) const noexcept;

 private:
  SmoothParams p_;
  Chart chart_;
};

[[nodiscard]] ChartField chart_field(const SmoothParams& p, Chart chart);

/// U2 directional blow-up u = v w: returns (w', v') after dividing out a factor v.
[[nodiscard]] Velocity u2_blowup_field(const SmoothParams& p, double w, double v) noexcept;

/// Sign of the radial flow component sampled on a circle of radius r around the
/// U2 origin, restricted to the closed first quadrant; angles ascending in [0, pi/2].
[[nodiscard]] std::vector<int> u2_sector_signs(const SmoothParams& p, double r, int samples);

}  // namespace facildyn
