#include "facildyn/smooth_model.hpp"

#include <cmath>
#include <numbers>

#include "facildyn/error.hpp"

namespace facildyn {

namespace {

// x-velocity divided by x: -(x-x0)(x-x1)/(x0 x1) - y.
double per_capita_x(const SmoothParams& p, double x, double y) noexcept {
  return -(x - p.x0()) * (x - p.x1()) / (p.x0() * p.x1()) - y;
}

std::array<double, 2> oriented_unit(double vx, double vy) noexcept {
  const double n = std::hypot(vx, vy);
  vx /= n;
  vy /= n;
  if (vy < 0.0 || (vy == 0.0 && vx < 0.0)) {
    vx = -vx;
    vy = -vy;
  }
  return {vx + 0.0, vy + 0.0};
}

std::array<double, 2> eigenvector(const Matrix2& J, double lam) noexcept {
  const double a = J[0][0], b = J[0][1], c = J[1][0], d = J[1][1];
  const double v1x = b, v1y = lam - a;
  const double v2x = lam - d, v2y = c;
  const double n1 = std::hypot(v1x, v1y), n2 = std::hypot(v2x, v2y);
  if (n1 == 0.0 && n2 == 0.0) return {1.0, 0.0};
  return n1 >= n2 ? oriented_unit(v1x, v1y) : oriented_unit(v2x, v2y);
}

EquilibriumReport analyse(std::string name, State point, const Matrix2& J) {
  EquilibriumReport r;
  r.name = std::move(name);
  r.point = point;
  r.trace = J[0][0] + J[1][1];
  r.det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
  r.discriminant = r.trace * r.trace - 4.0 * r.det;
  r.kind = classify_linear(r.trace, r.det);
  if (J[1][0] == 0.0 || J[0][1] == 0.0) {
    // Triangular: eigenvalues are the diagonal entries, exactly.
    double l1 = J[0][0], l2 = J[1][1];
    if (l1 < l2) std::swap(l1, l2);
    r.eigenvalues = {std::complex<double>(l1), std::complex<double>(l2)};
    r.eigenvectors = std::array<std::array<double, 2>, 2>{eigenvector(J, l1), eigenvector(J, l2)};
  } else if (r.discriminant >= 0.0) {
    const double s = std::sqrt(r.discriminant);
    // Stable form of the quadratic roots.
    const double q = -0.5 * (-r.trace + std::copysign(s, -r.trace));
    double l1 = q, l2 = q != 0.0 ? r.det / q : 0.0;
    if (l1 < l2) std::swap(l1, l2);
    r.eigenvalues = {std::complex<double>(l1), std::complex<double>(l2)};
    r.eigenvectors = std::array<std::array<double, 2>, 2>{eigenvector(J, l1), eigenvector(J, l2)};
  } else {
    const double im = 0.5 * std::sqrt(-r.discriminant);
    r.eigenvalues = {std::complex<double>(0.5 * r.trace, im), std::complex<double>(0.5 * r.trace, -im)};
    r.rotation = J[1][0] > 0.0 ? 1 : -1;
  }
  return r;
}

}  // namespace

State State::make(double x, double y) {
  if (!std::isfinite(x) || !std::isfinite(y)) throw Error(ErrorCode::InvalidArgument, "state must be finite");
  if (x < 0.0 || y < 0.0) throw Error(ErrorCode::InvalidArgument, "state must be nonnegative");
  return {x, y};
}

const char* to_string(EquilibriumKind kind) noexcept {
  switch (kind) {
    case EquilibriumKind::StableNode: return "stable-node";
    case EquilibriumKind::StableFocus: return "stable-focus";
    case EquilibriumKind::UnstableNode: return "unstable-node";
    case EquilibriumKind::UnstableFocus: return "unstable-focus";
    case EquilibriumKind::Saddle: return "saddle";
    case EquilibriumKind::Center: return "center";
    case EquilibriumKind::Degenerate: return "degenerate";
  }
  return "unknown";
}

EquilibriumKind classify_linear(double trace, double det) noexcept {
  if (det < 0.0) return EquilibriumKind::Saddle;
  if (det == 0.0) return EquilibriumKind::Degenerate;
  if (trace == 0.0) return EquilibriumKind::Center;
  const bool focus = trace * trace - 4.0 * det < 0.0;
  if (trace < 0.0) return focus ? EquilibriumKind::StableFocus : EquilibriumKind::StableNode;
  return focus ? EquilibriumKind::UnstableFocus : EquilibriumKind::UnstableNode;
}

Velocity field(const SmoothParams& p, const State& s) noexcept {
  return {s.x * per_capita_x(p, s.x, s.y), p.F() * s.y * (s.x - p.xe())};
}

Matrix2 jacobian(const SmoothParams& p, const State& s) noexcept {
  const double prod = p.x0() * p.x1();
  const double dP_dx = -(2.0 * s.x - p.x0() - p.x1()) / prod;
  return {{{per_capita_x(p, s.x, s.y) + s.x * dP_dx, -s.x}, {p.F() * s.y, p.F() * (s.x - p.xe())}}};
}

std::vector<EquilibriumReport> equilibria(const SmoothParams& p) {
  const double x0 = p.x0(), x1 = p.x1(), xe = p.xe(), F = p.F();
  std::vector<EquilibriumReport> out;
  out.reserve(4);
  out.push_back(analyse("origin", {0.0, 0.0}, jacobian(p, {0.0, 0.0})));
  out.push_back(analyse("x0", {x0, 0.0}, {{{(x1 - x0) / x1, -x0}, {0.0, F * (x0 - xe)}}}));
  out.push_back(analyse("x1", {x1, 0.0}, {{{(x0 - x1) / x0, -x1}, {0.0, F * (x1 - xe)}}}));
  const double ye = p.ye();
  // Closed-form entries at (xe, ye): P vanishes there.
  const Matrix2 Je{{{xe * (x0 + x1 - 2.0 * xe) / (x0 * x1), -xe}, {F * ye, 0.0}}};
  auto co = analyse("coexistence", {xe, ye}, Je);
  if (!p.generic_configuration()) {
    co.degenerate_configuration = true;
    out[1].degenerate_configuration = true;
    out[2].degenerate_configuration = true;
  }
  out.push_back(std::move(co));
  return out;
}

double rotation_determinant(const SmoothParams& p, const State& s) noexcept {
  return -p.F() * s.y * (s.x * per_capita_x(p, s.x, s.y));
}

bool in_rotation_region(const SmoothParams& p, const State& s) noexcept {
  return s.y > 0.0 && s.y > -(s.x - p.x0()) * (s.x - p.x1()) / (p.x0() * p.x1());
}

const char* to_string(Chart chart) noexcept {
  switch (chart) {
    case Chart::U1: return "U1";
    case Chart::U2: return "U2";
    case Chart::U3: return "U3";
  }
  return "unknown";
}

Velocity ChartField::operator()(double u, double v) const noexcept {
  const double x0 = p_.x0(), x1 = p_.x1(), xe = p_.xe(), F = p_.F();
  const double prod = x0 * x1;
  switch (chart_) {
    case Chart::U1:
      return {-u * (v * (1.0 + (F * v * xe - F - u - v) * x1) * x0 + x1 * v - 1.0) / prod,
              (1.0 + v * v * prod + (u * prod - x0 - x1) * v) * v / prod};
    case Chart::U2:
      return {-u * (v * ((1.0 + v + F * u - F * v * xe) * x1 - u) * x0 + u * (u - x1 * v)) / prod,
              -v * v * F * (u - xe * v)};
    case Chart::U3:
      return field(p_, {u, v});
  }
  return {0.0, 0.0};
}

Matrix2 ChartField::jacobian(double u, double v) const noexcept {
  const double x0 = p_.x0(), x1 = p_.x1(), xe = p_.xe(), F = p_.F();
  const double prod = x0 * x1;
  switch (chart_) {
    case Chart::U1:
      return {{{(-F * v * v * prod * xe + F * v * prod + 2.0 * u * v * prod + v * v * prod - v * x0 - v * x1 + 1.0) /
                    prod,
                u * (-2.0 * F * v * prod * xe + F * prod + u * prod + 2.0 * v * prod - x0 - x1) / prod},
               {v * v, (2.0 * u * v * prod + 3.0 * v * v * prod - 2.0 * v * x0 - 2.0 * v * x1 + 1.0) / prod}}};
    case Chart::U2:
      return {{{-(2.0 * F * u * v * prod - F * v * v * prod * xe + 3.0 * u * u - 2.0 * u * v * x0 - 2.0 * u * v * x1 +
                  v * v * prod + v * prod) /
                    prod,
                -u * (F * u * prod - 2.0 * F * v * prod * xe - u * x0 - u * x1 + 2.0 * v * prod + prod) / prod},
               {-F * v * v, -F * v * (2.0 * u - 3.0 * v * xe)}}};
    case Chart::U3:
      return facildyn::jacobian(p_, {u, v});
  }
  return {};
}

ChartField chart_field(const SmoothParams& p, Chart chart) { return ChartField(p, chart); }

Velocity u2_blowup_field(const SmoothParams& p, double w, double v) noexcept {
  const double x0 = p.x0(), x1 = p.x1();
  return {-(((v + 1.0) * x1 - v * w) * x0 + v * w * (w - x1)) / (x0 * x1) * w, -v * v * p.F() * (w - p.xe())};
}

std::vector<int> u2_sector_signs(const SmoothParams& p, double r, int samples) {
  if (!(r > 0.0) || samples < 2) throw Error(ErrorCode::InvalidArgument, "sector sampling needs r > 0, samples >= 2");
  const ChartField f(p, Chart::U2);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(samples));
  for (int k = 0; k < samples; ++k) {
    const double th = 0.5 * std::numbers::pi * k / (samples - 1);
    const double u = r * std::cos(th), v = r * std::sin(th);
    const auto d = f(u, v);
    const double radial = u * d[0] + v * d[1];
    out.push_back(radial > 0.0 ? 1 : (radial < 0.0 ? -1 : 0));
  }
  return out;
}

}  // namespace facildyn
