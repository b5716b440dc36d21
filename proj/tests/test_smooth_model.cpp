#include "doctest.h"

#include <cmath>
#include <random>

#include "facildyn/error.hpp"
#include "facildyn/smooth_model.hpp"

using namespace facildyn;

namespace {

const SmoothParams P2 = SmoothParams::make(1, 3, 2, 1);

// Independent evaluation of the polynomial field.
Velocity reference_field(double x0, double x1, double xe, double F, double x, double y) {
  return {-x * x * x / (x0 * x1) + (x0 + x1) * x * x / (x0 * x1) - x * y - x, F * (x * y - xe * y)};
}

SmoothParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 3.0), t(0.05, 0.95), f(0.05, 10.0);
  const double x0 = u(rng);
  const double x1 = x0 + u(rng);
  return SmoothParams::make(x0, x1, x0 + t(rng) * (x1 - x0), f(rng));
}

}  // namespace

TEST_CASE("field values") {
  const auto o = field(P2, {0, 0});
  CHECK(o[0] == 0.0);
  CHECK(o[1] == 0.0);

  const auto e = field(P2, {2, 1.0 / 3.0});
  CHECK(std::abs(e[0]) < 1e-15);
  CHECK(std::abs(e[1]) < 1e-15);

  const auto v = field(P2, {1, 1});
  CHECK(v[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(v[1] == doctest::Approx(-1.0).epsilon(1e-15));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> s(0, 6);
  for (int i = 0; i < 100; ++i) {
    const auto p = random_params(rng);
    const double x = s(rng), y = s(rng);
    const auto a = field(p, {x, y});
    const auto b = reference_field(p.x0(), p.x1(), p.xe(), p.F(), x, y);
    CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-12).scale(1.0));
    CHECK(a[1] == doctest::Approx(b[1]).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("axes are invariant exactly") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> s(0, 10);
  for (int i = 0; i < 500; ++i) {
    const auto p = random_params(rng);
    CHECK(field(p, {s(rng), 0.0})[1] == 0.0);
    CHECK(field(p, {0.0, s(rng)})[0] == 0.0);
  }
}

TEST_CASE("equilibria of (1, 3, 2.5, F)") {
  const auto node = equilibria(SmoothParams::make(1, 3, 2.5, 0.2));
  REQUIRE(node.size() == 4);
  CHECK(node[0].name == "origin");
  CHECK(node[0].kind == EquilibriumKind::StableNode);
  CHECK(node[1].kind == EquilibriumKind::Saddle);
  CHECK(node[2].kind == EquilibriumKind::Saddle);
  CHECK(node[3].name == "coexistence");
  CHECK(node[3].point.x == 2.5);
  CHECK(node[3].point.y == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(node[3].kind == EquilibriumKind::StableNode);
  CHECK(node[3].trace < 0.0);

  const auto focus = equilibria(SmoothParams::make(1, 3, 2.5, 1));
  CHECK(focus[3].kind == EquilibriumKind::StableFocus);
  CHECK(focus[3].rotation != 0);
  CHECK_FALSE(focus[3].eigenvectors.has_value());

  const auto hopf = equilibria(P2);
  CHECK(std::abs(hopf[3].trace) < 1e-15);
  CHECK(hopf[3].kind == EquilibriumKind::Center);
}

TEST_CASE("saddle eigenpairs") {
  const auto p = SmoothParams::make(1, 3, 2, 1.5);
  const auto eq = equilibria(p);
  const auto& s0 = eq[1];
  CHECK(s0.point.x == 1.0);
  CHECK(s0.eigenvalues[0].real() == doctest::Approx(2.0 / 3.0));
  CHECK(s0.eigenvalues[1].real() == doctest::Approx(1.5 * (1.0 - 2.0)));
  REQUIRE(s0.eigenvectors.has_value());
  CHECK(std::abs((*s0.eigenvectors)[0][1]) < 1e-15);  // unstable direction along the axis

  const auto& s1 = eq[2];
  CHECK(s1.eigenvalues[0].real() == doctest::Approx(1.5 * (3.0 - 2.0)));
  CHECK(s1.eigenvalues[1].real() == doctest::Approx((1.0 - 3.0) / 1.0));
  REQUIRE(s1.eigenvectors.has_value());
  CHECK(std::abs((*s1.eigenvectors)[1][1]) < 1e-15);  // stable direction along the axis

  // each reported eigenvector really is one
  for (const auto& e : {s0, s1}) {
    const auto J = jacobian(p, e.point);
    for (int k = 0; k < 2; ++k) {
      const auto& v = (*e.eigenvectors)[k];
      const double lam = e.eigenvalues[k].real();
      CHECK(J[0][0] * v[0] + J[0][1] * v[1] == doctest::Approx(lam * v[0]).scale(1.0));
      CHECK(J[1][0] * v[0] + J[1][1] * v[1] == doctest::Approx(lam * v[1]).scale(1.0));
    }
  }
}

TEST_CASE("equilibrium residual and classification consistency") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10000; ++i) {
    const auto p = random_params(rng);
    for (const auto& e : equilibria(p)) {
      const auto v = field(p, e.point);
      CHECK(std::hypot(v[0], v[1]) < 1e-12);
      // kind from the eigenvalues alone
      const auto l0 = e.eigenvalues[0], l1 = e.eigenvalues[1];
      EquilibriumKind k;
      if (l0.imag() != 0.0) {
        k = l0.real() < 0 ? EquilibriumKind::StableFocus
            : l0.real() > 0 ? EquilibriumKind::UnstableFocus
                            : EquilibriumKind::Center;
      } else if (l0.real() * l1.real() < 0) {
        k = EquilibriumKind::Saddle;
      } else if (l0.real() == 0.0 || l1.real() == 0.0) {
        k = EquilibriumKind::Degenerate;
      } else {
        k = l0.real() < 0 ? EquilibriumKind::StableNode : EquilibriumKind::UnstableNode;
      }
      CHECK(k == e.kind);
    }
  }
}

TEST_CASE("Jacobian") {
  const auto p = SmoothParams::make(1, 3, 2.2, 0.7);
  const auto J0 = jacobian(p, {0, 0});
  CHECK(J0[0][0] == -1.0);
  CHECK(J0[0][1] == 0.0);
  CHECK(J0[1][0] == 0.0);
  CHECK(J0[1][1] == doctest::Approx(-0.7 * 2.2));
  CHECK(jacobian(p, {1, 0})[0][0] == doctest::Approx(2.0 / 3.0));

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> s(0.1, 5);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto q = random_params(rng);
    const State st{s(rng), s(rng)};
    const auto J = jacobian(q, st);
    const double h = 1e-6;
    for (int c = 0; c < 2; ++c) {
      State a = st, b = st;
      (c == 0 ? a.x : a.y) += h;
      (c == 0 ? b.x : b.y) -= h;
      const auto fa = field(q, a), fb = field(q, b);
      for (int r = 0; r < 2; ++r) {
        const double fd = (fa[r] - fb[r]) / (2 * h);
        worst = std::max(worst, std::abs(fd - J[r][c]) / std::max(1.0, std::abs(J[r][c])));
      }
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("rotation determinant") {
  CHECK(rotation_determinant(P2, {2, 2}) == doctest::Approx(20.0 / 3.0).epsilon(1e-14));
  CHECK(rotation_determinant(P2, {1.7, 0}) == 0.0);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> s(0, 6);
  int inside = 0;
  for (int i = 0; i < 20000 && inside < 10000; ++i) {
    const auto p = random_params(rng);
    const State st{s(rng), s(rng)};
    if (!in_rotation_region(p, st)) continue;
    ++inside;
    CHECK(rotation_determinant(p, st) > 0.0);
  }
  CHECK(inside > 1000);
}

TEST_CASE("compactification charts") {
  const auto p = SmoothParams::make(1, 3, 1.7, 2);
  const ChartField u1(p, Chart::U1), u2(p, Chart::U2), u3(p, Chart::U3);

  const auto v1 = u1(0, 0);
  CHECK(v1[0] == 0.0);
  CHECK(v1[1] == 0.0);
  const auto J1 = u1.jacobian(0, 0);
  CHECK(J1[0][0] == doctest::Approx(1.0 / 3.0));
  CHECK(J1[1][1] == doctest::Approx(1.0 / 3.0));
  CHECK(J1[0][1] == 0.0);
  CHECK(J1[1][0] == 0.0);

  const auto J2 = u2.jacobian(0, 0);
  CHECK(J2[0][0] == 0.0);
  CHECK(J2[0][1] == 0.0);
  CHECK(J2[1][0] == 0.0);
  CHECK(J2[1][1] == 0.0);

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> s(0, 5);
  for (int i = 0; i < 20; ++i) {
    const double x = s(rng), y = s(rng);
    const auto a = u3(x, y), b = field(p, {x, y});
    CHECK(std::abs(a[0] - b[0]) <= 1e-14 * std::max(1.0, std::abs(b[0])));
    CHECK(std::abs(a[1] - b[1]) <= 1e-14 * std::max(1.0, std::abs(b[1])));
  }
}

TEST_CASE("U1 chart is the field seen from x = 1/v") {
  // u' and v' from the chain rule applied to the planar field, up to the factor v^2
  const auto p = SmoothParams::make(1, 3, 2.4, 0.6);
  const ChartField u1(p, Chart::U1);
  for (double u : {0.2, 0.7, 1.3}) {
    for (double v : {0.1, 0.4}) {
      const double x = 1 / v, y = u / v;
      const auto f = field(p, {x, y});
      const double du = (f[1] * x - y * f[0]) / (x * x);
      const double dv = -f[0] / (x * x);
      const auto c = u1(u, v);
      // ratio between chart field and the pushed-forward field is the same positive factor
      const double k = c[1] / dv;
      CHECK(k > 0.0);
      CHECK(c[0] == doctest::Approx(k * du).epsilon(1e-10));
    }
  }
}

TEST_CASE("U2 sector sampling sees both flow directions") {
  const auto signs = u2_sector_signs(SmoothParams::make(1, 3, 2, 1), 1e-3, 64);
  REQUIRE_FALSE(signs.empty());
  bool in = false, out = false;
  for (int s : signs) {
    in |= s < 0;
    out |= s > 0;
  }
  CHECK(in);
  CHECK(out);
}

TEST_CASE("State::make rejects bad coordinates") {
  CHECK_THROWS_AS((void)State::make(-1, 0), Error);
  CHECK_THROWS_AS((void)State::make(0, NAN), Error);
  CHECK(State::make(1, 2).y == 2.0);
}
