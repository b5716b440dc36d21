#include "facildyn/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "facildyn/error.hpp"

namespace facildyn {

namespace {

PlanarField forward_field(const SmoothParams& p) {
  return [p](const Vec2& s) {
    const auto v = field(p, {s[0], s[1]});
    return Vec2{v[0], v[1]};
  };
}

PlanarField reversed_field(const SmoothParams& p) {
  return [p](const Vec2& s) {
    const auto v = field(p, {s[0], s[1]});
    return Vec2{-v[0], -v[1]};
  };
}

Trajectory convert(const RawTrajectory& raw, bool reversed) {
  Trajectory t;
  t.times = raw.times;
  t.states.reserve(raw.states.size());
  for (const auto& s : raw.states) t.states.push_back({s[0], s[1]});
  for (const auto& e : raw.events) t.events.push_back({e.t, e.kind, {e.state[0], e.state[1]}});
  t.reversed = reversed;
  t.termination = raw.termination;
  return t;
}

// Manifold heights on the section grow roughly linearly in F.
double escape_radius(const SmoothParams& p, const ShootingConfig& cfg) {
  return cfg.escape_radius * std::max(1.0, p.F());
}

double per_capita(const SmoothParams& p, double x, double y) {
  return -(x - p.x0()) * (x - p.x1()) / (p.x0() * p.x1()) - y;
}

}  // namespace

double shooting_horizon(const SmoothParams& p, const ShootingConfig& cfg) noexcept {
  // Slowest saddle rate along the y-direction is F * min(xe - x0, x1 - xe).
  double rate = p.F();
  if (p.generic_configuration()) rate *= std::min(p.xe() - p.x0(), p.x1() - p.xe());
  return std::max(cfg.integrator.t_max, cfg.small_F_horizon / rate);
}

Trajectory integrate(const SmoothParams& p, const State& s0, const IntegratorConfig& cfg) {
  return convert(integrate_field(forward_field(p), {s0.x, s0.y}, cfg), false);
}

const char* to_string(Separatrix which) noexcept {
  switch (which) {
    case Separatrix::UnstableOfX0: return "unstable-of-x0";
    case Separatrix::StableOfX0: return "stable-of-x0";
    case Separatrix::UnstableOfX1: return "unstable-of-x1";
    case Separatrix::StableOfX1: return "stable-of-x1";
  }
  return "unknown";
}

Trajectory trace_separatrix(const SmoothParams& p, Separatrix which, double offset, const ShootingConfig& cfg) {
  if (!(offset > 0.0) || !std::isfinite(offset)) {
    throw Error(ErrorCode::InvalidArgument, "separatrix offset must be > 0");
  }
  const bool at_x0 = which == Separatrix::UnstableOfX0 || which == Separatrix::StableOfX0;
  const bool stable = which == Separatrix::StableOfX0 || which == Separatrix::StableOfX1;
  const auto eqs = equilibria(p);
  const EquilibriumReport& saddle = eqs[at_x0 ? 1 : 2];
  if (saddle.kind != EquilibriumKind::Saddle) {
    throw Error(ErrorCode::Domain, std::string("(") + (at_x0 ? "x0" : "x1") + ",0) is not a saddle for these parameters");
  }
  if (!saddle.eigenvectors) throw Error(ErrorCode::Internal, "saddle without real eigenvectors");
  // eigenvalues are sorted descending: [0] unstable, [1] stable.
  auto dir = (*saddle.eigenvectors)[stable ? 1 : 0];
  if (dir[1] == 0.0) {
    // Axis branch: take the side facing the section.
    dir[0] = p.xe() > saddle.point.x ? 1.0 : -1.0;
  }
  const Vec2 s0{saddle.point.x + offset * dir[0], saddle.point.y + offset * dir[1]};

  IntegratorConfig ic = cfg.integrator;
  ic.t_max = shooting_horizon(p, cfg);
  ic.events.push_back(EventSpec::line("section", 1.0, 0.0, p.xe(), 0, true));
  ic.events.push_back(EventSpec::norm_above("escape", escape_radius(p, cfg), true));
  // A branch absorbed by the coexistence point meets the section there in the limit.
  const double xe = p.xe(), ye = p.ye(), near = 1e-7 * (p.x1() - p.x0());
  ic.stop = [xe, ye, near](const Vec2& s) { return std::hypot(s[0] - xe, s[1] - ye) < near; };
  auto raw = integrate_field(stable ? reversed_field(p) : forward_field(p), s0, ic);
  if (raw.termination == Termination::Stop) {
    raw.events.back().kind = "equilibrium";
    raw.events.back().state = {xe, ye};
  }
  return convert(raw, stable);
}

SectionCrossing separatrix_crossing(const SmoothParams& p, Separatrix which, const ShootingConfig& cfg) {
  auto cross = [&](double offset) {
    const Trajectory t = trace_separatrix(p, which, offset, cfg);
    for (const auto& e : t.events) {
      if (e.kind == "section" || e.kind == "equilibrium") return std::pair<double, double>{e.state.y, e.t};
    }
    std::ostringstream os;
    os << to_string(which) << " did not reach x = xe (xe = " << p.xe() << ", F = " << p.F() << ")";
    throw Error(ErrorCode::NoCrossing, os.str(), std::array<double, 2>{t.back().x, t.back().y});
  };
  double offset = cfg.offset_scale * (p.x1() - p.x0());
  auto [h, tc] = cross(offset);
  if (!cfg.richardson) return {h, offset, 0.0, tc};
  for (int k = 0; k < cfg.max_refinements; ++k) {
    const auto [h2, t2] = cross(0.5 * offset);
    const double shift = std::abs(h2 - h);
    offset *= 0.5;
    if (shift < cfg.richardson_tol) return {h2, offset, shift, t2};
    h = h2;
    tc = t2;
  }
  std::ostringstream os;
  os << to_string(which) << ": crossing height did not settle under offset refinement";
  throw Error(ErrorCode::Inconclusive, os.str());
}

GapResult section_gap_detail(const SmoothParams& p, const ShootingConfig& cfg) {
  const auto L = loci(p);
  if (!(p.x0() < p.xe() && p.xe() < L.x_H)) {
    throw Error(ErrorCode::Domain, "section gap is defined for x0 < xe < (x0 + x1)/2");
  }
  GapResult r;
  r.unstable_x1 = separatrix_crossing(p, Separatrix::UnstableOfX1, cfg);
  r.stable_x0 = separatrix_crossing(p, Separatrix::StableOfX0, cfg);
  r.gap = r.unstable_x1.height - r.stable_x0.height;
  return r;
}

double section_gap(const SmoothParams& p, const ShootingConfig& cfg) { return section_gap_detail(p, cfg).gap; }

ReturnMapResult return_map(const SmoothParams& p, double y0, const ShootingConfig& cfg, bool reversed) {
  IntegratorConfig ic = cfg.integrator;
  ic.t_max = shooting_horizon(p, cfg);
  ic.record_steps = false;
  ic.events.push_back(EventSpec::line("section", 1.0, 0.0, p.xe(), reversed ? 1 : -1, true));
  ic.events.push_back(EventSpec::norm_above("escape", escape_radius(p, cfg), true));
  const double x0 = p.x0();
  const double xe = p.xe(), ye = p.ye();
  const double settle = 1e-10 * (p.x1() - p.x0());
  ic.stop = [x0, xe, ye, settle](const Vec2& s) {
    return (s[0] < 0.5 * x0 && s[1] < 1e-6) || std::hypot(s[0] - xe, s[1] - ye) < settle;
  };
  const auto raw = integrate_field(reversed ? reversed_field(p) : forward_field(p), {xe, y0}, ic);

  ReturnMapResult r;
  r.period = raw.times.back();
  const Vec2& last = raw.states.back();
  switch (raw.termination) {
    case Termination::Event:
      if (raw.events.back().kind == "section") {
        r.outcome = ReturnOutcome::Returned;
        r.y = raw.events.back().state[1];
      } else {
        r.outcome = ReturnOutcome::Escape;
      }
      break;
    case Termination::Stop:
      r.outcome = last[0] < 0.5 * x0 ? ReturnOutcome::Collapse : ReturnOutcome::Settled;
      break;
    case Termination::TimeLimit: {
      const double d0 = std::abs(y0 - ye);
      const double d1 = std::hypot(last[0] - xe, last[1] - ye);
      r.outcome = d1 < 1e-3 * d0 ? ReturnOutcome::Settled : ReturnOutcome::TimeLimit;
      break;
    }
  }
  return r;
}

std::optional<LimitCycle> find_limit_cycle(const SmoothParams& p, const ShootingConfig& cfg) {
  if (!p.generic_configuration()) throw Error(ErrorCode::Domain, "cycle search needs x0 < xe < x1");
  const double ye = p.ye();
  const double scale = p.x1() - p.x0();

  // Basin top: crossing of W^s(x0,0); fall back to a fixed height.
  double top = ye + scale;
  try {
    const double hs = separatrix_crossing(p, Separatrix::StableOfX0, cfg).height;
    if (hs > ye) top = hs;
  } catch (const Error&) {
  }

  // Displacement d(y) = P(y) - y; +inf for orbits that leave outward.
  auto displacement = [&](double y) {
    const auto r = return_map(p, y, cfg);
    switch (r.outcome) {
      case ReturnOutcome::Returned: return r.y - y;
      case ReturnOutcome::Collapse:
      case ReturnOutcome::Escape: return std::numeric_limits<double>::infinity();
      case ReturnOutcome::Settled: return -(y - ye);
      case ReturnOutcome::TimeLimit: break;
    }
    return std::numeric_limits<double>::quiet_NaN();
  };

  // Log-spaced towards both ends: small cycles hug ye, cycles near the
  // polycycle hug the basin top.
  const int half = std::max(2, cfg.scan_points / 2);
  const int m = 2 * half;
  std::vector<double> ys(m), ds(m);
  for (int k = 0; k < half; ++k) {
    const double frac = static_cast<double>(k) / (half - 1);
    ys[k] = ye + 2e-3 * std::pow(0.5 / 2e-3, frac) * (top - ye);
    ys[m - 1 - k] = top - 1e-7 * std::pow(0.45 / 1e-7, frac) * (top - ye);
  }
  for (int k = 0; k < m; ++k) ds[k] = displacement(ys[k]);
  bool sign_change = false;
  int known = 0;
  for (int k = 0; k < m; ++k) {
    if (!std::isnan(ds[k])) ++known;
    if (k + 1 < m && ds[k] > 0.0 && ds[k + 1] < 0.0) sign_change = true;
  }
  if (known == 0) throw Error(ErrorCode::Inconclusive, "return map undetermined at every scan height");
  if (!sign_change) return std::nullopt;

  // Steffensen-accelerated iteration of the return map from three seeds.
  auto P = [&](double y) {
    const auto r = return_map(p, y, cfg);
    if (r.outcome != ReturnOutcome::Returned) {
      throw Error(ErrorCode::Inconclusive, "return map left the section during cycle refinement");
    }
    return r.y;
  };
  auto iterate = [&](double y) {
    for (int it = 0; it < cfg.max_map_iterations; ++it) {
      const double r1 = P(y);
      if (std::abs(r1 - y) < cfg.cycle_tol) return r1;
      const double r2 = P(r1);
      if (std::abs(r2 - r1) < cfg.cycle_tol) return r2;
      const double den = r2 - 2.0 * r1 + y;
      double next = r2;
      if (den != 0.0) {
        const double acc = y - (r1 - y) * (r1 - y) / den;
        if (acc > ye && acc < top) next = acc;
      }
      if (std::abs(next - y) < 1e-13 * scale) return next;
      y = next;
    }
    throw Error(ErrorCode::Inconclusive, "return-map iteration did not converge");
  };

  std::vector<double> fixed;
  for (double f : {0.15, 0.5, 0.85}) fixed.push_back(iterate(ye + f * (top - ye)));
  const auto [mn, mx] = std::minmax_element(fixed.begin(), fixed.end());
  if (*mx - *mn > cfg.cycle_agreement) {
    std::ostringstream os;
    os.precision(12);
    os << "seeds converged to different section points: " << *mn << " vs " << *mx;
    throw Error(ErrorCode::Inconclusive, os.str());
  }
  const double ystar = fixed.front();
  if (ystar - ye < cfg.equilibrium_floor * scale) return std::nullopt;

  LimitCycle c;
  c.section_point = {p.xe(), ystar};
  c.seed_fixed_points = fixed;
  c.residual = std::abs(P(ystar) - ystar);
  const double hstep = 1e-5 * scale;
  c.multiplier = (P(ystar + hstep) - P(ystar - hstep)) / (2.0 * hstep);

  IntegratorConfig ic = cfg.integrator;
  ic.t_max = shooting_horizon(p, cfg);
  ic.max_step = std::min(ic.max_step, 0.05);
  ic.events.push_back(EventSpec::line("section", 1.0, 0.0, p.xe(), -1, true));
  ic.events.push_back(EventSpec::line("section-up", 1.0, 0.0, p.xe(), 1, false));
  EventSpec ext;
  ext.kind = "x-extremum";
  ext.g = [p](const Vec2& s) { return per_capita(p, s[0], s[1]); };
  ic.events.push_back(ext);
  const auto loop = convert(integrate_field(forward_field(p), {p.xe(), ystar}, ic), false);
  if (loop.termination != Termination::Event) throw Error(ErrorCode::Inconclusive, "cycle loop did not close");
  c.times = loop.times;
  c.samples = loop.states;
  c.period = loop.times.back();
  Amplitude a{p.xe(), p.xe(), ystar, ystar};
  auto absorb = [&a](const State& s) {
    a.x_min = std::min(a.x_min, s.x);
    a.x_max = std::max(a.x_max, s.x);
    a.y_min = std::min(a.y_min, s.y);
    a.y_max = std::max(a.y_max, s.y);
  };
  for (const auto& s : loop.states) absorb(s);
  for (const auto& e : loop.events) absorb(e.state);
  c.amplitude = a;
  return c;
}

}  // namespace facildyn
