#include "facildyn/pwl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "facildyn/error.hpp"

namespace facildyn {

namespace {

// Inside a region, with X = x - xs:  X' = a X - k Y,  Y' = d Y.
struct Linear {
  double xs, a, d, k, c;
};

Linear region_linear(const PwlParams& p, PwlMode m) {
  Linear L{};
  if (m == PwlMode::Region1) {
    L = {p.x0, (p.x1 - p.x0) / p.x1, p.F * (p.x0 - p.xe), p.x0, 0.0};
  } else {
    L = {p.x1, (p.x0 - p.x1) / p.x0, p.F * (p.x1 - p.xe), p.x1, 0.0};
  }
  L.c = L.k / (L.a - L.d);
  return L;
}

inline double term(double coef, double rate, double t) { return coef == 0.0 ? 0.0 : coef * std::exp(rate * t); }

// X(t) = P e^{a t} + Q e^{d t}; has at most one critical point.
struct ExpSum {
  double P, a, Q, d;

  double operator()(double t) const { return term(P, a, t) + term(Q, d, t); }

  std::optional<double> critical() const {
    if (P == 0.0 || Q == 0.0) return std::nullopt;
    const double r = -(d * Q) / (a * P);
    if (!(r > 0.0)) return std::nullopt;
    const double t = std::log(r) / (a - d);
    if (!(t > 0.0) || !std::isfinite(t)) return std::nullopt;
    return t;
  }
};

// First t in (0, t_end] with X(t) = K. starts_on: X(0) = K analytically, so the
// only other root lies past the critical point.
std::optional<double> first_root(const ExpSum& X, double K, double t_end, bool starts_on) {
  auto g = [&](double t) { return X(t) - K; };
  std::vector<double> cuts{0.0};
  if (const auto tc = X.critical(); tc && *tc < t_end) cuts.push_back(*tc);
  cuts.push_back(t_end);
  std::size_t first = 0;
  if (starts_on) {
    if (cuts.size() < 3) return std::nullopt;
    first = 1;
  }
  for (std::size_t i = first; i + 1 < cuts.size(); ++i) {
    double lo = cuts[i], hi = cuts[i + 1];
    const double gl = g(lo);
    const double gr = g(hi);
    if (gl == 0.0) return lo;
    if (gr == 0.0) return hi;
    if ((gl < 0.0) == (gr < 0.0)) continue;
    const bool neg = gl < 0.0;
    for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      const double gm = g(mid);
      if (gm == 0.0) return mid;
      if ((gm < 0.0) == neg) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return hi;
  }
  return std::nullopt;
}

struct Segment {
  Linear L;
  ExpSum X;
  double Y0;

  State at(double t) const { return {L.xs + X(t), Y0 == 0.0 ? 0.0 : Y0 * std::exp(L.d * t)}; }
};

Segment make_segment(const PwlParams& p, PwlMode m, double x, double y) {
  const Linear L = region_linear(p, m);
  const double X0 = x - L.xs;
  return {L, {X0 - L.c * y, L.a, L.c * y, L.d}, y};
}

enum class HalfEnd { Sigma, ExitLeft, None };

struct HalfResult {
  HalfEnd end = HalfEnd::None;
  double t = 0.0;
};

// Next boundary event of a region segment within t_end.
HalfResult next_boundary(const PwlParams& p, PwlMode m, const Segment& s, double t_end, bool on_sigma, bool on_x0) {
  HalfResult r;
  r.t = t_end;
  if (const auto ts = first_root(s.X, p.xe - s.L.xs, t_end, on_sigma)) {
    r.end = HalfEnd::Sigma;
    r.t = *ts;
  }
  if (m == PwlMode::Region1) {
    if (const auto tx = first_root(s.X, 0.0, r.t, on_x0); tx && (r.end == HalfEnd::None || *tx < r.t)) {
      r.end = HalfEnd::ExitLeft;
      r.t = *tx;
    }
  }
  return r;
}

struct Recorder {
  Trajectory& out;

  void push(double t, const State& s, PwlMode m) {
    if (!out.times.empty() && !(t > out.times.back())) {
      out.states.back() = s;
      out.modes.back() = static_cast<int>(m);
      return;
    }
    out.times.push_back(t);
    out.states.push_back(s);
    out.modes.push_back(static_cast<int>(m));
  }
  void event(double t, const std::string& kind, const State& s) { out.events.push_back({t, kind, s}); }
};

bool on_sigma(const PwlParams& p, double x) { return std::abs(x - p.xe) <= 1e-12 * std::max(1.0, p.xe); }

// Filippov decision on Sigma for a state at rest there (no arrival side).
PwlMode sigma_mode(const SigmaNormals& n) {
  if (n.z1 < 0.0 && n.z2 <= 0.0) return PwlMode::Region1;
  if (n.z2 > 0.0 && n.z1 >= 0.0) return PwlMode::Region2;
  if (n.z1 == 0.0 && n.z2 < 0.0) return PwlMode::Region1;
  if (n.z1 > 0.0 && n.z2 == 0.0) return PwlMode::Region2;
  if (n.z1 == 0.0 && n.z2 == 0.0) return PwlMode::Region2;
  return PwlMode::Sliding;
}

}  // namespace

PwlParams PwlParams::make(double x0, double x1, double xe, double F) {
  PwlParams p{x0, x1, xe, F};
  p.validate();
  return p;
}

PwlParams PwlParams::from(const SmoothParams& s) { return make(s.x0(), s.x1(), s.xe(), s.F()); }

void PwlParams::validate() const {
  for (double v : {x0, x1, xe, F}) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "PWL parameters must be finite");
  }
  if (!(x0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "x0 must be > 0");
  if (!(x1 > x0)) throw Error(ErrorCode::NonGeneric, "need x0 < x1");
  if (F == 0.0) throw Error(ErrorCode::ConsumerDecoupled, "F = 0 decouples the consumer");
  if (!(F > 0.0)) throw Error(ErrorCode::InvalidArgument, "F must be > 0");
  if (xe == x0 || xe == x1) throw Error(ErrorCode::Transcritical, "xe coincides with a saddle");
  if (!(x0 < xe && xe < x1)) throw Error(ErrorCode::Domain, "the PWL model needs x0 < xe < x1");
}

const char* to_string(PwlMode m) noexcept {
  switch (m) {
    case PwlMode::Region1: return "region1";
    case PwlMode::Region2: return "region2";
    case PwlMode::Sliding: return "sliding";
  }
  return "unknown";
}

Velocity pwl_field(const PwlParams& p, const PwlState& s) {
  switch (s.mode) {
    case PwlMode::Region1:
      return {(p.x1 - p.x0) * (s.x - p.x0) / p.x1 - p.x0 * s.y, p.F * (p.x0 - p.xe) * s.y};
    case PwlMode::Region2:
      return {(p.x0 - p.x1) * (s.x - p.x1) / p.x0 - p.x1 * s.y, p.F * (p.x1 - p.xe) * s.y};
    case PwlMode::Sliding: break;
  }
  throw Error(ErrorCode::InvalidArgument, "pwl_field is undefined in sliding mode; use sliding_field");
}

SigmaNormals sigma_normals(const PwlParams& p, double y) noexcept {
  return {(p.x1 - p.x0) * (p.xe - p.x0) / p.x1 - p.x0 * y, (p.x0 - p.x1) * (p.xe - p.x1) / p.x0 - p.x1 * y};
}

Velocity sliding_field(const PwlParams& p, double y) {
  const auto n = sigma_normals(p, y);
  const double den = n.z2 - n.z1;
  if (den == 0.0) throw Error(ErrorCode::Degenerate, "sliding field undefined where both normals agree");
  return {0.0, p.F * y * (n.z2 * (p.x0 - p.xe) - n.z1 * (p.x1 - p.xe)) / den};
}

SaddleMatch saddle_eigenstructure_match(const PwlParams& p) {
  SaddleMatch m;
  const Linear r1 = region_linear(p, PwlMode::Region1);
  const Linear r2 = region_linear(p, PwlMode::Region2);
  m.pwl_x0 = {r1.a, r1.d};
  m.pwl_x1 = {r2.d, r2.a};
  const auto eq = equilibria(SmoothParams::make(p.x0, p.x1, p.xe, p.F));
  m.smooth_x0 = {eq[1].eigenvalues[0].real(), eq[1].eigenvalues[1].real()};
  m.smooth_x1 = {eq[2].eigenvalues[0].real(), eq[2].eigenvalues[1].real()};
  m.pwl_ratio = (-r1.d / r1.a) * (-r2.a / r2.d);
  m.smooth_ratio = hyperbolicity_ratio(p.x0, p.x1, p.xe);
  m.match = m.pwl_x0 == m.smooth_x0 && m.pwl_x1 == m.smooth_x1 && eq[1].eigenvalues[0].imag() == 0.0 &&
            eq[2].eigenvalues[0].imag() == 0.0;
  return m;
}

double first_integral(const PwlParams& p, int side, const State& s) {
  if (side != 1 && side != 2) throw Error(ErrorCode::InvalidArgument, "side must be 1 or 2");
  const double x0 = p.x0, x1 = p.x1, F = p.F, lam = p.lambda();
  const double x = s.x - p.xe;
  const double y = s.y - p.fold_height();
  const double base = x0 * x0 + 2.0 * x1 * (y - 1.0) * x0 + x1 * x1;
  if (!(base > 0.0)) throw Error(ErrorCode::Domain, "first integral needs y > 0 (nonpositive power base)");
  if (side == 1) {
    const double e = 2.0 * (x0 - x1) / ((x0 - 2.0 * lam - x1) * F * x1);
    const double num = -F * x1 * x1 * x1 / 2.0 - F * (x - x0 + 2.0 * lam) * x1 * x1 +
                       ((-x0 / 2.0 + x + lam) * (x0 - 2.0 * lam) * F + 2.0 * x0 * y - 2.0 * x - 2.0 * lam) * x1 +
                       2.0 * x0 * (x + lam);
    const double den = -x1 * x1 * F + (-2.0 + (x0 - 2.0 * lam) * F) * x1 + 2.0 * x0;
    if (den == 0.0) throw Error(ErrorCode::Domain, "H1 denominator vanishes");
    return num * std::pow(base, e) / den;
  }
  const double e = 2.0 * (x0 - x1) / ((-x1 + 2.0 * lam + x0) * F * x0);
  const double num = x0 * x0 * x0 * F / 2.0 + F * (x - x1 + 2.0 * lam) * x0 * x0 +
                     (-(-x1 / 2.0 + x + lam) * (x1 - 2.0 * lam) * F - 2.0 * x1 * y + 2.0 * x + 2.0 * lam) * x0 -
                     2.0 * x1 * (x + lam);
  const double den = x0 * x0 * F + (2.0 + (2.0 * lam - x1) * F) * x0 - 2.0 * x1;
  if (den == 0.0) throw Error(ErrorCode::Domain, "H2 denominator vanishes");
  return num * std::pow(base, e) / den;
}

SlidingData sliding_data(const PwlParams& p) {
  const double lam = p.lambda();
  if (lam == 0.0) throw Error(ErrorCode::Degenerate, "lambda = 0: tangencies coincide, no sliding segment");
  const auto L = pwl_loci(p);
  SlidingData d;
  d.lambda = lam;
  d.T1 = L.T1(lam);
  d.T2 = L.T2(lam);
  d.P_lambda = L.P_lambda(lam);
  const double fold = p.fold_height();
  d.T1_abs = fold + d.T1;
  d.T2_abs = fold + d.T2;
  d.P_abs = fold + d.P_lambda;
  d.attracting = lam > 0.0;
  d.stable = lam > 0.0;
  return d;
}

double PwlLoci::F_het(double xe) const {
  if (!(xe > x_geo && xe <= x_H)) {
    throw Error(ErrorCode::Domain, "F_het is defined for sqrt(x0 x1) < xe <= (x0 + x1)/2");
  }
  return 2.0 * (xe - x_H) / (x0 * x1 - xe * xe);
}

double pwl_xe_het(double F, double x_H, double x0x1) {
  if (!(F > 0.0) || !std::isfinite(F)) throw Error(ErrorCode::InvalidArgument, "F must be finite and > 0");
  // (-1 + sqrt(S))/F without cancellation at small F.
  const double S = 1.0 + F * F * x0x1 + 2.0 * F * x_H;
  return (F * x0x1 + 2.0 * x_H) / (1.0 + std::sqrt(S));
}

double PwlLoci::xe_het(double F) const { return pwl_xe_het(F, x_H, x0 * x1); }

double PwlLoci::F_B1(double xe) const {
  if (!(xe > x0 && xe < x1)) throw Error(ErrorCode::Domain, "F_B1 needs x0 < xe < x1");
  return 2.0 * (x1 - x0) * (x_H - xe) / (x1 * (xe - x0) * (xe - x0));
}

double PwlLoci::F_B2(double xe) const {
  if (!(xe > x0 && xe < x1)) throw Error(ErrorCode::Domain, "F_B2 needs x0 < xe < x1");
  return 2.0 * (x1 - x0) * (xe - x_H) / (x0 * (xe - x1) * (xe - x1));
}

double PwlLoci::T1(double lambda) const noexcept { return (x1 - x0) * lambda / (x1 * x0); }
double PwlLoci::T2(double lambda) const noexcept { return -(x1 - x0) * lambda / (x1 * x0); }

double PwlLoci::P_lambda(double lambda) const noexcept {
  return -lambda * (2.0 * lambda * (x0 + x1) + (x1 - x0) * (x1 - x0)) / (x0 * x1 * (2.0 * lambda + x0 + x1));
}

double PwlLoci::V1(double F) const {
  if (!(F > 0.0)) throw Error(ErrorCode::InvalidArgument, "F must be > 0");
  return -8.0 / (3.0 * F * (x1 - x0));
}

double PwlLoci::F_het_slope_at_hopf() const noexcept { return -8.0 / ((x1 - x0) * (x1 - x0)); }

double PwlLoci::h_s(double xe, double F) const noexcept {
  return (xe - x0) * (F * x1 * (xe - x0) + x1 - x0) / (x0 * x1);
}

double PwlLoci::h_u(double xe, double F) const noexcept {
  return (x1 - xe) * (F * x0 * (x1 - xe) + x1 - x0) / (x0 * x1);
}

PwlLoci pwl_loci(double x0, double x1) {
  if (!(x0 > 0.0) || !std::isfinite(x1)) throw Error(ErrorCode::InvalidArgument, "x0 must be > 0");
  if (!(x1 > x0)) throw Error(ErrorCode::NonGeneric, "need x0 < x1");
  return {x0, x1, 0.5 * (x0 + x1), std::sqrt(x0 * x1)};
}

PwlLoci pwl_loci(const PwlParams& p) { return pwl_loci(p.x0, p.x1); }

Trajectory pwl_integrate(const PwlParams& p, const PwlState& s0, const PwlConfig& cfg) {
  p.validate();
  if (!(cfg.t_max > 0.0) || !std::isfinite(cfg.t_max)) throw Error(ErrorCode::InvalidArgument, "t_max must be > 0");
  if (!(cfg.sample_dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "sample_dt must be > 0");
  if (!std::isfinite(s0.x) || !std::isfinite(s0.y) || s0.y < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "PWL state needs finite x and y >= 0");
  }
  if (s0.x < p.x0 || s0.x > p.x1) throw Error(ErrorCode::Domain, "PWL state must satisfy x0 <= x <= x1");
  const bool start_on_sigma = on_sigma(p, s0.x);
  if (s0.mode == PwlMode::Sliding && !start_on_sigma) {
    throw Error(ErrorCode::InvalidArgument, "sliding mode requires x = xe");
  }
  if (!start_on_sigma && ((s0.mode == PwlMode::Region1) != (s0.x < p.xe))) {
    throw Error(ErrorCode::InvalidArgument, "mode does not match the side of x = xe");
  }

  Trajectory out;
  Recorder rec{out};
  const double scale = p.x1 - p.x0;
  const SlidingData sd = p.lambda() == 0.0 ? SlidingData{} : sliding_data(p);
  std::size_t sigma_events = 0;
  auto count_sigma = [&] {
    if (++sigma_events >= cfg.max_sigma_events) {
      throw Error(ErrorCode::Chattering, "too many switching events on x = xe (chattering)",
                  std::array<double, 2>{out.states.back().x, out.states.back().y});
    }
  };

  double t = 0.0;
  State s{start_on_sigma ? p.xe : s0.x, s0.y};
  PwlMode mode = start_on_sigma ? sigma_mode(sigma_normals(p, s.y)) : s0.mode;
  bool at_sigma = start_on_sigma;
  rec.push(0.0, s, mode);

  auto hold = [&](const State& fixed) {
    rec.push(cfg.t_max, fixed, mode);
    out.termination = Termination::Event;
  };

  while (t < cfg.t_max) {
    if (mode != PwlMode::Sliding) {
      const Segment seg = make_segment(p, mode, s.x, s.y);
      if (seg.X.P == 0.0 && seg.X.Q == 0.0 && s.y == 0.0) {  // saddle
        hold(s);
        return out;
      }
      const bool on_x0 = mode == PwlMode::Region1 && s.x == p.x0;
      const HalfResult hr = next_boundary(p, mode, seg, cfg.t_max - t, at_sigma, on_x0);
      // Samples on a global grid, plus the x-extremum of the segment.
      std::vector<double> ts;
      for (double k = std::floor(t / cfg.sample_dt) + 1.0;; k += 1.0) {
        const double tk = k * cfg.sample_dt - t;
        if (!(tk < hr.t)) break;
        ts.push_back(tk);
      }
      if (const auto tc = seg.X.critical(); tc && *tc < hr.t) ts.push_back(*tc);
      std::sort(ts.begin(), ts.end());
      for (double tk : ts) rec.push(t + tk, seg.at(tk), mode);
      State end = seg.at(hr.t);
      t += hr.t;
      switch (hr.end) {
        case HalfEnd::None:
          rec.push(t, end, mode);
          out.termination = Termination::TimeLimit;
          return out;
        case HalfEnd::ExitLeft:
          end.x = p.x0;
          rec.push(t, end, mode);
          rec.event(t, "exit-left", end);
          out.termination = Termination::Event;
          return out;
        case HalfEnd::Sigma: {
          end.x = p.xe;
          rec.push(t, end, mode);
          count_sigma();
          const auto n = sigma_normals(p, end.y);
          if (mode == PwlMode::Region1 && n.z2 > 0.0) {
            mode = PwlMode::Region2;
            rec.event(t, "cross-1-2", end);
          } else if (mode == PwlMode::Region2 && n.z1 < 0.0) {
            mode = PwlMode::Region1;
            rec.event(t, "cross-2-1", end);
          } else {
            mode = PwlMode::Sliding;
            rec.event(t, "slide-enter", end);
          }
          s = end;
          at_sigma = true;
          break;
        }
      }
      continue;
    }

    // Sliding along x = xe.
    const double settle = cfg.settle_tol * scale;
    if (p.lambda() == 0.0) throw Error(ErrorCode::Degenerate, "no sliding segment at lambda = 0");
    if (std::abs(s.y - sd.P_abs) <= settle) {
      rec.event(t, "pseudo-equilibrium", s);
      hold({p.xe, sd.P_abs});
      return out;
    }
    IntegratorConfig ic = cfg.sliding;
    ic.t_max = cfg.t_max - t;
    ic.events.clear();
    ic.events.push_back(EventSpec::line("tangency-1", 0.0, 1.0, sd.T1_abs, 0, true));
    ic.events.push_back(EventSpec::line("tangency-2", 0.0, 1.0, sd.T2_abs, 0, true));
    const double P_abs = sd.P_abs;
    ic.stop = [P_abs, settle](const Vec2& v) { return std::abs(v[1] - P_abs) <= settle; };
    const PlanarField fs = [&p](const Vec2& v) { return Vec2{0.0, sliding_field(p, v[1])[1]}; };
    const RawTrajectory raw = integrate_field(fs, {p.xe, s.y}, ic);
    for (std::size_t i = 1; i < raw.times.size(); ++i) rec.push(t + raw.times[i], {p.xe, raw.states[i][1]}, mode);
    t += raw.times.back();
    s = {p.xe, raw.states.back()[1]};
    if (raw.termination == Termination::TimeLimit) {
      out.termination = Termination::TimeLimit;
      return out;
    }
    if (raw.termination == Termination::Stop) {
      rec.event(t, "pseudo-equilibrium", s);
      if (t < cfg.t_max) hold({p.xe, P_abs});
      out.termination = Termination::Event;
      return out;
    }
    count_sigma();
    const auto n = sigma_normals(p, s.y);
    const bool at_T1 = raw.events.back().kind == "tangency-1";
    s.y = at_T1 ? sd.T1_abs : sd.T2_abs;
    // Leave into the region whose field points away from Sigma.
    mode = at_T1 ? (n.z2 > 0.0 ? PwlMode::Region2 : PwlMode::Region1)
                 : (n.z1 < 0.0 ? PwlMode::Region1 : PwlMode::Region2);
    rec.event(t, "slide-exit", s);
    at_sigma = true;
  }
  out.termination = Termination::TimeLimit;
  return out;
}

PwlReturnResult pwl_return_map(const PwlParams& p, double y0, const PwlConfig& cfg) {
  const auto n0 = sigma_normals(p, y0);
  if (!(n0.z1 < 0.0 && n0.z2 < 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "return map starts above both tangencies (crossing into side 1)");
  }
  PwlReturnResult r;
  const Segment s1 = make_segment(p, PwlMode::Region1, p.xe, y0);
  const HalfResult h1 = next_boundary(p, PwlMode::Region1, s1, cfg.return_horizon, true, false);
  r.period = h1.t;
  if (h1.end == HalfEnd::ExitLeft) {
    r.outcome = PwlReturn::Collapse;
    return r;
  }
  if (h1.end == HalfEnd::None) return r;
  const double y1 = s1.at(h1.t).y;
  if (!(sigma_normals(p, y1).z2 > 0.0)) {
    r.outcome = PwlReturn::Sliding;
    r.y = y1;
    return r;
  }
  const Segment s2 = make_segment(p, PwlMode::Region2, p.xe, y1);
  const HalfResult h2 = next_boundary(p, PwlMode::Region2, s2, cfg.return_horizon, true, false);
  r.period += h2.t;
  if (h2.end != HalfEnd::Sigma) return r;
  r.y = s2.at(h2.t).y;
  r.outcome = sigma_normals(p, r.y).z1 < 0.0 ? PwlReturn::Returned : PwlReturn::Sliding;
  return r;
}

std::optional<LimitCycle> pwl_find_limit_cycle(const PwlParams& p, const PwlConfig& cfg) {
  p.validate();
  if (!(p.lambda() < 0.0)) return std::nullopt;
  const auto L = pwl_loci(p);
  const SlidingData sd = sliding_data(p);
  const double scale = p.x1 - p.x0;
  const double ylo = std::max(sd.T1_abs, sd.T2_abs);
  const double top = L.h_s(p.xe, p.F);
  if (!(top > ylo)) return std::nullopt;

  auto displacement = [&](double y) {
    const auto r = pwl_return_map(p, y, cfg);
    switch (r.outcome) {
      case PwlReturn::Returned: return r.y - y;
      case PwlReturn::Collapse: return std::numeric_limits<double>::infinity();
      case PwlReturn::Sliding: return -(y - ylo);
      case PwlReturn::TimeLimit: break;
    }
    return std::numeric_limits<double>::quiet_NaN();
  };

  const int m = std::max(4, cfg.scan_points);
  const double s_lo = 1e-6, s_hi = 0.999;
  std::vector<double> ys(m), ds(m);
  for (int k = 0; k < m; ++k) {
    ys[k] = ylo + s_lo * std::pow(s_hi / s_lo, static_cast<double>(k) / (m - 1)) * (top - ylo);
    ds[k] = displacement(ys[k]);
  }
  int bracket = -1;
  for (int k = 0; k + 1 < m; ++k) {
    if (ds[k] > 0.0 && ds[k + 1] < 0.0) {
      bracket = k;
      break;
    }
  }
  if (bracket < 0) return std::nullopt;

  auto P = [&](double y) {
    const auto r = pwl_return_map(p, y, cfg);
    if (r.outcome != PwlReturn::Returned) {
      throw Error(ErrorCode::Inconclusive, "PWL return map left the crossing branch during refinement");
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
        if (acc > ylo && acc < top) next = acc;
      }
      if (std::abs(next - y) < 1e-14 * scale) return next;
      y = next;
    }
    throw Error(ErrorCode::Inconclusive, "PWL return-map iteration did not converge");
  };

  std::vector<double> fixed;
  for (double f : {0.15, 0.5, 0.85}) fixed.push_back(iterate(ylo + f * (top - ylo)));
  const auto [mn, mx] = std::minmax_element(fixed.begin(), fixed.end());
  if (*mx - *mn > cfg.cycle_agreement) {
    std::ostringstream os;
    os.precision(12);
    os << "seeds converged to different crossing heights: " << *mn << " vs " << *mx;
    throw Error(ErrorCode::Inconclusive, os.str());
  }
  const double ystar = fixed.front();
  if (ystar - ylo < cfg.equilibrium_floor * scale) return std::nullopt;

  LimitCycle c;
  c.section_point = {p.xe, ystar};
  c.seed_fixed_points = fixed;
  const auto r = pwl_return_map(p, ystar, cfg);
  c.residual = std::abs(r.y - ystar);
  c.period = r.period;
  const double h = std::min(1e-7 * scale, 0.25 * (ystar - ylo));
  c.multiplier = (P(ystar + h) - P(ystar - h)) / (2.0 * h);

  PwlConfig lc = cfg;
  lc.t_max = c.period;
  lc.sample_dt = std::min(cfg.sample_dt, c.period / 200.0);
  const auto loop = pwl_integrate(p, {p.xe, ystar, PwlMode::Region1}, lc);
  c.times = loop.times;
  c.samples = loop.states;
  Amplitude a{p.xe, p.xe, ystar, ystar};
  for (const auto& s : loop.states) {
    a.x_min = std::min(a.x_min, s.x);
    a.x_max = std::max(a.x_max, s.x);
    a.y_min = std::min(a.y_min, s.y);
    a.y_max = std::max(a.y_max, s.y);
  }
  c.amplitude = a;
  return c;
}

const char* to_string(PwlRegion r) noexcept {
  switch (r) {
    case PwlRegion::Omega1: return "Omega1";
    case PwlRegion::Omega2: return "Omega2";
    case PwlRegion::Omega3: return "Omega3";
    case PwlRegion::Omega4: return "Omega4";
    case PwlRegion::Omega5: return "Omega5";
    case PwlRegion::Omega6: return "Omega6";
    case PwlRegion::Omega7: return "Omega7";
  }
  return "unknown";
}

PwlRegionLabel pwl_classify_region(const PwlParams& p, double tol) {
  p.validate();
  const auto L = pwl_loci(p);
  const double lam = p.lambda();
  if (std::abs(lam) < tol) return {PwlRegion::Omega3, std::abs(lam)};
  if (lam > 0.0) {
    const double fb2 = L.F_B2(p.xe);
    return {p.F <= fb2 ? PwlRegion::Omega1 : PwlRegion::Omega2, std::abs(p.F - fb2)};
  }
  const double fb1 = L.F_B1(p.xe);
  if (p.F <= fb1) return {PwlRegion::Omega7, std::abs(p.F - fb1)};
  const double d = p.xe - L.xe_het(p.F);
  if (std::abs(d) < tol) return {PwlRegion::Omega5, std::abs(d)};
  return {d > 0.0 ? PwlRegion::Omega4 : PwlRegion::Omega6, std::abs(d)};
}

Resilience resilience_distance(const PwlParams& p) {
  const auto label = pwl_classify_region(p);
  if (label.region != PwlRegion::Omega4 && label.region != PwlRegion::Omega5) {
    throw Error(ErrorCode::Domain, std::string("resilience needs the cycle region; parameters lie in ") +
                                       to_string(label.region));
  }
  const auto L = pwl_loci(p);
  auto dist = [&](double u) {
    const double xs = L.x_geo + u * (L.x_H - L.x_geo);
    return std::hypot(p.xe - xs, p.F - L.F_het(xs));
  };
  const int n = 4000;
  int best = n;
  double best_d = dist(1.0);
  for (int i = 1; i < n; ++i) {
    const double d = dist(static_cast<double>(i) / n);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  double a = static_cast<double>(std::max(best - 1, 0)) / n + 1e-15;
  double b = static_cast<double>(std::min(best + 1, n)) / n;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = dist(c), fd = dist(d);
  for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = dist(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = dist(d);
    }
  }
  double u = 0.5 * (a + b);
  double du = dist(u);
  if (best_d < du) {
    u = static_cast<double>(best) / n;
    du = best_d;
  }
  const double xs = L.x_geo + u * (L.x_H - L.x_geo);
  return {du, xs, L.F_het(xs)};
}

HabitatEffect habitat_effect(const OriginalParams& p, double F) {
  p.validate();
  if (!(F > 0.0) || !std::isfinite(F)) throw Error(ErrorCode::InvalidArgument, "F must be finite and > 0");
  const double disc = (1.0 - p.D) * (1.0 - p.D) - 4.0 * p.eps / p.alpha;
  if (!(p.alpha > 0.0) || !(disc > 0.0)) throw Error(ErrorCode::NonGeneric, "habitat effect needs (1 - D)^2 > 4 eps/alpha");
  const double prod = p.eps / p.alpha;
  auto xe_het_at = [&](double D) { return pwl_xe_het(F, 0.5 * (1.0 - D), prod); };
  HabitatEffect h;
  h.x_H = 0.5 * (1.0 - p.D);
  h.xe_het = xe_het_at(p.D);
  h.d_o = h.x_H - h.xe_het;
  const double S = 1.0 + F * F * prod + 2.0 * F * h.x_H;
  h.dxe_het_dD = -1.0 / (2.0 * std::sqrt(S));
  const double step = 1e-5;
  h.dxe_het_dD_numeric = (xe_het_at(p.D + step) - xe_het_at(p.D - step)) / (2.0 * step);
  h.d_o_prime = -0.5 - h.dxe_het_dD;
  h.d_o_prime_sign = (h.d_o_prime > 0.0) - (h.d_o_prime < 0.0);
  return h;
}

}  // namespace facildyn
