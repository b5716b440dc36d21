#include "facildyn/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "facildyn/error.hpp"

namespace facildyn {

namespace {

constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;

struct StepResult {
  Vec2 y;
  Vec2 err;
  Vec2 k7;
};

inline Vec2 axpy(const Vec2& y, double h, std::initializer_list<std::pair<double, const Vec2*>> terms) {
  Vec2 out = y;
  for (const auto& [c, k] : terms) {
    out[0] += h * c * (*k)[0];
    out[1] += h * c * (*k)[1];
  }
  return out;
}

StepResult dp_full_step(const PlanarField& f, const Vec2& y, const Vec2& k1, double h) {
  const Vec2 k2 = f(axpy(y, h, {{a21, &k1}}));
  const Vec2 k3 = f(axpy(y, h, {{a31, &k1}, {a32, &k2}}));
  const Vec2 k4 = f(axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
  const Vec2 k5 = f(axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
  const Vec2 k6 = f(axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
  const Vec2 y5 = axpy(y, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
  const Vec2 k7 = f(y5);
  Vec2 err{};
  for (int i = 0; i < 2; ++i) {
    err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
  }
  return {y5, err, k7};
}

bool triggered(double g_prev, double g_new, int direction) {
  if (g_prev == 0.0) return false;
  const bool crossed = (g_prev < 0.0) != (g_new < 0.0) || g_new == 0.0;
  if (!crossed) return false;
  if (direction > 0) return g_prev < 0.0;
  if (direction < 0) return g_prev > 0.0;
  return true;
}

}  // namespace

EventSpec EventSpec::line(std::string kind, double a, double b, double c, int direction, bool terminal) {
  EventSpec e;
  e.kind = std::move(kind);
  e.g = [a, b, c](const Vec2& s) { return a * s[0] + b * s[1] - c; };
  e.direction = direction;
  e.terminal = terminal;
  return e;
}

EventSpec EventSpec::norm_above(std::string kind, double r, bool terminal) {
  EventSpec e;
  e.kind = std::move(kind);
  e.g = [r](const Vec2& s) { return std::hypot(s[0], s[1]) - r; };
  e.direction = 1;
  e.terminal = terminal;
  return e;
}

void IntegratorConfig::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerances must be > 0");
  if (!(min_step > 0.0) || !(min_step <= max_step)) {
    throw Error(ErrorCode::InvalidArgument, "need 0 < min_step <= max_step");
  }
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw Error(ErrorCode::InvalidArgument, "t_max must be finite and > 0");
  if (!(initial_step > 0.0)) throw Error(ErrorCode::InvalidArgument, "initial_step must be > 0");
  if (!(event_time_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "event_time_tol must be > 0");
  for (const auto& e : events) {
    if (!e.g) throw Error(ErrorCode::InvalidArgument, "event '" + e.kind + "' has no function");
  }
}

Vec2 dp_step(const PlanarField& f, const Vec2& y, double h) { return dp_full_step(f, y, f(y), h).y; }

RawTrajectory integrate_field(const PlanarField& f, const Vec2& y0, const IntegratorConfig& cfg) {
  cfg.validate();
  if (!std::isfinite(y0[0]) || !std::isfinite(y0[1])) throw Error(ErrorCode::InvalidArgument, "initial state must be finite");

  RawTrajectory out;
  out.times.push_back(0.0);
  out.states.push_back(y0);

  double t = 0.0;
  Vec2 y = y0;
  Vec2 k1 = f(y);
  double h = std::min(cfg.initial_step, cfg.max_step);
  std::vector<double> g_prev(cfg.events.size());
  for (std::size_t i = 0; i < cfg.events.size(); ++i) g_prev[i] = cfg.events[i].g(y);

  std::size_t steps = 0;
  while (t < cfg.t_max) {
    if (++steps > cfg.max_steps) {
      std::ostringstream os;
      os << "step budget exhausted at t = " << t;
      throw Error(ErrorCode::Stiffness, os.str(), std::array<double, 2>{y[0], y[1]});
    }
    const bool last = t + h >= cfg.t_max;
    const double h_try = last ? cfg.t_max - t : h;
    const StepResult r = dp_full_step(f, y, k1, h_try);

    double err = 0.0;
    bool finite = std::isfinite(r.y[0]) && std::isfinite(r.y[1]);
    for (int i = 0; i < 2 && finite; ++i) {
      const double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(r.y[i]));
      err = std::max(err, std::abs(r.err[i]) / sc);
    }
    if (!finite || !std::isfinite(err)) err = std::numeric_limits<double>::infinity();

    if (err > 1.0) {
      const double fac = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.2;
      h = h_try * fac;
      if (h < cfg.min_step) {
        std::ostringstream os;
        os << "step size underflow (h < " << cfg.min_step << ") at t = " << t;
        throw Error(ErrorCode::Stiffness, os.str(), std::array<double, 2>{y[0], y[1]});
      }
      continue;
    }

    // Accepted; look for events inside [t, t + h_try].
    std::vector<std::size_t> hits;
    for (std::size_t i = 0; i < cfg.events.size(); ++i) {
      const double gn = cfg.events[i].g(r.y);
      if (triggered(g_prev[i], gn, cfg.events[i].direction)) hits.push_back(i);
    }
    std::vector<std::pair<double, Vec2>> located(cfg.events.size());
    for (std::size_t i : hits) {
      double lo = 0.0, hi = h_try;
      const bool neg = g_prev[i] < 0.0;
      while (hi - lo > cfg.event_time_tol) {
        const double mid = 0.5 * (lo + hi);
        const double gm = cfg.events[i].g(dp_step(f, y, mid));
        if ((gm < 0.0) == neg && gm != 0.0) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      located[i] = {t + hi, hi == h_try ? r.y : dp_step(f, y, hi)};
    }

    // Earliest terminal event cuts the step.
    std::optional<std::size_t> terminal;
    for (std::size_t i : hits) {
      if (cfg.events[i].terminal && (!terminal || located[i].first < located[*terminal].first)) terminal = i;
    }
    std::vector<std::size_t> ordered = hits;
    std::sort(ordered.begin(), ordered.end(),
              [&](std::size_t a, std::size_t b) { return located[a].first < located[b].first; });
    for (std::size_t i : ordered) {
      if (terminal && located[i].first > located[*terminal].first) break;
      out.events.push_back({located[i].first, cfg.events[i].kind, located[i].second});
    }

    if (terminal) {
      const auto& [te, ye] = located[*terminal];
      if (te > out.times.back()) {
        out.times.push_back(te);
        out.states.push_back(ye);
      }
      out.termination = Termination::Event;
      return out;
    }

    t = last ? cfg.t_max : t + h_try;
    y = r.y;
    k1 = r.k7;
    for (std::size_t i = 0; i < cfg.events.size(); ++i) g_prev[i] = cfg.events[i].g(y);
    if (cfg.record_steps || t >= cfg.t_max) {
      out.times.push_back(t);
      out.states.push_back(y);
    }

    if (cfg.stop && cfg.stop(y)) {
      if (!cfg.record_steps && out.times.back() != t) {
        out.times.push_back(t);
        out.states.push_back(y);
      }
      out.events.push_back({t, "stop", y});
      out.termination = Termination::Stop;
      return out;
    }

    const double fac = err == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));
    h = std::min(cfg.max_step, h_try * fac);
  }
  if (out.times.back() != t) {
    out.times.push_back(t);
    out.states.push_back(y);
  }
  out.termination = Termination::TimeLimit;
  return out;
}

}  // namespace facildyn
