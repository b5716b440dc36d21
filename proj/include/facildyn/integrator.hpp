#pragma once

// Dormand-Prince 5(4) with event location, for autonomous planar fields.

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace facildyn {

using Vec2 = std::array<double, 2>;
using PlanarField = std::function<Vec2(const Vec2&)>;

/// Zero of g marks the event. direction: +1 rising, -1 falling, 0 both.
struct EventSpec {
  std::string kind;
  std::function<double(const Vec2&)> g;
  int direction = 0;
  bool terminal = false;

  /// a x + b y = c, crossed with sign change of a x + b y - c.
  static EventSpec line(std::string kind, double a, double b, double c, int direction, bool terminal);
  /// Euclidean norm rising through r.
  static EventSpec norm_above(std::string kind, double r, bool terminal);
};

struct IntegratorConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.5;
  double min_step = 1e-12;
  double initial_step = 1e-3;
  double t_max = 100.0;
  std::size_t max_steps = 5'000'000;
  double event_time_tol = 1e-10;
  bool record_steps = true;
  std::vector<EventSpec> events;
  /// Checked after each accepted step; true stops the run with a "stop" event.
  std::function<bool(const Vec2&)> stop;

  void validate() const;
};

struct EventRecord {
  double t = 0.0;
  std::string kind;
  Vec2 state{};
};

enum class Termination { TimeLimit, Event, Stop };

struct RawTrajectory {
  std::vector<double> times;
  std::vector<Vec2> states;
  std::vector<EventRecord> events;
  Termination termination = Termination::TimeLimit;
};

/// One Dormand-Prince step without error control.
[[nodiscard]] Vec2 dp_step(const PlanarField& f, const Vec2& y, double h);

/// Integrates y' = f(y) from y0 over [0, cfg.t_max]. Step-size underflow throws
/// Error(Stiffness) carrying the last accepted state.
[[nodiscard]] RawTrajectory integrate_field(const PlanarField& f, const Vec2& y0, const IntegratorConfig& cfg);

}  // namespace facildyn
