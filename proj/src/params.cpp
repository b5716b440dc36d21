#include "facildyn/params.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "facildyn/error.hpp"
#include "json.hpp"

namespace facildyn {

namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, std::string(name) + " must be finite");
}

// Vegetation-only equilibria (roots of x^2 - (1-D) x + eps/alpha).
std::pair<double, double> vegetation_roots(const OriginalParams& p) {
  if (p.alpha <= 0.0) fail(ErrorCode::NonGeneric, "alpha = 0 leaves no vegetation equilibria");
  const double s = 1.0 - p.D;
  const double disc = s * s - 4.0 * p.eps / p.alpha;
  if (!(disc > 0.0)) {
    std::ostringstream os;
    os << "generic regime requires (1-D)^2 - 4 eps/alpha > 0, got " << disc;
    fail(ErrorCode::NonGeneric, os.str());
  }
  const double r = std::sqrt(disc);
  // Vieta for the small root avoids cancellation.
  const double x1 = 0.5 * (s + r);
  const double x0 = (p.eps / p.alpha) / x1;
  return {x0, x1};
}

}  // namespace

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::DivisionByZero: return "division-by-zero";
    case ErrorCode::NonGeneric: return "non-generic";
    case ErrorCode::ConsumerDecoupled: return "consumer-decoupled";
    case ErrorCode::Transcritical: return "transcritical";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::Stiffness: return "stiffness";
    case ErrorCode::NoCrossing: return "no-crossing";
    case ErrorCode::Bracket: return "bracket";
    case ErrorCode::Inconclusive: return "inconclusive";
    case ErrorCode::Chattering: return "chattering";
    case ErrorCode::Degenerate: return "degenerate";
    case ErrorCode::Io: return "io";
    case ErrorCode::Internal: return "internal";
  }
  return "unknown";
}

OriginalParams OriginalParams::make(double alpha, double D, double eps, double epsS, double mu,
                                    double delta) {
  OriginalParams p{alpha, D, eps, epsS, mu, delta};
  p.validate();
  return p;
}

void OriginalParams::validate() const {
  require_finite(alpha, "alpha");
  require_finite(D, "D");
  require_finite(eps, "eps");
  require_finite(epsS, "epsS");
  require_finite(mu, "mu");
  require_finite(delta, "delta");
  if (eps == 0.0) fail(ErrorCode::DivisionByZero, "eps = 0: time rescaling divides by the resource mortality");
  if (eps < 0.0) fail(ErrorCode::InvalidArgument, "eps must be > 0");
  if (alpha < 0.0) fail(ErrorCode::InvalidArgument, "alpha must be >= 0");
  if (D < 0.0 || D > 1.0) fail(ErrorCode::InvalidArgument, "D must lie in [0, 1]");
  if (epsS < 0.0) fail(ErrorCode::InvalidArgument, "epsS must be >= 0");
  if (mu < 0.0 || mu > 1.0) fail(ErrorCode::InvalidArgument, "mu must lie in [0, 1]");
  if (delta < 0.0) fail(ErrorCode::InvalidArgument, "delta must be >= 0");
}

SmoothParams SmoothParams::make(double x0, double x1, double xe, double F) {
  require_finite(x0, "x0");
  require_finite(x1, "x1");
  require_finite(xe, "xe");
  require_finite(F, "F");
  if (!(x0 > 0.0)) fail(ErrorCode::InvalidArgument, "x0 must be > 0");
  if (!(x1 > x0)) fail(ErrorCode::NonGeneric, "generic regime requires x0 < x1");
  if (F == 0.0) fail(ErrorCode::ConsumerDecoupled, "F = 0 decouples the consumer");
  if (!(F > 0.0)) fail(ErrorCode::InvalidArgument, "F must be > 0");
  if (!(xe > 0.0)) fail(ErrorCode::InvalidArgument, "xe must be > 0");
  if (xe == x0 || xe == x1) {
    fail(ErrorCode::Transcritical, "xe coincides with a vegetation equilibrium (transcritical point)");
  }
  return SmoothParams(x0, x1, xe, F);
}

RescaledParams SmoothParams::rescaled() const noexcept {
  const double prod = x0_ * x1_;
  return {1.0 / prod, (x0_ + x1_) / prod, F_, xe_ * F_};
}

RescaledParams rescale(const OriginalParams& p) {
  p.validate();
  return {p.alpha / p.eps, p.alpha * (1.0 - p.D) / p.eps, p.epsS * p.mu / p.eps, p.delta / p.eps};
}

SmoothParams to_smooth_params(const OriginalParams& p) {
  p.validate();
  const auto [x0, x1] = vegetation_roots(p);
  const double coupling = p.epsS * p.mu;
  if (coupling == 0.0) fail(ErrorCode::ConsumerDecoupled, "epsS * mu = 0 decouples the consumer");
  const double xe = p.delta / coupling;
  if (xe == 0.0) fail(ErrorCode::Domain, "delta = 0 puts the coexistence abscissa at 0");
  return SmoothParams::make(x0, x1, xe, coupling / p.eps);
}

double saddle_node_threshold(const OriginalParams& p) {
  p.validate();
  if (p.alpha <= 0.0) fail(ErrorCode::NonGeneric, "alpha = 0 has no saddle-node threshold");
  return 1.0 - 2.0 * std::sqrt(p.eps / p.alpha);
}

double LocusSet::F_FN(double xe) const noexcept { return focus_node_boundary(x0, x1, xe); }

LocusSet loci(double x0, double x1) {
  if (!(x0 > 0.0) || !(x1 >= x0)) fail(ErrorCode::NonGeneric, "loci require 0 < x0 <= x1");
  LocusSet s;
  s.x0 = x0;
  s.x1 = x1;
  s.x_H = 0.5 * (x0 + x1);
  s.x_c = 2.0 * x0 * x1 / (x0 + x1);
  s.x_geo = std::sqrt(x0 * x1);
  return s;
}

LocusSet loci(const SmoothParams& p) { return loci(p.x0(), p.x1()); }

LocusSet loci(const OriginalParams& p) {
  p.validate();
  const auto [x0, x1] = vegetation_roots(p);
  LocusSet s = loci(x0, x1);
  s.D_SN = saddle_node_threshold(p);
  return s;
}

double focus_node_boundary(double x0, double x1, double xe) noexcept {
  const double den = 4.0 * x0 * x1 * (x1 - xe) * (xe - x0);
  const double m = x0 + x1 - 2.0 * xe;
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return xe * m * m / den;
}

double hyperbolicity_ratio(double x0, double x1, double xe) {
  if (!(x0 < xe && xe < x1)) fail(ErrorCode::Domain, "hyperbolicity ratio needs x0 < xe < x1");
  return (xe - x0) * x1 / ((x1 - xe) * x0);
}

double hyperbolicity_ratio(const SmoothParams& p) { return hyperbolicity_ratio(p.x0(), p.x1(), p.xe()); }

HabitatRatios habitat_ratios(double x0, double x1) {
  if (!(x0 > 0.0 && x1 > x0)) fail(ErrorCode::NonGeneric, "habitat ratios need 0 < x0 < x1");
  const LocusSet s = loci(x0, x1);
  HabitatRatios r;
  r.R_c = x0 / (x0 + x1);
  r.R_o = (s.x_H - s.x_c) / (x1 - x0);
  r.R_s = 0.5;
  return r;
}

HabitatRatios habitat_ratios(const SmoothParams& p) { return habitat_ratios(p.x0(), p.x1()); }

HabitatRatios habitat_ratios(const OriginalParams& p) {
  p.validate();
  const auto [x0, x1] = vegetation_roots(p);
  return habitat_ratios(x0, x1);
}

HopfConstants hopf_constants(double x0, double x1, double F) {
  if (!(x0 > 0.0 && x1 > x0 && F > 0.0)) fail(ErrorCode::InvalidArgument, "Hopf constants need 0 < x0 < x1, F > 0");
  const double d2 = (x0 - x1) * (x0 - x1);
  const double s = x0 + x1;
  HopfConstants h;
  h.L1 = -F * d2 / (6.0 * x0 * x0 * x1 * x1);
  h.T0 = 4.0 * std::numbers::pi * std::sqrt(2.0 * s * x0 * x1 * F * d2) / (F * s * d2);
  h.dT = -h.T0 / s;
  return h;
}

HopfConstants hopf_constants(const SmoothParams& p) { return hopf_constants(p.x0(), p.x1(), p.F()); }

double canard_slope(double x0, double x1) noexcept {
  const double d = x1 - x0;
  return -1.0 / (d * d * x0 * x1);
}

double canard_slope(const SmoothParams& p) noexcept { return canard_slope(p.x0(), p.x1()); }

ParsedParams params_from_json(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("malformed parameter JSON: ") + e.what());
  }
  if (j.contains("params") && j["params"].is_object()) j = j["params"];
  if (!j.is_object()) fail(ErrorCode::InvalidArgument, "parameter JSON must be an object");

  static constexpr const char* smooth_keys[] = {"x0", "x1", "xe", "F"};
  static constexpr const char* original_keys[] = {"alpha", "D", "eps", "epsS", "mu", "delta"};
  int n_smooth = 0;
  int n_original = 0;
  for (const char* k : smooth_keys) n_smooth += j.contains(k) ? 1 : 0;
  for (const char* k : original_keys) n_original += j.contains(k) ? 1 : 0;

  auto number = [&](const char* key) {
    const auto& v = j.at(key);
    if (!v.is_number()) fail(ErrorCode::InvalidArgument, std::string("parameter '") + key + "' must be a number");
    return v.get<double>();
  };
  auto missing = [&](const auto& keys) {
    std::string out;
    for (const char* k : keys) {
      if (!j.contains(k)) out += (out.empty() ? "" : ", ") + std::string(k);
    }
    return out;
  };

  if (n_smooth > 0 && n_original > 0) {
    fail(ErrorCode::InvalidArgument, "parameters mix smooth (x0,x1,xe,F) and original (alpha,...) keys");
  }
  if (n_smooth == 4) {
    return {SmoothParams::make(number("x0"), number("x1"), number("xe"), number("F")), std::nullopt};
  }
  if (n_original == 6) {
    const auto o = OriginalParams::make(number("alpha"), number("D"), number("eps"), number("epsS"), number("mu"),
                                        number("delta"));
    return {to_smooth_params(o), o};
  }
  if (n_smooth > 0) fail(ErrorCode::InvalidArgument, "missing smooth parameter(s): " + missing(smooth_keys));
  if (n_original > 0) fail(ErrorCode::InvalidArgument, "missing original parameter(s): " + missing(original_keys));
  fail(ErrorCode::InvalidArgument, "no parameters given (need x0,x1,xe,F or alpha,D,eps,epsS,mu,delta)");
}

}  // namespace facildyn
