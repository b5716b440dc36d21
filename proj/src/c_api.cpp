#include "facildyn.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <new>
#include <string>

#include "facildyn/bifurcation.hpp"
#include "facildyn/dynamics.hpp"
#include "facildyn/error.hpp"
#include "facildyn/params.hpp"
#include "facildyn/pwl.hpp"
#include "facildyn/smooth_model.hpp"
#include "facildyn/stochastic.hpp"

using namespace facildyn;

struct fdyn_model {
  fdyn_model_kind kind;
  SmoothParams smooth;
  PwlParams pwl;
};

struct fdyn_trajectory {
  Trajectory traj;
};

struct fdyn_ensemble {
  EnsembleResult result;
};

namespace {

thread_local std::string g_last_error;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

fdyn_status status_of(ErrorCode c) noexcept {
  switch (c) {
    case ErrorCode::InvalidArgument: return FDYN_ERR_INVALID_ARGUMENT;
    case ErrorCode::DivisionByZero: return FDYN_ERR_DIVISION_BY_ZERO;
    case ErrorCode::NonGeneric: return FDYN_ERR_NON_GENERIC;
    case ErrorCode::ConsumerDecoupled: return FDYN_ERR_CONSUMER_DECOUPLED;
    case ErrorCode::Transcritical: return FDYN_ERR_TRANSCRITICAL;
    case ErrorCode::Domain: return FDYN_ERR_DOMAIN;
    case ErrorCode::Stiffness: return FDYN_ERR_STIFFNESS;
    case ErrorCode::NoCrossing: return FDYN_ERR_NO_CROSSING;
    case ErrorCode::Bracket: return FDYN_ERR_BRACKET;
    case ErrorCode::Inconclusive: return FDYN_ERR_INCONCLUSIVE;
    case ErrorCode::Chattering: return FDYN_ERR_CHATTERING;
    case ErrorCode::Degenerate: return FDYN_ERR_DEGENERATE;
    case ErrorCode::Io: return FDYN_ERR_IO;
    case ErrorCode::Internal: return FDYN_ERR_INTERNAL;
  }
  return FDYN_ERR_INTERNAL;
}

fdyn_status set_error(fdyn_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class Fn>
fdyn_status guard(Fn&& fn) noexcept {
  try {
    g_last_error.clear();
    fn();
    return FDYN_OK;
  } catch (const Error& e) {
    return set_error(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(FDYN_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(FDYN_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(FDYN_ERR_INTERNAL, "unknown exception");
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

void copy_message(char* dst, std::size_t cap, const std::string& src) {
  const std::size_t n = std::min(cap - 1, src.size());
  std::memcpy(dst, src.data(), n);
  dst[n] = '\0';
}

OriginalParams original_of(const fdyn_original_params* p) {
  need(p, "original parameters");
  return OriginalParams::make(p->alpha, p->D, p->eps, p->epsS, p->mu, p->delta);
}

fdyn_solver_options options_or_default(const fdyn_solver_options* o) {
  fdyn_solver_options d;
  fdyn_solver_options_init(&d);
  return o ? *o : d;
}

ShootingConfig shooting_of(const fdyn_solver_options& o) {
  ShootingConfig c;
  c.integrator.rel_tol = o.rel_tol;
  c.integrator.abs_tol = o.abs_tol;
  c.integrator.max_step = o.max_step;
  c.offset_scale = o.offset_scale;
  return c;
}

BifurcationConfig bifurcation_of(const fdyn_solver_options& o) {
  BifurcationConfig c;
  c.shooting = shooting_of(o);
  c.xe_tol = o.xe_tol;
  c.gap_tol = o.gap_tol;
  c.threads = o.threads;
  return c;
}

PwlConfig pwl_config_of(const fdyn_solver_options& o) {
  PwlConfig c;
  c.t_max = o.t_max;
  c.sample_dt = o.sample_dt;
  c.sliding.rel_tol = o.rel_tol;
  c.sliding.abs_tol = o.abs_tol;
  return c;
}

NoiseConfig noise_of(const fdyn_noise_options* o, double sigma) {
  fdyn_noise_options d;
  fdyn_noise_options_init(&d);
  const fdyn_noise_options& s = o ? *o : d;
  NoiseConfig c;
  c.sigma = sigma;
  c.dt = s.dt;
  c.t_max = s.t_max;
  c.seed = s.seed;
  c.y_extinct = s.y_extinct;
  c.x_extinct = s.x_extinct;
  c.blowup = s.blowup;
  c.initial = {s.x_init, s.y_init};
  if (s.scaling != FDYN_NOISE_INCREMENT && s.scaling != FDYN_NOISE_DRIFT_WEIGHTED) {
    throw Error(ErrorCode::InvalidArgument, "unknown noise scaling");
  }
  c.scaling = s.scaling == FDYN_NOISE_DRIFT_WEIGHTED ? NoiseScaling::DriftWeighted : NoiseScaling::Increment;
  return c;
}

const fdyn_model& model_ref(const fdyn_model* m) {
  need(m, "model");
  return *m;
}

const fdyn_model& smooth_only(const fdyn_model* m) {
  const auto& r = model_ref(m);
  if (r.kind != FDYN_MODEL_SMOOTH) throw Error(ErrorCode::InvalidArgument, "operation needs a smooth model");
  return r;
}

const fdyn_model& pwl_only(const fdyn_model* m) {
  const auto& r = model_ref(m);
  if (r.kind != FDYN_MODEL_PWL) throw Error(ErrorCode::InvalidArgument, "operation needs a PWL model");
  return r;
}

PwlMode side_of(const PwlParams& p, double x) { return x <= p.xe ? PwlMode::Region1 : PwlMode::Region2; }

void write_matrix(const Matrix2& J, double out[4]) {
  out[0] = J[0][0];
  out[1] = J[0][1];
  out[2] = J[1][0];
  out[3] = J[1][1];
}

Chart chart_of(fdyn_chart c) {
  switch (c) {
    case FDYN_CHART_U1: return Chart::U1;
    case FDYN_CHART_U2: return Chart::U2;
    case FDYN_CHART_U3: return Chart::U3;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown chart");
}

Trajectory straight_segment(double xa, double ya, double xb, double yb, int mode, int samples) {
  Trajectory t;
  for (int i = 0; i <= samples; ++i) {
    const double s = static_cast<double>(i) / samples;
    t.times.push_back(s);
    t.states.push_back({xa + s * (xb - xa), ya + s * (yb - ya)});
    t.modes.push_back(mode);
  }
  t.events.push_back({1.0, "section", t.states.back()});
  t.termination = Termination::Event;
  return t;
}

}  // namespace

extern "C" {

const char* fdyn_version(void) { return "0.1.0"; }

const char* fdyn_status_string(fdyn_status s) {
  switch (s) {
    case FDYN_OK: return "ok";
    case FDYN_ERR_INVALID_ARGUMENT: return to_string(ErrorCode::InvalidArgument);
    case FDYN_ERR_DIVISION_BY_ZERO: return to_string(ErrorCode::DivisionByZero);
    case FDYN_ERR_NON_GENERIC: return to_string(ErrorCode::NonGeneric);
    case FDYN_ERR_CONSUMER_DECOUPLED: return to_string(ErrorCode::ConsumerDecoupled);
    case FDYN_ERR_TRANSCRITICAL: return to_string(ErrorCode::Transcritical);
    case FDYN_ERR_DOMAIN: return to_string(ErrorCode::Domain);
    case FDYN_ERR_STIFFNESS: return to_string(ErrorCode::Stiffness);
    case FDYN_ERR_NO_CROSSING: return to_string(ErrorCode::NoCrossing);
    case FDYN_ERR_BRACKET: return to_string(ErrorCode::Bracket);
    case FDYN_ERR_INCONCLUSIVE: return to_string(ErrorCode::Inconclusive);
    case FDYN_ERR_CHATTERING: return to_string(ErrorCode::Chattering);
    case FDYN_ERR_DEGENERATE: return to_string(ErrorCode::Degenerate);
    case FDYN_ERR_IO: return to_string(ErrorCode::Io);
    case FDYN_ERR_INTERNAL: return to_string(ErrorCode::Internal);
  }
  return "unknown";
}

int fdyn_status_is_validation(fdyn_status s) {
  switch (s) {
    case FDYN_ERR_INVALID_ARGUMENT:
    case FDYN_ERR_DIVISION_BY_ZERO:
    case FDYN_ERR_NON_GENERIC:
    case FDYN_ERR_CONSUMER_DECOUPLED:
    case FDYN_ERR_TRANSCRITICAL:
    case FDYN_ERR_DOMAIN:
    case FDYN_ERR_DEGENERATE:
      return 1;
    default:
      return 0;
  }
}

const char* fdyn_last_error(void) { return g_last_error.c_str(); }

fdyn_status fdyn_rescale(const fdyn_original_params* p, fdyn_rescaled_params* out) {
  return guard([&] {
    need(out, "out");
    const auto r = rescale(original_of(p));
    *out = {r.A, r.B, r.F, r.G};
  });
}

fdyn_status fdyn_to_smooth_params(const fdyn_original_params* p, fdyn_params* out) {
  return guard([&] {
    need(out, "out");
    const auto s = to_smooth_params(original_of(p));
    *out = {s.x0(), s.x1(), s.xe(), s.F()};
  });
}

fdyn_status fdyn_params_from_json(const char* json, fdyn_params* out) {
  return guard([&] {
    need(json, "json");
    need(out, "out");
    const auto parsed = params_from_json(json);
    *out = {parsed.smooth.x0(), parsed.smooth.x1(), parsed.smooth.xe(), parsed.smooth.F()};
  });
}

namespace {

void fill_loci(const LocusSet& L, double F, fdyn_loci* out) {
  const auto R = habitat_ratios(L.x0, L.x1);
  const auto H = hopf_constants(L.x0, L.x1, F);
  out->x_c = L.x_c;
  out->x_H = L.x_H;
  out->x_geo = L.x_geo;
  out->has_D_SN = L.D_SN.has_value();
  out->D_SN = L.D_SN.value_or(kNaN);
  out->R_c = R.R_c;
  out->R_o = R.R_o;
  out->R_s = R.R_s;
  out->L1 = H.L1;
  out->T0 = H.T0;
  out->dT = H.dT;
  out->canard_slope = canard_slope(L.x0, L.x1);
}

}  // namespace

fdyn_status fdyn_loci_compute(double x0, double x1, double F, fdyn_loci* out) {
  return guard([&] {
    need(out, "out");
    fill_loci(loci(x0, x1), F, out);
  });
}

fdyn_status fdyn_loci_from_original(const fdyn_original_params* p, fdyn_loci* out) {
  return guard([&] {
    need(out, "out");
    const auto op = original_of(p);
    fill_loci(loci(op), to_smooth_params(op).F(), out);
  });
}

fdyn_status fdyn_focus_node_boundary(double x0, double x1, double xe, double* out) {
  return guard([&] {
    need(out, "out");
    (void)loci(x0, x1);
    *out = focus_node_boundary(x0, x1, xe);
  });
}

fdyn_status fdyn_hyperbolicity_ratio(double x0, double x1, double xe, double* out) {
  return guard([&] {
    need(out, "out");
    *out = hyperbolicity_ratio(x0, x1, xe);
  });
}

fdyn_status fdyn_model_create(fdyn_model_kind kind, const fdyn_params* p, fdyn_model** out) {
  return guard([&] {
    need(p, "params");
    need(out, "out");
    *out = nullptr;
    if (kind != FDYN_MODEL_SMOOTH && kind != FDYN_MODEL_PWL) throw Error(ErrorCode::InvalidArgument, "unknown model kind");
    const auto s = SmoothParams::make(p->x0, p->x1, p->xe, p->F);
    PwlParams w{p->x0, p->x1, p->xe, p->F};
    if (kind == FDYN_MODEL_PWL) w = PwlParams::from(s);
    *out = new fdyn_model{kind, s, w};
  });
}

void fdyn_model_destroy(fdyn_model* m) { delete m; }

fdyn_status fdyn_model_params(const fdyn_model* m, fdyn_params* out) {
  return guard([&] {
    need(out, "out");
    const auto& s = model_ref(m).smooth;
    *out = {s.x0(), s.x1(), s.xe(), s.F()};
  });
}

fdyn_status fdyn_model_kind_of(const fdyn_model* m, fdyn_model_kind* out) {
  return guard([&] {
    need(out, "out");
    *out = model_ref(m).kind;
  });
}

fdyn_status fdyn_model_field(const fdyn_model* m, double x, double y, double out[2]) {
  return guard([&] {
    need(out, "out");
    const auto& r = model_ref(m);
    const Velocity v = r.kind == FDYN_MODEL_SMOOTH ? field(r.smooth, {x, y})
                                                   : pwl_field(r.pwl, {x, y, side_of(r.pwl, x)});
    out[0] = v[0];
    out[1] = v[1];
  });
}

fdyn_status fdyn_model_jacobian(const fdyn_model* m, double x, double y, double out[4]) {
  return guard([&] {
    need(out, "out");
    const auto& r = model_ref(m);
    if (r.kind == FDYN_MODEL_SMOOTH) {
      write_matrix(jacobian(r.smooth, {x, y}), out);
      return;
    }
    // Each region field is affine, so unit differences are exact.
    const PwlMode mode = side_of(r.pwl, x);
    const auto f = pwl_field(r.pwl, {x, y, mode});
    const auto fx = pwl_field(r.pwl, {x + 1.0, y, mode});
    const auto fy = pwl_field(r.pwl, {x, y + 1.0, mode});
    write_matrix({{{fx[0] - f[0], fy[0] - f[0]}, {fx[1] - f[1], fy[1] - f[1]}}}, out);
  });
}

fdyn_status fdyn_x_nullcline(const fdyn_model* m, double x, double* y) {
  return guard([&] {
    need(y, "y");
    const auto& r = model_ref(m);
    // The x-velocity is affine in y in both models.
    auto fx = [&](double yy) {
      return r.kind == FDYN_MODEL_SMOOTH ? field(r.smooth, {x, yy})[0] : pwl_field(r.pwl, {x, yy, side_of(r.pwl, x)})[0];
    };
    const double f0 = fx(0.0), f1 = fx(1.0);
    if (f1 == f0) throw Error(ErrorCode::Domain, "x-velocity does not depend on y at this abscissa");
    *y = -f0 / (f1 - f0);
  });
}

const char* fdyn_equilibrium_kind_string(fdyn_equilibrium_kind kind) {
  if (kind < FDYN_EQ_STABLE_NODE || kind > FDYN_EQ_DEGENERATE) return "unknown";
  return to_string(static_cast<EquilibriumKind>(kind));
}

fdyn_status fdyn_equilibria(const fdyn_model* m, fdyn_equilibrium out[4]) {
  return guard([&] {
    need(out, "out");
    const auto eq = equilibria(smooth_only(m).smooth);
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& e = eq[i];
      fdyn_equilibrium& o = out[i];
      std::memset(&o, 0, sizeof o);
      copy_message(o.name, sizeof o.name, e.name);
      o.x = e.point.x;
      o.y = e.point.y;
      o.kind = static_cast<fdyn_equilibrium_kind>(e.kind);
      o.trace = e.trace;
      o.det = e.det;
      o.discriminant = e.discriminant;
      for (int k = 0; k < 2; ++k) {
        o.eig_re[k] = e.eigenvalues[k].real();
        o.eig_im[k] = e.eigenvalues[k].imag();
      }
      o.has_eigenvectors = e.eigenvectors.has_value();
      if (e.eigenvectors) {
        for (int k = 0; k < 2; ++k) {
          o.eigenvectors[k][0] = (*e.eigenvectors)[k][0];
          o.eigenvectors[k][1] = (*e.eigenvectors)[k][1];
        }
      }
      o.rotation = e.rotation;
      o.degenerate_configuration = e.degenerate_configuration;
    }
  });
}

fdyn_status fdyn_rotation_determinant(const fdyn_model* m, double x, double y, double* out) {
  return guard([&] {
    need(out, "out");
    *out = rotation_determinant(smooth_only(m).smooth, {x, y});
  });
}

fdyn_status fdyn_chart_field(const fdyn_model* m, fdyn_chart chart, double u, double v, double out[2]) {
  return guard([&] {
    need(out, "out");
    const auto f = chart_field(smooth_only(m).smooth, chart_of(chart))(u, v);
    out[0] = f[0];
    out[1] = f[1];
  });
}

fdyn_status fdyn_chart_jacobian(const fdyn_model* m, fdyn_chart chart, double u, double v, double out[4]) {
  return guard([&] {
    need(out, "out");
    write_matrix(chart_field(smooth_only(m).smooth, chart_of(chart)).jacobian(u, v), out);
  });
}

void fdyn_solver_options_init(fdyn_solver_options* o) {
  if (!o) return;
  const BifurcationConfig b;
  const PwlConfig w;
  o->rel_tol = b.shooting.integrator.rel_tol;
  o->abs_tol = b.shooting.integrator.abs_tol;
  o->max_step = b.shooting.integrator.max_step;
  o->t_max = b.shooting.integrator.t_max;
  o->offset_scale = b.shooting.offset_scale;
  o->xe_tol = b.xe_tol;
  o->gap_tol = b.gap_tol;
  o->sample_dt = w.sample_dt;
  o->threads = 0;
}

void fdyn_trajectory_destroy(fdyn_trajectory* t) { delete t; }

size_t fdyn_trajectory_size(const fdyn_trajectory* t) { return t ? t->traj.size() : 0; }

fdyn_status fdyn_trajectory_point(const fdyn_trajectory* t, size_t i, double* time, double* x, double* y, int* mode) {
  return guard([&] {
    need(t, "trajectory");
    if (i >= t->traj.size()) throw Error(ErrorCode::InvalidArgument, "trajectory index out of range");
    if (time) *time = t->traj.times[i];
    if (x) *x = t->traj.states[i].x;
    if (y) *y = t->traj.states[i].y;
    if (mode) *mode = t->traj.modes.empty() ? -1 : t->traj.modes[i];
  });
}

size_t fdyn_trajectory_event_count(const fdyn_trajectory* t) { return t ? t->traj.events.size() : 0; }

fdyn_status fdyn_trajectory_event(const fdyn_trajectory* t, size_t i, double* time, double* x, double* y,
                                  const char** kind) {
  return guard([&] {
    need(t, "trajectory");
    if (i >= t->traj.events.size()) throw Error(ErrorCode::InvalidArgument, "event index out of range");
    const auto& e = t->traj.events[i];
    if (time) *time = e.t;
    if (x) *x = e.state.x;
    if (y) *y = e.state.y;
    if (kind) *kind = e.kind.c_str();
  });
}

fdyn_status fdyn_integrate(const fdyn_model* m, double x, double y, const fdyn_solver_options* o,
                           fdyn_trajectory** out) {
  return guard([&] {
    need(out, "out");
    *out = nullptr;
    const auto& r = model_ref(m);
    const auto opt = options_or_default(o);
    Trajectory t;
    if (r.kind == FDYN_MODEL_SMOOTH) {
      IntegratorConfig ic = shooting_of(opt).integrator;
      ic.t_max = opt.t_max;
      t = integrate(r.smooth, State::make(x, y), ic);
    } else {
      t = pwl_integrate(r.pwl, {x, y, side_of(r.pwl, x)}, pwl_config_of(opt));
    }
    *out = new fdyn_trajectory{std::move(t)};
  });
}

const char* fdyn_separatrix_string(fdyn_separatrix which) {
  if (which < FDYN_SEP_UNSTABLE_X0 || which > FDYN_SEP_STABLE_X1) return "unknown";
  return to_string(static_cast<Separatrix>(which));
}

fdyn_status fdyn_trace_separatrix(const fdyn_model* m, fdyn_separatrix which, const fdyn_solver_options* o,
                                  fdyn_trajectory** out) {
  return guard([&] {
    need(out, "out");
    *out = nullptr;
    const auto& r = model_ref(m);
    if (which < FDYN_SEP_UNSTABLE_X0 || which > FDYN_SEP_STABLE_X1) {
      throw Error(ErrorCode::InvalidArgument, "unknown separatrix");
    }
    const auto opt = options_or_default(o);
    Trajectory t;
    if (r.kind == FDYN_MODEL_SMOOTH) {
      const auto& p = r.smooth;
      t = trace_separatrix(p, static_cast<Separatrix>(which), opt.offset_scale * (p.x1() - p.x0()), shooting_of(opt));
    } else {
      const auto& p = r.pwl;
      const auto L = pwl_loci(p);
      switch (which) {
        case FDYN_SEP_UNSTABLE_X0: t = straight_segment(p.x0, 0.0, p.xe, 0.0, 0, 100); break;
        case FDYN_SEP_STABLE_X0: t = straight_segment(p.x0, 0.0, p.xe, L.h_s(p.xe, p.F), 0, 100); break;
        case FDYN_SEP_UNSTABLE_X1: t = straight_segment(p.x1, 0.0, p.xe, L.h_u(p.xe, p.F), 1, 100); break;
        case FDYN_SEP_STABLE_X1: t = straight_segment(p.x1, 0.0, p.xe, 0.0, 1, 100); break;
      }
    }
    *out = new fdyn_trajectory{std::move(t)};
  });
}

fdyn_status fdyn_section_gap(const fdyn_model* m, const fdyn_solver_options* o, double* gap) {
  return guard([&] {
    need(gap, "gap");
    const auto& r = model_ref(m);
    if (r.kind == FDYN_MODEL_SMOOTH) {
      *gap = section_gap(r.smooth, shooting_of(options_or_default(o)));
    } else {
      const auto L = pwl_loci(r.pwl);
      *gap = L.h_u(r.pwl.xe, r.pwl.F) - L.h_s(r.pwl.xe, r.pwl.F);
    }
  });
}

fdyn_status fdyn_find_limit_cycle(const fdyn_model* m, const fdyn_solver_options* o, fdyn_cycle_info* info,
                                  fdyn_trajectory** samples) {
  return guard([&] {
    need(info, "info");
    if (samples) *samples = nullptr;
    const auto& r = model_ref(m);
    const auto opt = options_or_default(o);
    const auto c = r.kind == FDYN_MODEL_SMOOTH ? find_limit_cycle(r.smooth, shooting_of(opt))
                                               : pwl_find_limit_cycle(r.pwl, pwl_config_of(opt));
    std::memset(info, 0, sizeof *info);
    if (!c) return;
    info->found = 1;
    info->section_x = c->section_point.x;
    info->section_y = c->section_point.y;
    info->period = c->period;
    info->x_min = c->amplitude.x_min;
    info->x_max = c->amplitude.x_max;
    info->y_min = c->amplitude.y_min;
    info->y_max = c->amplitude.y_max;
    info->residual = c->residual;
    info->multiplier = c->multiplier;
    if (samples) {
      Trajectory t;
      t.times = c->times;
      t.states = c->samples;
      *samples = new fdyn_trajectory{std::move(t)};
    }
  });
}

fdyn_status fdyn_heteroclinic_curve(double x0, double x1, const double* F, size_t n, const fdyn_solver_options* o,
                                    fdyn_heteroclinic_point* out) {
  return guard([&] {
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "F grid must be non-empty");
    need(F, "F");
    need(out, "out");
    const auto curve = heteroclinic_curve(x0, x1, std::vector<double>(F, F + n), bifurcation_of(options_or_default(o)));
    for (std::size_t i = 0; i < n; ++i) {
      fdyn_heteroclinic_point& p = out[i];
      const auto& d = curve.diagnostics[i];
      p.F = F[i];
      p.xe_h = curve.values[i];
      p.residual = curve.ok(i) ? d.residual : kNaN;
      p.bracket_width = curve.ok(i) ? d.bracket_width : kNaN;
      p.iterations = d.iterations;
      p.ok = curve.ok(i);
      p.failure = FDYN_OK;
      p.message[0] = '\0';
      if (!p.ok) {
        const std::string& msg = *curve.failures[i];
        p.failure = msg.rfind("bracket", 0) == 0 ? FDYN_ERR_BRACKET : FDYN_ERR_INCONCLUSIVE;
        copy_message(p.message, sizeof p.message, msg);
      }
    }
  });
}

const char* fdyn_region_string(fdyn_region r) {
  if (r < FDYN_REGION_STATIC || r > FDYN_REGION_COLLAPSE) return "unknown";
  return to_string(static_cast<Region>(r));
}

fdyn_status fdyn_region_grid(double x0, double x1, const double* xe, size_t nxe, const double* F, size_t nF,
                             const fdyn_solver_options* o, fdyn_region_cell* out) {
  return guard([&] {
    if (nxe == 0 || nF == 0) throw Error(ErrorCode::InvalidArgument, "region grids must be non-empty");
    need(xe, "xe");
    need(F, "F");
    need(out, "out");
    const auto cells = region_grid(x0, x1, std::vector<double>(xe, xe + nxe), std::vector<double>(F, F + nF),
                                   bifurcation_of(options_or_default(o)));
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& c = cells[i];
      out[i] = {c.xe, c.F, static_cast<fdyn_region>(c.label.region), c.label.margin, c.label.xe_h.value_or(kNaN)};
    }
  });
}

fdyn_status fdyn_pwl_sliding_data(const fdyn_model* m, fdyn_sliding_data* out) {
  return guard([&] {
    need(out, "out");
    const auto d = sliding_data(pwl_only(m).pwl);
    *out = {d.lambda, d.T1, d.T2, d.P_lambda, d.T1_abs, d.T2_abs, d.P_abs, d.attracting, d.stable};
  });
}

fdyn_status fdyn_pwl_first_integral(const fdyn_model* m, int side, double x, double y, double* out) {
  return guard([&] {
    need(out, "out");
    *out = first_integral(pwl_only(m).pwl, side, {x, y});
  });
}

fdyn_status fdyn_pwl_curve_eval(double x0, double x1, fdyn_pwl_curve curve, double arg, double* out) {
  return guard([&] {
    need(out, "out");
    (void)loci(x0, x1);
    const auto L = pwl_loci(x0, x1);
    switch (curve) {
      case FDYN_PWL_F_HET: *out = L.F_het(arg); return;
      case FDYN_PWL_XE_HET: *out = L.xe_het(arg); return;
      case FDYN_PWL_F_B1: *out = L.F_B1(arg); return;
      case FDYN_PWL_F_B2: *out = L.F_B2(arg); return;
      case FDYN_PWL_V1: *out = L.V1(arg); return;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown PWL curve");
  });
}

const char* fdyn_pwl_region_string(fdyn_pwl_region r) {
  if (r < FDYN_PWL_OMEGA1 || r > FDYN_PWL_OMEGA7) return "unknown";
  return to_string(static_cast<PwlRegion>(r));
}

fdyn_status fdyn_pwl_classify(const fdyn_model* m, double tol, fdyn_pwl_region* region, double* margin) {
  return guard([&] {
    need(region, "region");
    if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be > 0");
    const auto l = pwl_classify_region(pwl_only(m).pwl, tol);
    *region = static_cast<fdyn_pwl_region>(l.region);
    if (margin) *margin = l.margin;
  });
}

fdyn_status fdyn_pwl_resilience(const fdyn_model* m, fdyn_resilience* out) {
  return guard([&] {
    need(out, "out");
    const auto r = resilience_distance(pwl_only(m).pwl);
    *out = {r.distance, r.xe_star, r.F_star};
  });
}

fdyn_status fdyn_pwl_habitat_effect(const fdyn_original_params* p, double F, fdyn_habitat_effect* out) {
  return guard([&] {
    need(out, "out");
    const auto h = habitat_effect(original_of(p), F);
    *out = {h.xe_het, h.x_H, h.d_o, h.dxe_het_dD, h.dxe_het_dD_numeric, h.d_o_prime, h.d_o_prime_sign};
  });
}

void fdyn_noise_options_init(fdyn_noise_options* o) {
  if (!o) return;
  const NoiseConfig c;
  o->dt = c.dt;
  o->t_max = c.t_max;
  o->seed = c.seed;
  o->y_extinct = c.y_extinct;
  o->x_extinct = c.x_extinct;
  o->blowup = c.blowup;
  o->x_init = c.initial.x;
  o->y_init = c.initial.y;
  o->scaling = FDYN_NOISE_INCREMENT;
  o->threads = 0;
}

fdyn_status fdyn_simulate_realization(const fdyn_model* m, double sigma, const fdyn_noise_options* o,
                                      fdyn_realization* out) {
  return guard([&] {
    need(out, "out");
    const auto r = simulate_realization(smooth_only(m).smooth, noise_of(o, sigma));
    out->survived = r.survived;
    out->has_extinction_time = r.extinction_time.has_value();
    out->extinction_time = r.extinction_time.value_or(kNaN);
    out->blowup = r.blowup;
    out->has_resource_dip = r.resource_dip_time.has_value();
    out->resource_dip_time = r.resource_dip_time.value_or(kNaN);
    out->x_final = r.final_state.x;
    out->y_final = r.final_state.y;
  });
}

uint64_t fdyn_derive_seed(uint64_t base, uint64_t cell, uint64_t realization) {
  return derive_seed(base, cell, realization);
}

fdyn_status fdyn_ensemble_run(double x0, double x1, double F, const double* sigma, size_t n_sigma, const double* xe,
                              size_t n_xe, size_t n, const fdyn_noise_options* o, fdyn_ensemble** out) {
  return guard([&] {
    need(out, "out");
    *out = nullptr;
    if (n_sigma == 0 || n_xe == 0) throw Error(ErrorCode::InvalidArgument, "grids must be non-empty");
    need(sigma, "sigma");
    need(xe, "xe");
    const NoiseConfig cfg = noise_of(o, 0.0);
    const unsigned threads = o ? o->threads : 0;
    auto res = survival_grid(x0, x1, F, std::vector<double>(sigma, sigma + n_sigma), std::vector<double>(xe, xe + n_xe),
                             n, cfg, threads);
    *out = new fdyn_ensemble{std::move(res)};
  });
}

void fdyn_ensemble_destroy(fdyn_ensemble* e) { delete e; }

size_t fdyn_ensemble_cell_count(const fdyn_ensemble* e) { return e ? e->result.cells.size() : 0; }

fdyn_status fdyn_ensemble_get_cell(const fdyn_ensemble* e, size_t i, fdyn_ensemble_cell* out) {
  return guard([&] {
    need(e, "ensemble");
    need(out, "out");
    if (i >= e->result.cells.size()) throw Error(ErrorCode::InvalidArgument, "cell index out of range");
    const auto& c = e->result.cells[i];
    out->sigma = c.sigma;
    out->xe = c.xe;
    out->survival = c.survival;
    out->n = c.n;
    out->mean_ext_time = c.mean_ext_time.value_or(kNaN);
    out->std_ext_time = c.std_ext_time.value_or(kNaN);
    out->n_extinct = c.n_extinct;
    out->n_blowup = c.n_blowup;
    out->n_resource_dip = c.n_resource_dip;
    out->cell_index = c.cell_index;
  });
}

fdyn_status fdyn_ensemble_threshold(const fdyn_ensemble* e, size_t i_sigma, double level, double* out) {
  return guard([&] {
    need(e, "ensemble");
    need(out, "out");
    *out = survival_threshold(e->result, i_sigma, level);
  });
}

}  // extern "C"
