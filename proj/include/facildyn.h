#ifndef FACILDYN_H
#define FACILDYN_H

/* C interface to libfacildyn.
 *
 * Every fallible call returns an fdyn_status; on failure a message for the
 * calling thread is available from fdyn_last_error() until the next call.
 * Handles are opaque and owned by the caller (release with *_destroy). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(FACILDYN_BUILD)
#    define FDYN_API __declspec(dllexport)
#  else
#    define FDYN_API __declspec(dllimport)
#  endif
#else
#  define FDYN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fdyn_status {
  FDYN_OK = 0,
  FDYN_ERR_INVALID_ARGUMENT = 1,
  FDYN_ERR_DIVISION_BY_ZERO = 2,
  FDYN_ERR_NON_GENERIC = 3,
  FDYN_ERR_CONSUMER_DECOUPLED = 4,
  FDYN_ERR_TRANSCRITICAL = 5,
  FDYN_ERR_DOMAIN = 6,
  FDYN_ERR_STIFFNESS = 7,
  FDYN_ERR_NO_CROSSING = 8,
  FDYN_ERR_BRACKET = 9,
  FDYN_ERR_INCONCLUSIVE = 10,
  FDYN_ERR_CHATTERING = 11,
  FDYN_ERR_DEGENERATE = 12,
  FDYN_ERR_IO = 13,
  FDYN_ERR_INTERNAL = 14
} fdyn_status;

FDYN_API const char* fdyn_version(void);
FDYN_API const char* fdyn_status_string(fdyn_status status);
/* Nonzero for caller mistakes (bad parameters), zero for numerical failures. */
FDYN_API int fdyn_status_is_validation(fdyn_status status);
FDYN_API const char* fdyn_last_error(void);

/* ---- parameters and closed-form quantities ---- */

typedef struct fdyn_params {
  double x0, x1, xe, F;
} fdyn_params;

typedef struct fdyn_original_params {
  double alpha, D, eps, epsS, mu, delta;
} fdyn_original_params;

typedef struct fdyn_rescaled_params {
  double A, B, F, G;
} fdyn_rescaled_params;

FDYN_API fdyn_status fdyn_rescale(const fdyn_original_params* p, fdyn_rescaled_params* out);
FDYN_API fdyn_status fdyn_to_smooth_params(const fdyn_original_params* p, fdyn_params* out);

/* Parses a JSON object with either {x0,x1,xe,F} or the six original keys. */
FDYN_API fdyn_status fdyn_params_from_json(const char* json, fdyn_params* out);

typedef struct fdyn_loci {
  double x_c, x_H, x_geo;
  double D_SN;      /* valid when has_D_SN */
  int has_D_SN;
  double R_c, R_o, R_s;
  double L1, T0, dT; /* Hopf constants at the given F */
  double canard_slope;
} fdyn_loci;

/* F > 0 is needed for the Hopf constants. */
FDYN_API fdyn_status fdyn_loci_compute(double x0, double x1, double F, fdyn_loci* out);
FDYN_API fdyn_status fdyn_loci_from_original(const fdyn_original_params* p, fdyn_loci* out);
FDYN_API fdyn_status fdyn_focus_node_boundary(double x0, double x1, double xe, double* out);
FDYN_API fdyn_status fdyn_hyperbolicity_ratio(double x0, double x1, double xe, double* out);

/* ---- models ---- */

typedef enum fdyn_model_kind { FDYN_MODEL_SMOOTH = 0, FDYN_MODEL_PWL = 1 } fdyn_model_kind;

typedef struct fdyn_model fdyn_model;

FDYN_API fdyn_status fdyn_model_create(fdyn_model_kind kind, const fdyn_params* p, fdyn_model** out);
FDYN_API void fdyn_model_destroy(fdyn_model* m);
FDYN_API fdyn_status fdyn_model_params(const fdyn_model* m, fdyn_params* out);
FDYN_API fdyn_status fdyn_model_kind_of(const fdyn_model* m, fdyn_model_kind* out);

/* Vector field at (x, y). PWL: region chosen by the side of x = xe (x = xe uses region 1). */
FDYN_API fdyn_status fdyn_model_field(const fdyn_model* m, double x, double y, double out[2]);
FDYN_API fdyn_status fdyn_model_jacobian(const fdyn_model* m, double x, double y, double out[4]);

/* Height where the x-velocity vanishes at abscissa x (the non-axis x-nullcline). */
FDYN_API fdyn_status fdyn_x_nullcline(const fdyn_model* m, double x, double* y);

typedef enum fdyn_equilibrium_kind {
  FDYN_EQ_STABLE_NODE = 0,
  FDYN_EQ_STABLE_FOCUS = 1,
  FDYN_EQ_UNSTABLE_NODE = 2,
  FDYN_EQ_UNSTABLE_FOCUS = 3,
  FDYN_EQ_SADDLE = 4,
  FDYN_EQ_CENTER = 5,
  FDYN_EQ_DEGENERATE = 6
} fdyn_equilibrium_kind;

FDYN_API const char* fdyn_equilibrium_kind_string(fdyn_equilibrium_kind kind);

typedef struct fdyn_equilibrium {
  char name[16];
  double x, y;
  fdyn_equilibrium_kind kind;
  double trace, det, discriminant;
  double eig_re[2], eig_im[2];
  int has_eigenvectors;
  double eigenvectors[2][2]; /* eigenvectors[i] belongs to eigenvalue i */
  int rotation;
  int degenerate_configuration;
} fdyn_equilibrium;

/* Smooth models only; writes 4 entries (origin, x0, x1, coexistence). */
FDYN_API fdyn_status fdyn_equilibria(const fdyn_model* m, fdyn_equilibrium out[4]);

FDYN_API fdyn_status fdyn_rotation_determinant(const fdyn_model* m, double x, double y, double* out);

typedef enum fdyn_chart { FDYN_CHART_U1 = 0, FDYN_CHART_U2 = 1, FDYN_CHART_U3 = 2 } fdyn_chart;

FDYN_API fdyn_status fdyn_chart_field(const fdyn_model* m, fdyn_chart chart, double u, double v, double out[2]);
FDYN_API fdyn_status fdyn_chart_jacobian(const fdyn_model* m, fdyn_chart chart, double u, double v, double out[4]);

/* ---- solver settings ---- */

typedef struct fdyn_solver_options {
  double rel_tol;
  double abs_tol;
  double max_step;
  double t_max;         /* integration horizon for trajectories */
  double offset_scale;  /* separatrix offset, times (x1 - x0) */
  double xe_tol;
  double gap_tol;
  double sample_dt;     /* PWL sampling step */
  unsigned threads;     /* 0: FDYN_THREADS or hardware concurrency */
} fdyn_solver_options;

FDYN_API void fdyn_solver_options_init(fdyn_solver_options* o);

/* ---- trajectories ---- */

typedef struct fdyn_trajectory fdyn_trajectory;

FDYN_API void fdyn_trajectory_destroy(fdyn_trajectory* t);
FDYN_API size_t fdyn_trajectory_size(const fdyn_trajectory* t);
/* mode: -1 for smooth runs, 0/1/2 for PWL region 1 / region 2 / sliding. */
FDYN_API fdyn_status fdyn_trajectory_point(const fdyn_trajectory* t, size_t i, double* time, double* x, double* y,
                                           int* mode);
FDYN_API size_t fdyn_trajectory_event_count(const fdyn_trajectory* t);
/* kind stays valid while the handle lives. */
FDYN_API fdyn_status fdyn_trajectory_event(const fdyn_trajectory* t, size_t i, double* time, double* x, double* y,
                                           const char** kind);

/* Forward run from (x, y) to o->t_max (o may be NULL). */
FDYN_API fdyn_status fdyn_integrate(const fdyn_model* m, double x, double y, const fdyn_solver_options* o,
                                    fdyn_trajectory** out);

typedef enum fdyn_separatrix {
  FDYN_SEP_UNSTABLE_X0 = 0,
  FDYN_SEP_STABLE_X0 = 1,
  FDYN_SEP_UNSTABLE_X1 = 2,
  FDYN_SEP_STABLE_X1 = 3
} fdyn_separatrix;

FDYN_API const char* fdyn_separatrix_string(fdyn_separatrix which);

/* Saddle branch up to the line x = xe. Smooth: shooting from the saddle
 * (stable branches in reversed time). PWL: the exact straight segment. */
FDYN_API fdyn_status fdyn_trace_separatrix(const fdyn_model* m, fdyn_separatrix which, const fdyn_solver_options* o,
                                           fdyn_trajectory** out);

/* h_u - h_s on x = xe; negative keeps the cycle, positive means collapse. */
FDYN_API fdyn_status fdyn_section_gap(const fdyn_model* m, const fdyn_solver_options* o, double* gap);

typedef struct fdyn_cycle_info {
  int found;
  double section_x, section_y;
  double period;
  double x_min, x_max, y_min, y_max;
  double residual;
  double multiplier;
} fdyn_cycle_info;

/* found = 0 when there is no cycle; *samples (optional) gets one period. */
FDYN_API fdyn_status fdyn_find_limit_cycle(const fdyn_model* m, const fdyn_solver_options* o, fdyn_cycle_info* info,
                                           fdyn_trajectory** samples);

/* ---- smooth bifurcation structure ---- */

typedef struct fdyn_heteroclinic_point {
  double F;
  double xe_h;        /* NaN when ok = 0 */
  double residual;
  double bracket_width;
  int iterations;
  int ok;
  fdyn_status failure; /* set when ok = 0 */
  char message[160];
} fdyn_heteroclinic_point;

FDYN_API fdyn_status fdyn_heteroclinic_curve(double x0, double x1, const double* F, size_t n,
                                             const fdyn_solver_options* o, fdyn_heteroclinic_point* out);

typedef enum fdyn_region {
  FDYN_REGION_STATIC = 0,
  FDYN_REGION_OSCILLATION = 1,
  FDYN_REGION_HETEROCLINIC = 2,
  FDYN_REGION_COLLAPSE = 3
} fdyn_region;

FDYN_API const char* fdyn_region_string(fdyn_region r);

typedef struct fdyn_region_cell {
  double xe, F;
  fdyn_region region;
  double margin;
  double xe_h; /* solved value for this F; NaN if the solve failed */
} fdyn_region_cell;

/* out holds nxe * nF cells, F-major. */
FDYN_API fdyn_status fdyn_region_grid(double x0, double x1, const double* xe, size_t nxe, const double* F, size_t nF,
                                      const fdyn_solver_options* o, fdyn_region_cell* out);

/* ---- piecewise-linear model ---- */

typedef struct fdyn_sliding_data {
  double lambda;
  double T1, T2, P_lambda;       /* relative to the fold height */
  double T1_abs, T2_abs, P_abs;  /* heights on x = xe */
  int attracting;
  int stable;
} fdyn_sliding_data;

FDYN_API fdyn_status fdyn_pwl_sliding_data(const fdyn_model* m, fdyn_sliding_data* out);
FDYN_API fdyn_status fdyn_pwl_first_integral(const fdyn_model* m, int side, double x, double y, double* out);

typedef enum fdyn_pwl_curve {
  FDYN_PWL_F_HET = 0,  /* F_het(xe) */
  FDYN_PWL_XE_HET = 1, /* xe_het(F) */
  FDYN_PWL_F_B1 = 2,   /* F_B1(xe) */
  FDYN_PWL_F_B2 = 3,   /* F_B2(xe) */
  FDYN_PWL_V1 = 4      /* V1(F) */
} fdyn_pwl_curve;

FDYN_API fdyn_status fdyn_pwl_curve_eval(double x0, double x1, fdyn_pwl_curve curve, double arg, double* out);

typedef enum fdyn_pwl_region {
  FDYN_PWL_OMEGA1 = 0,
  FDYN_PWL_OMEGA2,
  FDYN_PWL_OMEGA3,
  FDYN_PWL_OMEGA4,
  FDYN_PWL_OMEGA5,
  FDYN_PWL_OMEGA6,
  FDYN_PWL_OMEGA7
} fdyn_pwl_region;

FDYN_API const char* fdyn_pwl_region_string(fdyn_pwl_region r);
FDYN_API fdyn_status fdyn_pwl_classify(const fdyn_model* m, double tol, fdyn_pwl_region* region, double* margin);

typedef struct fdyn_resilience {
  double distance, xe_star, F_star;
} fdyn_resilience;

FDYN_API fdyn_status fdyn_pwl_resilience(const fdyn_model* m, fdyn_resilience* out);

typedef struct fdyn_habitat_effect {
  double xe_het, x_H, d_o;
  double dxe_het_dD, dxe_het_dD_numeric;
  double d_o_prime;
  int d_o_prime_sign;
} fdyn_habitat_effect;

FDYN_API fdyn_status fdyn_pwl_habitat_effect(const fdyn_original_params* p, double F, fdyn_habitat_effect* out);

/* ---- stochastic ensembles ---- */

typedef enum fdyn_noise_scaling {
  FDYN_NOISE_INCREMENT = 0,      /* x += f dt + sigma N(0, dt) */
  FDYN_NOISE_DRIFT_WEIGHTED = 1  /* x += (f + sigma N(0, dt)) dt */
} fdyn_noise_scaling;

typedef struct fdyn_noise_options {
  double dt, t_max;
  uint64_t seed;
  double y_extinct, x_extinct, blowup;
  double x_init, y_init;
  fdyn_noise_scaling scaling;
  unsigned threads;
} fdyn_noise_options;

FDYN_API void fdyn_noise_options_init(fdyn_noise_options* o);

typedef struct fdyn_realization {
  int survived;
  int has_extinction_time;
  double extinction_time;
  int blowup;
  int has_resource_dip;
  double resource_dip_time;
  double x_final, y_final;
} fdyn_realization;

FDYN_API fdyn_status fdyn_simulate_realization(const fdyn_model* m, double sigma, const fdyn_noise_options* o,
                                               fdyn_realization* out);
FDYN_API uint64_t fdyn_derive_seed(uint64_t base, uint64_t cell, uint64_t realization);

typedef struct fdyn_ensemble fdyn_ensemble;

typedef struct fdyn_ensemble_cell {
  double sigma, xe;
  double survival;
  size_t n;
  double mean_ext_time; /* NaN when no realization went extinct */
  double std_ext_time;
  size_t n_extinct, n_blowup, n_resource_dip;
  size_t cell_index;
} fdyn_ensemble_cell;

/* n realizations per (sigma, xe) cell; cells are sigma-major. */
FDYN_API fdyn_status fdyn_ensemble_run(double x0, double x1, double F, const double* sigma, size_t n_sigma,
                                       const double* xe, size_t n_xe, size_t n, const fdyn_noise_options* o,
                                       fdyn_ensemble** out);
FDYN_API void fdyn_ensemble_destroy(fdyn_ensemble* e);
FDYN_API size_t fdyn_ensemble_cell_count(const fdyn_ensemble* e);
FDYN_API fdyn_status fdyn_ensemble_get_cell(const fdyn_ensemble* e, size_t i, fdyn_ensemble_cell* out);
/* xe where survival first drops below level, scanning from the largest xe. */
FDYN_API fdyn_status fdyn_ensemble_threshold(const fdyn_ensemble* e, size_t i_sigma, double level, double* out);

#ifdef __cplusplus
}
#endif

#endif
