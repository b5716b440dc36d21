#include "doctest.h"

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "facildyn.h"

namespace {

struct Model {
  explicit Model(fdyn_model_kind kind, fdyn_params p) { REQUIRE(fdyn_model_create(kind, &p, &m) == FDYN_OK); }
  ~Model() { fdyn_model_destroy(m); }
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  fdyn_model* m = nullptr;
};

}  // namespace

TEST_CASE("status strings and validation split") {
  CHECK(std::string(fdyn_status_string(FDYN_OK)) == "ok");
  CHECK(std::string(fdyn_status_string(FDYN_ERR_TRANSCRITICAL)) == "transcritical");
  CHECK(fdyn_status_is_validation(FDYN_ERR_DOMAIN));
  CHECK(fdyn_status_is_validation(FDYN_ERR_DEGENERATE));
  CHECK_FALSE(fdyn_status_is_validation(FDYN_ERR_INCONCLUSIVE));
  CHECK(std::strlen(fdyn_version()) > 0);
}

TEST_CASE("bad arguments come back as codes with a message") {
  fdyn_params p{1, 3, 1, 1};
  fdyn_model* m = nullptr;
  CHECK(fdyn_model_create(FDYN_MODEL_SMOOTH, &p, &m) == FDYN_ERR_TRANSCRITICAL);
  CHECK(m == nullptr);
  CHECK(std::strlen(fdyn_last_error()) > 0);

  CHECK(fdyn_model_create(FDYN_MODEL_SMOOTH, nullptr, &m) == FDYN_ERR_INVALID_ARGUMENT);
  p = {1, 3, 3.5, 1};
  CHECK(fdyn_model_create(FDYN_MODEL_PWL, &p, &m) != FDYN_OK);

  double r = 0;
  CHECK(fdyn_hyperbolicity_ratio(1, 3, 4, &r) == FDYN_ERR_DOMAIN);
  CHECK(fdyn_params_from_json("{", nullptr) == FDYN_ERR_INVALID_ARGUMENT);
  fdyn_model_destroy(nullptr);
  fdyn_trajectory_destroy(nullptr);
  fdyn_ensemble_destroy(nullptr);
}

TEST_CASE("closed forms") {
  fdyn_loci l{};
  REQUIRE(fdyn_loci_compute(1, 3, 1, &l) == FDYN_OK);
  CHECK(l.x_c == 1.5);
  CHECK(l.x_H == 2.0);
  CHECK(l.R_c + l.R_o + l.R_s == doctest::Approx(1.0));
  CHECK(l.L1 == doctest::Approx(-2.0 / 27.0));
  CHECK(l.canard_slope == doctest::Approx(-1.0 / 12.0));
  CHECK_FALSE(l.has_D_SN);

  fdyn_original_params o{10, 0.25, 1, 0.5, 0.5, 0.1};
  fdyn_params s{};
  REQUIRE(fdyn_to_smooth_params(&o, &s) == FDYN_OK);
  CHECK(s.x0 == doctest::Approx(0.173445).epsilon(1e-5));
  CHECK(s.xe == doctest::Approx(0.4));
  REQUIRE(fdyn_loci_from_original(&o, &l) == FDYN_OK);
  CHECK(l.has_D_SN);

  fdyn_rescaled_params r{};
  o.delta = 0.5;
  REQUIRE(fdyn_rescale(&o, &r) == FDYN_OK);
  CHECK(r.B == 7.5);

  REQUIRE(fdyn_params_from_json(R"({"x0":1,"x1":3,"xe":2.5,"F":1})", &s) == FDYN_OK);
  CHECK(s.xe == 2.5);

  double v = 0;
  REQUIRE(fdyn_pwl_curve_eval(1, 3, FDYN_PWL_F_HET, 1.8, &v) == FDYN_OK);
  CHECK(v == doctest::Approx(5.0 / 3.0));
  REQUIRE(fdyn_pwl_curve_eval(1, 3, FDYN_PWL_XE_HET, 5.0 / 3.0, &v) == FDYN_OK);
  CHECK(v == doctest::Approx(1.8));
  REQUIRE(fdyn_pwl_curve_eval(1, 3, FDYN_PWL_V1, 1, &v) == FDYN_OK);
  CHECK(v == doctest::Approx(-4.0 / 3.0));
  CHECK(fdyn_pwl_curve_eval(1, 3, FDYN_PWL_F_HET, 1.5, &v) == FDYN_ERR_DOMAIN);
}

TEST_CASE("smooth model handle") {
  Model h(FDYN_MODEL_SMOOTH, {1, 3, 2, 1});
  double f[2];
  REQUIRE(fdyn_model_field(h.m, 1, 1, f) == FDYN_OK);
  CHECK(f[0] == doctest::Approx(-1.0));
  CHECK(f[1] == doctest::Approx(-1.0));

  double J[4];
  REQUIRE(fdyn_model_jacobian(h.m, 0, 0, J) == FDYN_OK);
  CHECK(J[0] == -1.0);
  CHECK(J[3] == doctest::Approx(-2.0));

  double theta = 0;
  REQUIRE(fdyn_rotation_determinant(h.m, 2, 2, &theta) == FDYN_OK);
  CHECK(theta == doctest::Approx(20.0 / 3.0));

  double yn = 0;
  REQUIRE(fdyn_x_nullcline(h.m, 2, &yn) == FDYN_OK);
  CHECK(yn == doctest::Approx(1.0 / 3.0));

  fdyn_equilibrium eq[4];
  REQUIRE(fdyn_equilibria(h.m, eq) == FDYN_OK);
  CHECK(std::string(eq[0].name) == "origin");
  CHECK(eq[1].kind == FDYN_EQ_SADDLE);
  CHECK(eq[3].kind == FDYN_EQ_CENTER);
  CHECK(std::string(fdyn_equilibrium_kind_string(eq[0].kind)) == "stable-node");

  REQUIRE(fdyn_chart_jacobian(h.m, FDYN_CHART_U1, 0, 0, J) == FDYN_OK);
  CHECK(J[0] == doctest::Approx(1.0 / 3.0));
  CHECK(J[3] == doctest::Approx(1.0 / 3.0));
  REQUIRE(fdyn_chart_jacobian(h.m, FDYN_CHART_U2, 0, 0, J) == FDYN_OK);
  for (double e : J) CHECK(e == 0.0);

  fdyn_model_kind k;
  REQUIRE(fdyn_model_kind_of(h.m, &k) == FDYN_OK);
  CHECK(k == FDYN_MODEL_SMOOTH);
  fdyn_params back{};
  REQUIRE(fdyn_model_params(h.m, &back) == FDYN_OK);
  CHECK(back.xe == 2.0);
}

TEST_CASE("trajectory handles") {
  Model h(FDYN_MODEL_SMOOTH, {1, 3, 2.5, 1});
  fdyn_solver_options o;
  fdyn_solver_options_init(&o);
  o.t_max = 400;
  fdyn_trajectory* t = nullptr;
  REQUIRE(fdyn_integrate(h.m, 1.5, 0.3, &o, &t) == FDYN_OK);
  const std::size_t n = fdyn_trajectory_size(t);
  REQUIRE(n > 10);
  double time, x, y;
  int mode;
  REQUIRE(fdyn_trajectory_point(t, n - 1, &time, &x, &y, &mode) == FDYN_OK);
  CHECK(mode == -1);
  CHECK(x == doctest::Approx(2.5).epsilon(1e-6));
  CHECK(y == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(fdyn_trajectory_point(t, n, &time, &x, &y, &mode) == FDYN_ERR_INVALID_ARGUMENT);
  fdyn_trajectory_destroy(t);
}

TEST_CASE("cycles, gaps and the heteroclinic curve") {
  Model osc(FDYN_MODEL_SMOOTH, {1, 3, 1.95, 1});
  double gap = 0;
  REQUIRE(fdyn_section_gap(osc.m, nullptr, &gap) == FDYN_OK);
  CHECK(gap < 0.0);

  fdyn_cycle_info info{};
  fdyn_trajectory* samples = nullptr;
  REQUIRE(fdyn_find_limit_cycle(osc.m, nullptr, &info, &samples) == FDYN_OK);
  CHECK(info.found);
  CHECK(info.x_min > 1.0);
  CHECK(info.x_max < 3.0);
  CHECK(fdyn_trajectory_size(samples) > 10);
  fdyn_trajectory_destroy(samples);

  Model stat(FDYN_MODEL_SMOOTH, {1, 3, 2.5, 1});
  REQUIRE(fdyn_find_limit_cycle(stat.m, nullptr, &info, nullptr) == FDYN_OK);
  CHECK_FALSE(info.found);

  fdyn_trajectory* sep = nullptr;
  REQUIRE(fdyn_trace_separatrix(osc.m, FDYN_SEP_STABLE_X0, nullptr, &sep) == FDYN_OK);
  CHECK(fdyn_trajectory_size(sep) > 2);
  fdyn_trajectory_destroy(sep);

  const double F[] = {0.5, 1.0, 2.0};
  fdyn_heteroclinic_point pts[3];
  fdyn_solver_options o;
  fdyn_solver_options_init(&o);
  o.threads = 1;
  REQUIRE(fdyn_heteroclinic_curve(1, 3, F, 3, &o, pts) == FDYN_OK);
  for (const auto& p : pts) CHECK(p.ok);
  CHECK(pts[0].xe_h > pts[1].xe_h);
  CHECK(pts[1].xe_h > pts[2].xe_h);
  CHECK(pts[1].xe_h == doctest::Approx(1.90127).epsilon(1e-5));

  const double xe[] = {1.6, 1.98, 2.5};
  const double FF[] = {1.0};
  fdyn_region_cell cells[3];
  REQUIRE(fdyn_region_grid(1, 3, xe, 3, FF, 1, &o, cells) == FDYN_OK);
  CHECK(cells[0].region == FDYN_REGION_COLLAPSE);
  CHECK(cells[1].region == FDYN_REGION_OSCILLATION);
  CHECK(cells[2].region == FDYN_REGION_STATIC);
  CHECK(cells[2].xe_h == cells[0].xe_h);
}

TEST_CASE("PWL handle") {
  Model h(FDYN_MODEL_PWL, {1, 3, 1.8, 2});
  fdyn_pwl_region r;
  double margin;
  REQUIRE(fdyn_pwl_classify(h.m, 1e-9, &r, &margin) == FDYN_OK);
  CHECK(r == FDYN_PWL_OMEGA4);
  CHECK(std::string(fdyn_pwl_region_string(r)) == "Omega4");

  fdyn_sliding_data sd{};
  REQUIRE(fdyn_pwl_sliding_data(h.m, &sd) == FDYN_OK);
  CHECK(sd.T1 == doctest::Approx(-2.0 / 15.0));

  double J[4];
  REQUIRE(fdyn_model_jacobian(h.m, 1.2, 0.5, J) == FDYN_OK);
  CHECK(J[0] == doctest::Approx(2.0 / 3.0));
  CHECK(J[1] == doctest::Approx(-1.0));
  CHECK(J[2] == 0.0);
  CHECK(J[3] == doctest::Approx(2 * (1 - 1.8)));

  double yn = 0;
  REQUIRE(fdyn_x_nullcline(h.m, 1.6, &yn) == FDYN_OK);
  CHECK(yn == doctest::Approx(2.0 * 0.6 / 3.0));

  fdyn_cycle_info info{};
  REQUIRE(fdyn_find_limit_cycle(h.m, nullptr, &info, nullptr) == FDYN_OK);
  CHECK(info.found);

  fdyn_resilience res{};
  REQUIRE(fdyn_pwl_resilience(h.m, &res) == FDYN_OK);
  CHECK(res.distance > 0.0);

  fdyn_trajectory* seg = nullptr;
  REQUIRE(fdyn_trace_separatrix(h.m, FDYN_SEP_STABLE_X0, nullptr, &seg) == FDYN_OK);
  double t, x, y;
  int mode;
  REQUIRE(fdyn_trajectory_point(seg, fdyn_trajectory_size(seg) - 1, &t, &x, &y, &mode) == FDYN_OK);
  CHECK(x == doctest::Approx(1.8));
  fdyn_trajectory_destroy(seg);

  fdyn_trajectory* run = nullptr;
  fdyn_solver_options o;
  fdyn_solver_options_init(&o);
  o.t_max = 50;
  REQUIRE(fdyn_integrate(h.m, 1.5, 0.3, &o, &run) == FDYN_OK);
  REQUIRE(fdyn_trajectory_point(run, 0, &t, &x, &y, &mode) == FDYN_OK);
  CHECK(mode == 0);
  CHECK(fdyn_trajectory_event_count(run) > 0);
  const char* kind = nullptr;
  REQUIRE(fdyn_trajectory_event(run, 0, &t, &x, &y, &kind) == FDYN_OK);
  CHECK(std::string(kind).rfind("cross", 0) == 0);
  fdyn_trajectory_destroy(run);

  fdyn_equilibrium eq[4];
  CHECK(fdyn_equilibria(h.m, eq) == FDYN_ERR_INVALID_ARGUMENT);

  fdyn_original_params o2{10, 0.1, 1, 0.5, 0.5, 0.1};
  fdyn_habitat_effect he{};
  REQUIRE(fdyn_pwl_habitat_effect(&o2, 1, &he) == FDYN_OK);
  CHECK(he.d_o_prime_sign == -1);
}

TEST_CASE("stochastic handles") {
  fdyn_noise_options o;
  fdyn_noise_options_init(&o);
  CHECK(o.dt == 0.01);
  CHECK(o.t_max == 300.0);
  o.threads = 1;

  Model h(FDYN_MODEL_SMOOTH, {1, 3, 1.98, 1});
  fdyn_realization r{};
  REQUIRE(fdyn_simulate_realization(h.m, 0.0, &o, &r) == FDYN_OK);
  CHECK(r.survived);

  const double sigma[] = {0.0, 1.0};
  const double xe[] = {1.7, 1.98};
  fdyn_ensemble* e = nullptr;
  o.t_max = 100;
  REQUIRE(fdyn_ensemble_run(1, 3, 1, sigma, 2, xe, 2, 5, &o, &e) == FDYN_OK);
  REQUIRE(fdyn_ensemble_cell_count(e) == 4);
  fdyn_ensemble_cell c{};
  REQUIRE(fdyn_ensemble_get_cell(e, 1, &c) == FDYN_OK);
  CHECK(c.sigma == 0.0);
  CHECK(c.xe == 1.98);
  CHECK(c.survival == 1.0);
  CHECK(std::isnan(c.mean_ext_time));
  double thr = 0;
  REQUIRE(fdyn_ensemble_threshold(e, 0, 0.5, &thr) == FDYN_OK);
  CHECK(thr > 1.7);
  CHECK(fdyn_ensemble_get_cell(e, 4, &c) == FDYN_ERR_INVALID_ARGUMENT);
  fdyn_ensemble_destroy(e);

  CHECK(fdyn_ensemble_run(1, 3, 1, sigma, 2, xe, 2, 0, &o, &e) == FDYN_ERR_INVALID_ARGUMENT);
  CHECK(fdyn_derive_seed(1, 2, 3) == fdyn_derive_seed(1, 2, 3));
}
