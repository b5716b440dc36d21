// facildyn command-line front end. Every subcommand resolves flags on top of an
// optional JSON config, hashes the resolved config, and writes CSV/JSON under --out.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "facildyn.h"
#include "json.hpp"
#include "support.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;
using namespace fdcli;

namespace {

const char* const kSmoothKeys[] = {"x0", "x1", "xe", "F"};
const char* const kOriginalKeys[] = {"alpha", "D", "eps", "epsS", "mu", "delta"};

// Flags are collected here and layered over the config file after parsing.
class Overlay {
 public:
  void number(CLI::App* app, const std::string& flag, json::json_pointer at, const std::string& help) {
    auto& slot = numbers_.emplace_back();
    auto* opt = app->add_option(flag, slot, help);
    setters_.push_back([opt, &slot, at](json& j) {
      if (opt->count()) j[at] = slot;
    });
  }

  void text(CLI::App* app, const std::string& flag, json::json_pointer at, const std::string& help,
            std::function<json(const std::string&)> convert = nullptr) {
    auto& slot = texts_.emplace_back();
    auto* opt = app->add_option(flag, slot, help);
    setters_.push_back([opt, &slot, at, convert](json& j) {
      if (opt->count()) j[at] = convert ? convert(slot) : json(slot);
    });
  }

  void toggle(CLI::App* app, const std::string& flag, json::json_pointer at, const std::string& help) {
    auto* opt = app->add_flag(flag, help);
    setters_.push_back([opt, at](json& j) {
      if (opt->count()) j[at] = true;
    });
  }

  void apply(json& j) const {
    for (const auto& s : setters_) s(j);
  }

 private:
  std::deque<double> numbers_;
  std::deque<std::string> texts_;
  std::vector<std::function<void(json&)>> setters_;
};

json grid_value(const std::string& spec, const std::string& what) { return json(parse_grid(spec, what)); }

std::vector<double> grid_of(const json& j, const char* section, const char* key) {
  if (!j.contains(section) || !j[section].contains(key)) return {};
  const json& g = j[section][key];
  const std::string what = std::string(section) + "." + key;
  if (g.is_string()) return parse_grid(g.get<std::string>(), what);
  if (g.is_number()) return {g.get<double>()};
  if (!g.is_array()) throw UsageError(what + " must be a grid string, a number or an array");
  std::vector<double> out;
  for (const auto& v : g) {
    if (!v.is_number()) throw UsageError(what + " must contain numbers");
    out.push_back(v.get<double>());
  }
  if (out.empty()) throw UsageError(what + " is empty");
  return out;
}

double number_or(const json& j, const char* section, const char* key, double fallback) {
  if (!j.contains(section) || !j[section].contains(key)) return fallback;
  const json& v = j[section][key];
  if (!v.is_number()) throw UsageError(std::string(section) + "." + key + " must be a number");
  return v.get<double>();
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read config file '" + path + "'");
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  // A manifest from an earlier run embeds its resolved config.
  if (j.contains("resolved_config")) j = j["resolved_config"];
  return j;
}

struct Resolved {
  json config;
  std::string hash;
  fs::path out;
};

Resolved resolve(const std::string& command, const std::string& config_path, const Overlay& ov,
                 const json& defaults) {
  json j = load_config(config_path);
  json merged = defaults;
  merged.merge_patch(j);
  ov.apply(merged);
  merged["command"] = command;
  Resolved r;
  r.out = merged.value("out", std::string("."));
  merged.erase("out");
  r.config = merged;
  r.hash = hex64(fnv1a64(merged.dump()));
  return r;
}

void add_param_flags(CLI::App* app, Overlay& ov, bool original) {
  ov.number(app, "--x0", "/params/x0"_json_pointer, "lower vegetation equilibrium");
  ov.number(app, "--x1", "/params/x1"_json_pointer, "upper vegetation equilibrium");
  ov.number(app, "--xe", "/params/xe"_json_pointer, "coexistence abscissa");
  ov.number(app, "--F", "/params/F"_json_pointer, "consumer rate ratio");
  if (!original) return;
  ov.number(app, "--alpha", "/params/alpha"_json_pointer, "facilitated growth rate");
  ov.number(app, "--D", "/params/D"_json_pointer, "habitat loss fraction");
  ov.number(app, "--eps", "/params/eps"_json_pointer, "resource mortality");
  ov.number(app, "--epsS", "/params/epsS"_json_pointer, "consumption rate");
  ov.number(app, "--mu", "/params/mu"_json_pointer, "conversion efficiency");
  ov.number(app, "--delta", "/params/delta"_json_pointer, "consumer mortality");
}

void add_solver_flags(CLI::App* app, Overlay& ov) {
  ov.number(app, "--rel-tol", "/solver/rel_tol"_json_pointer, "integrator relative tolerance");
  ov.number(app, "--abs-tol", "/solver/abs_tol"_json_pointer, "integrator absolute tolerance");
  ov.number(app, "--xe-tol", "/solver/xe_tol"_json_pointer, "bisection tolerance in xe");
  ov.number(app, "--gap-tol", "/solver/gap_tol"_json_pointer, "accepted section gap at a root");
  ov.number(app, "--t-max", "/solver/t_max"_json_pointer, "trajectory horizon");
}

struct ParamSet {
  fdyn_params smooth{};
  bool from_original = false;
  fdyn_original_params original{};
};

ParamSet params_of(const json& cfg, std::initializer_list<const char*> required) {
  const json p = cfg.value("params", json::object());
  if (!p.is_object()) throw UsageError("params must be an object");
  bool any_original = false;
  for (const char* k : kOriginalKeys) any_original |= p.contains(k);
  bool any_smooth = false;
  for (const char* k : kSmoothKeys) any_smooth |= p.contains(k);
  auto get = [&](const char* k) {
    if (!p.contains(k)) throw UsageError(std::string("missing required parameter --") + k);
    if (!p[k].is_number()) throw UsageError(std::string("parameter ") + k + " must be a number");
    return p[k].get<double>();
  };
  ParamSet s;
  if (any_original) {
    if (any_smooth) throw UsageError("give either x0/x1/xe/F or the original parameters, not both");
    s.from_original = true;
    s.original = {get("alpha"), get("D"), get("eps"), get("epsS"), get("mu"), get("delta")};
    check(fdyn_to_smooth_params(&s.original, &s.smooth));
    return s;
  }
  for (const char* k : required) (void)get(k);
  s.smooth.x0 = p.value("x0", 0.0);
  s.smooth.x1 = p.value("x1", 0.0);
  s.smooth.xe = p.value("xe", 0.0);
  s.smooth.F = p.value("F", 0.0);
  return s;
}

fdyn_solver_options solver_of(const json& cfg) {
  fdyn_solver_options o;
  fdyn_solver_options_init(&o);
  o.rel_tol = number_or(cfg, "solver", "rel_tol", o.rel_tol);
  o.abs_tol = number_or(cfg, "solver", "abs_tol", o.abs_tol);
  o.xe_tol = number_or(cfg, "solver", "xe_tol", o.xe_tol);
  o.gap_tol = number_or(cfg, "solver", "gap_tol", o.gap_tol);
  o.t_max = number_or(cfg, "solver", "t_max", o.t_max);
  return o;
}

fdyn_model_kind model_kind_of(const json& cfg) {
  const std::string m = cfg.value("model", std::string("smooth"));
  if (m == "smooth") return FDYN_MODEL_SMOOTH;
  if (m == "pwl") return FDYN_MODEL_PWL;
  throw UsageError("model must be 'smooth' or 'pwl', got '" + m + "'");
}

using ModelPtr = std::unique_ptr<fdyn_model, decltype(&fdyn_model_destroy)>;
using TrajPtr = std::unique_ptr<fdyn_trajectory, decltype(&fdyn_trajectory_destroy)>;

ModelPtr make_model(fdyn_model_kind kind, const fdyn_params& p) {
  fdyn_model* m = nullptr;
  check(fdyn_model_create(kind, &p, &m));
  return {m, &fdyn_model_destroy};
}

json params_json(const fdyn_params& p) { return {{"x0", p.x0}, {"x1", p.x1}, {"xe", p.xe}, {"F", p.F}}; }

class OutputDir {
 public:
  OutputDir(fs::path dir, std::string hash) : dir_(std::move(dir)), hash_(std::move(hash)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ApiError(FDYN_ERR_IO, "cannot create output directory " + dir_.string());
  }

  void csv(const std::string& name, const CsvTable& t) {
    write_atomic(dir_ / name, t.render(hash_));
    files_.push_back(name);
  }

  void json_file(const std::string& name, const json& j) {
    write_atomic(dir_ / name, j.dump(2) + "\n");
    files_.push_back(name);
  }

  [[nodiscard]] const std::vector<std::string>& files() const noexcept { return files_; }

 private:
  fs::path dir_;
  std::string hash_;
  std::vector<std::string> files_;
};

// ---- equilibria ----

int run_equilibria(const Resolved& r, bool write_file) {
  const auto ps = params_of(r.config, {"x0", "x1", "xe", "F"});
  auto model = make_model(FDYN_MODEL_SMOOTH, ps.smooth);
  fdyn_equilibrium eq[4];
  check(fdyn_equilibria(model.get(), eq));
  fdyn_loci L;
  check(fdyn_loci_compute(ps.smooth.x0, ps.smooth.x1, ps.smooth.F, &L));
  double f_fn = 0.0;
  check(fdyn_focus_node_boundary(ps.smooth.x0, ps.smooth.x1, ps.smooth.xe, &f_fn));

  json report;
  report["command"] = "equilibria";
  report["config_hash"] = r.hash;
  report["params"] = params_json(ps.smooth);
  if (ps.from_original) {
    const auto& o = ps.original;
    report["original"] = {{"alpha", o.alpha}, {"D", o.D}, {"eps", o.eps}, {"epsS", o.epsS}, {"mu", o.mu},
                          {"delta", o.delta}};
    fdyn_rescaled_params rs;
    check(fdyn_rescale(&o, &rs));
    report["rescaled"] = {{"A", rs.A}, {"B", rs.B}, {"F", rs.F}, {"G", rs.G}};
  }
  report["loci"] = {{"x_c", L.x_c}, {"x_H", L.x_H}, {"x_geo", L.x_geo}, {"F_FN", f_fn},
                    {"L1", L.L1}, {"T0", L.T0}, {"R_c", L.R_c}, {"R_o", L.R_o}, {"R_s", L.R_s}};
  json list = json::array();
  for (const auto& e : eq) {
    json item{{"name", e.name},
              {"x", e.x},
              {"y", e.y},
              {"kind", fdyn_equilibrium_kind_string(e.kind)},
              {"trace", e.trace},
              {"det", e.det},
              {"discriminant", e.discriminant},
              {"eigenvalues", json::array({json{{"re", e.eig_re[0]}, {"im", e.eig_im[0]}},
                                           json{{"re", e.eig_re[1]}, {"im", e.eig_im[1]}}})},
              {"rotation", e.rotation},
              {"degenerate_configuration", static_cast<bool>(e.degenerate_configuration)}};
    if (e.has_eigenvectors) {
      item["eigenvectors"] = {{e.eigenvectors[0][0], e.eigenvectors[0][1]},
                              {e.eigenvectors[1][0], e.eigenvectors[1][1]}};
    }
    list.push_back(item);
  }
  report["equilibria"] = list;
  if (write_file) OutputDir(r.out, r.hash).json_file("equilibria.json", report);
  std::cout << report.dump(2) << "\n";
  return 0;
}

// ---- portrait ----

int run_portrait(const Resolved& r) {
  const auto& cfg = r.config;
  const auto kind = model_kind_of(cfg);
  const auto ps = params_of(cfg, {"x0", "x1", "xe", "F"});
  const auto& p = ps.smooth;
  auto model = make_model(kind, p);
  const auto opt = solver_of(cfg);
  const bool pwl = kind == FDYN_MODEL_PWL;
  OutputDir out(r.out, r.hash);
  json summary{{"command", "portrait"}, {"config_hash", r.hash}, {"model", pwl ? "pwl" : "smooth"},
               {"params", params_json(p)}};

  for (int w = FDYN_SEP_UNSTABLE_X0; w <= FDYN_SEP_STABLE_X1; ++w) {
    const auto which = static_cast<fdyn_separatrix>(w);
    fdyn_trajectory* t = nullptr;
    check(fdyn_trace_separatrix(model.get(), which, &opt, &t));
    TrajPtr guard(t, &fdyn_trajectory_destroy);
    out.csv(std::string("separatrix_") + fdyn_separatrix_string(which) + ".csv", trajectory_table(t, pwl));
  }

  // Plot window: the vegetation interval and a bit above the tallest relevant height.
  const double x_lo = pwl ? p.x0 : 0.0;
  const double x_hi = pwl ? p.x1 : 1.1 * p.x1;
  const double peak = (p.x1 - p.x0) * (p.x1 - p.x0) / (4.0 * p.x0 * p.x1);
  const double y_hi = 1.5 * std::max({peak, (p.x1 - p.xe) * (p.xe - p.x0) / (p.x0 * p.x1), 0.1});
  const int nfield = static_cast<int>(number_or(cfg, "portrait", "field_n", 21));
  if (nfield < 2 || nfield > 2000) throw UsageError("portrait.field_n must be in [2, 2000]");

  CsvTable nc({"curve", "x", "y"});
  const int nn = 201;
  for (int i = 0; i < nn; ++i) {
    const double x = x_lo + (x_hi - x_lo) * i / (nn - 1);
    double y = 0.0;
    if (x > 0.0 && fdyn_x_nullcline(model.get(), x, &y) == FDYN_OK && y >= 0.0) {
      nc.add({"x-nullcline", fmt(x), fmt(y)});
    }
  }
  // The PWL consumer has no vertical nullcline; its switching line sits at the same abscissa.
  for (int i = 0; i < nn; ++i) nc.add({pwl ? "sigma" : "y-nullcline", fmt(p.xe), fmt(y_hi * i / (nn - 1))});
  out.csv("nullclines.csv", nc);

  CsvTable field({"x", "y", "dx", "dy"});
  for (int i = 0; i < nfield; ++i) {
    for (int k = 0; k < nfield; ++k) {
      const double x = x_lo + (x_hi - x_lo) * i / (nfield - 1);
      const double y = y_hi * k / (nfield - 1);
      double v[2];
      check(fdyn_model_field(model.get(), x, y, v));
      field.add({fmt(x), fmt(y), fmt(v[0]), fmt(v[1])});
    }
  }
  out.csv("field.csv", field);

  fdyn_cycle_info info{};
  fdyn_trajectory* samples = nullptr;
  const fdyn_status cs = fdyn_find_limit_cycle(model.get(), &opt, &info, &samples);
  TrajPtr cycle(samples, &fdyn_trajectory_destroy);
  if (cs == FDYN_OK && info.found) {
    out.csv("limit_cycle.csv", trajectory_table(samples, false));
    summary["limit_cycle"] = {{"status", "found"}, {"period", info.period}, {"section_y", info.section_y},
                              {"x_min", info.x_min}, {"x_max", info.x_max}, {"y_min", info.y_min},
                              {"y_max", info.y_max}, {"multiplier", info.multiplier}};
  } else if (cs == FDYN_OK) {
    summary["limit_cycle"] = {{"status", "none"}};
  } else if (fdyn_status_is_validation(cs)) {
    throw ApiError(cs, fdyn_last_error());
  } else {
    summary["limit_cycle"] = {{"status", fdyn_status_string(cs)}, {"message", fdyn_last_error()}};
  }

  if (pwl) {
    fdyn_sliding_data sd;
    const fdyn_status ss = fdyn_pwl_sliding_data(model.get(), &sd);
    if (ss == FDYN_OK) {
      CsvTable t({"lambda", "T1", "T2", "P_lambda", "T1_abs", "T2_abs", "P_abs", "attracting"});
      t.add({fmt(sd.lambda), fmt(sd.T1), fmt(sd.T2), fmt(sd.P_lambda), fmt(sd.T1_abs), fmt(sd.T2_abs),
             fmt(sd.P_abs), sd.attracting ? "1" : "0"});
      out.csv("sliding_segment.csv", t);
    } else if (ss == FDYN_ERR_DEGENERATE) {
      summary["sliding_segment"] = "none (tangencies coincide)";
    } else {
      throw ApiError(ss, fdyn_last_error());
    }
    fdyn_pwl_region reg;
    double margin = 0.0;
    check(fdyn_pwl_classify(model.get(), 1e-9, &reg, &margin));
    summary["region"] = fdyn_pwl_region_string(reg);
  }

  if (cfg.contains("portrait") && cfg["portrait"].contains("chart")) {
    if (pwl) throw UsageError("--chart applies to the smooth model only");
    const std::string name = cfg["portrait"]["chart"].get<std::string>();
    fdyn_chart chart;
    if (name == "U1") chart = FDYN_CHART_U1;
    else if (name == "U2") chart = FDYN_CHART_U2;
    else if (name == "U3") chart = FDYN_CHART_U3;
    else throw UsageError("--chart must be U1, U2 or U3");
    const double u_hi = chart == FDYN_CHART_U3 ? x_hi : 3.0;
    const double v_hi = chart == FDYN_CHART_U3 ? y_hi : 1.0;
    CsvTable t({"u", "v", "du", "dv"});
    for (int i = 0; i < nfield; ++i) {
      for (int k = 0; k < nfield; ++k) {
        const double u = u_hi * i / (nfield - 1), v = v_hi * k / (nfield - 1);
        double f[2];
        check(fdyn_chart_field(model.get(), chart, u, v, f));
        t.add({fmt(u), fmt(v), fmt(f[0]), fmt(f[1])});
      }
    }
    out.csv("chart_" + name + ".csv", t);
  }

  summary["files"] = out.files();
  out.json_file("portrait.json", summary);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

// ---- heteroclinic ----

int run_heteroclinic(const Resolved& r) {
  const auto& cfg = r.config;
  const auto kind = model_kind_of(cfg);
  const auto ps = params_of(cfg, {"x0", "x1"});
  const double x0 = ps.smooth.x0, x1 = ps.smooth.x1;
  fdyn_loci L;
  check(fdyn_loci_compute(x0, x1, 1.0, &L));
  const auto F_grid = grid_of(cfg, "grids", "F");
  const auto xe_grid = grid_of(cfg, "grids", "xe");
  const bool compare = cfg.contains("heteroclinic") && cfg["heteroclinic"].value("compare", false);
  const auto opt = solver_of(cfg);
  OutputDir out(r.out, r.hash);
  json summary{{"command", "heteroclinic"}, {"config_hash", r.hash}, {"x0", x0}, {"x1", x1}};

  auto pwl_eval = [&](fdyn_pwl_curve c, double arg) {
    double v = 0.0;
    check(fdyn_pwl_curve_eval(x0, x1, c, arg, &v));
    return v;
  };
  auto smooth_solve = [&](std::vector<fdyn_heteroclinic_point>& pts) {
    pts.resize(F_grid.size());
    check(fdyn_heteroclinic_curve(x0, x1, F_grid.data(), F_grid.size(), &opt, pts.data()));
    json failures = json::array();
    bool decreasing = true, confined = true;
    double prev = INFINITY;
    for (const auto& q : pts) {
      if (!q.ok) {
        failures.push_back({{"F", q.F}, {"status", fdyn_status_string(q.failure)}, {"message", q.message}});
        continue;
      }
      decreasing &= q.xe_h < prev;
      confined &= q.xe_h >= L.x_c && q.xe_h < L.x_H;
      prev = q.xe_h;
    }
    summary["failures"] = failures;
    summary["strictly_decreasing"] = decreasing;
    summary["confined"] = confined;
    if (!pts.empty() && failures.size() == pts.size()) {
      throw ApiError(pts.front().failure, "every grid point failed; first: " + std::string(pts.front().message));
    }
  };

  if (compare) {
    if (F_grid.empty()) throw UsageError("--compare needs --F-grid");
    std::vector<fdyn_heteroclinic_point> pts;
    smooth_solve(pts);
    CsvTable t({"F", "xe_h_smooth", "xe_het_pwl", "canard_tangent"});
    for (std::size_t i = 0; i < F_grid.size(); ++i) {
      const double F = F_grid[i];
      t.add({fmt(F), fmt(pts[i].xe_h), fmt(pwl_eval(FDYN_PWL_XE_HET, F)), fmt(L.x_H + L.canard_slope * F)});
    }
    out.csv("heteroclinic_compare.csv", t);
  } else if (kind == FDYN_MODEL_SMOOTH) {
    if (F_grid.empty()) throw UsageError("the smooth heteroclinic curve needs --F-grid");
    std::vector<fdyn_heteroclinic_point> pts;
    smooth_solve(pts);
    CsvTable t({"F", "xe_h", "gap_residual", "iterations"});
    for (const auto& q : pts) t.add({fmt(q.F), fmt(q.xe_h), fmt(q.residual), std::to_string(q.iterations)});
    out.csv("heteroclinic.csv", t);
  } else {
    if (F_grid.empty() == xe_grid.empty()) throw UsageError("the PWL curve needs exactly one of --F-grid, --xe-grid");
    if (!F_grid.empty()) {
      CsvTable t({"F", "xe_het"});
      for (double F : F_grid) t.add({fmt(F), fmt(pwl_eval(FDYN_PWL_XE_HET, F))});
      out.csv("heteroclinic.csv", t);
    } else {
      CsvTable t({"xe", "F_het"});
      for (double xe : xe_grid) t.add({fmt(xe), fmt(pwl_eval(FDYN_PWL_F_HET, xe))});
      out.csv("heteroclinic.csv", t);
    }
  }
  summary["files"] = out.files();
  out.json_file("heteroclinic.json", summary);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

// ---- regions ----

int run_regions(const Resolved& r) {
  const auto& cfg = r.config;
  const auto kind = model_kind_of(cfg);
  const auto ps = params_of(cfg, {"x0", "x1"});
  const double x0 = ps.smooth.x0, x1 = ps.smooth.x1;
  const auto F_grid = grid_of(cfg, "grids", "F");
  const auto xe_grid = grid_of(cfg, "grids", "xe");
  if (F_grid.empty() || xe_grid.empty()) throw UsageError("regions needs non-empty --xe-grid and --F-grid");
  fdyn_loci L;
  check(fdyn_loci_compute(x0, x1, 1.0, &L));
  OutputDir out(r.out, r.hash);
  CsvTable t({"xe", "F", "label", "margin"});
  std::map<std::string, int> counts;
  if (kind == FDYN_MODEL_SMOOTH) {
    const auto opt = solver_of(cfg);
    std::vector<fdyn_region_cell> cells(xe_grid.size() * F_grid.size());
    check(fdyn_region_grid(x0, x1, xe_grid.data(), xe_grid.size(), F_grid.data(), F_grid.size(), &opt, cells.data()));
    for (const auto& c : cells) {
      const std::string label = fdyn_region_string(c.region);
      ++counts[label];
      t.add({fmt(c.xe), fmt(c.F), label, fmt(c.margin)});
    }
  } else {
    for (double F : F_grid) {
      for (double xe : xe_grid) {
        const fdyn_params p{x0, x1, xe, F};
        auto model = make_model(FDYN_MODEL_PWL, p);
        fdyn_pwl_region reg;
        double margin = 0.0;
        check(fdyn_pwl_classify(model.get(), 1e-9, &reg, &margin));
        const std::string label = fdyn_pwl_region_string(reg);
        ++counts[label];
        t.add({fmt(xe), fmt(F), label, fmt(margin)});
      }
    }
  }
  out.csv("regions.csv", t);
  json summary{{"command", "regions"},
               {"config_hash", r.hash},
               {"model", kind == FDYN_MODEL_PWL ? "pwl" : "smooth"},
               {"x0", x0},
               {"x1", x1},
               {"R_c", L.R_c},
               {"R_o", L.R_o},
               {"R_s", L.R_s},
               {"counts", counts}};
  summary["files"] = out.files();
  out.json_file("regions.json", summary);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

// ---- stochastic ----

int run_stochastic(const Resolved& r) {
  const auto& cfg = r.config;
  const auto ps = params_of(cfg, {"x0", "x1"});
  const double x0 = ps.smooth.x0, x1 = ps.smooth.x1;
  if (!cfg.contains("noise")) throw UsageError("stochastic needs a noise block (--sigma or config 'noise')");
  const auto F_list = grid_of(cfg, "noise", "F");
  const auto sigma = grid_of(cfg, "noise", "sigma");
  const auto xe_grid = grid_of(cfg, "grids", "xe");
  if (F_list.empty()) throw UsageError("stochastic needs --F");
  if (sigma.empty()) throw UsageError("stochastic needs --sigma");
  if (xe_grid.empty()) throw UsageError("stochastic needs --xe-grid");
  const double n_real = number_or(cfg, "noise", "n", 90);
  if (!(n_real >= 1.0) || n_real != std::floor(n_real)) throw UsageError("--n must be a positive integer");
  const auto n = static_cast<std::size_t>(n_real);

  fdyn_noise_options o;
  fdyn_noise_options_init(&o);
  o.dt = number_or(cfg, "noise", "dt", o.dt);
  o.t_max = number_or(cfg, "noise", "t_max", o.t_max);
  o.y_extinct = number_or(cfg, "noise", "y_extinct", o.y_extinct);
  o.x_extinct = number_or(cfg, "noise", "x_extinct", o.x_extinct);
  o.blowup = number_or(cfg, "noise", "blowup", o.blowup);
  o.x_init = number_or(cfg, "noise", "x_init", o.x_init);
  o.y_init = number_or(cfg, "noise", "y_init", o.y_init);
  const double seed = number_or(cfg, "noise", "seed", static_cast<double>(o.seed));
  if (!(seed >= 0.0) || seed != std::floor(seed) || seed > 9007199254740992.0) {
    throw UsageError("--seed must be a nonnegative integer below 2^53");
  }
  o.seed = static_cast<std::uint64_t>(seed);
  const std::string scaling = cfg["noise"].value("scaling", std::string("increment"));
  if (scaling == "increment") o.scaling = FDYN_NOISE_INCREMENT;
  else if (scaling == "drift-weighted") o.scaling = FDYN_NOISE_DRIFT_WEIGHTED;
  else throw UsageError("noise scaling must be 'increment' or 'drift-weighted'");

  OutputDir out(r.out, r.hash);
  json thresholds = json::array();
  for (double F : F_list) {
    fdyn_ensemble* e = nullptr;
    check(fdyn_ensemble_run(x0, x1, F, sigma.data(), sigma.size(), xe_grid.data(), xe_grid.size(), n, &o, &e));
    std::unique_ptr<fdyn_ensemble, decltype(&fdyn_ensemble_destroy)> guard(e, &fdyn_ensemble_destroy);
    CsvTable t({"sigma", "xe", "survival", "n", "mean_ext_time", "std_ext_time", "n_extinct", "n_blowup"});
    for (std::size_t i = 0; i < fdyn_ensemble_cell_count(e); ++i) {
      fdyn_ensemble_cell c;
      check(fdyn_ensemble_get_cell(e, i, &c));
      t.add({fmt(c.sigma), fmt(c.xe), fmt(c.survival), std::to_string(c.n), fmt(c.mean_ext_time),
             fmt(c.std_ext_time), std::to_string(c.n_extinct), std::to_string(c.n_blowup)});
    }
    char name[64];
    std::snprintf(name, sizeof name, "stochastic_F%g.csv", F);
    out.csv(name, t);
    for (std::size_t s = 0; s < sigma.size(); ++s) {
      double thr = 0.0;
      check(fdyn_ensemble_threshold(e, s, 0.5, &thr));
      thresholds.push_back({{"F", F}, {"sigma", sigma[s]}, {"xe_50", thr}});
    }
  }
  json manifest{{"command", "stochastic"},
                {"config_hash", r.hash},
                {"resolved_config", cfg},
                {"seeding", {{"base_seed", o.seed},
                             {"cell_order", "sigma-major: cell = i_sigma * n_xe + i_xe"},
                             {"realization_seed", "splitmix64 chain of (base_seed, cell, realization)"},
                             {"generator", "mt19937_64 with normal_distribution"}}},
                {"survival_50", thresholds}};
  manifest["files"] = out.files();
  out.json_file("manifest.json", manifest);
  std::cout << manifest.dump(2) << "\n";
  return 0;
}

void print_error(const std::string& type, const std::string& message, int code) {
  json err{{"error", {{"type", type}, {"message", message}, {"exit_code", code}}}};
  std::cerr << err.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"facildyn: resource-consumer facilitation model, smooth and piecewise-linear"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fdyn_version()));

  struct Sub {
    CLI::App* app;
    Overlay ov;
    std::string config;
    std::string out;
    json defaults = json::object();
  };
  std::map<std::string, std::unique_ptr<Sub>> subs;
  auto add = [&](const std::string& name, const std::string& help) -> Sub& {
    auto s = std::make_unique<Sub>();
    s->app = app.add_subcommand(name, help);
    s->app->add_option("--config", s->config, "JSON config; flags override it");
    s->ov.text(s->app, "--out", "/out"_json_pointer, "output directory");
    return *subs.emplace(name, std::move(s)).first->second;
  };
  const json paper_pair = {{"params", {{"x0", 1.0}, {"x1", 3.0}}}};

  auto& eq = add("equilibria", "classify the four equilibria");
  add_param_flags(eq.app, eq.ov, true);

  auto& po = add("portrait", "separatrices, nullclines, direction field, cycle");
  add_param_flags(po.app, po.ov, true);
  add_solver_flags(po.app, po.ov);
  po.ov.text(po.app, "--model", "/model"_json_pointer, "smooth or pwl");
  po.ov.text(po.app, "--chart", "/portrait/chart"_json_pointer, "also emit a compactified chart field: U1, U2, U3");
  po.ov.number(po.app, "--field-n", "/portrait/field_n"_json_pointer, "direction-field samples per axis");

  auto& he = add("heteroclinic", "heteroclinic bifurcation curve");
  add_param_flags(he.app, he.ov, false);
  add_solver_flags(he.app, he.ov);
  he.ov.text(he.app, "--model", "/model"_json_pointer, "smooth or pwl");
  he.ov.text(he.app, "--F-grid", "/grids/F"_json_pointer, "start:stop:count", [](const std::string& s) {
    return grid_value(s, "--F-grid");
  });
  he.ov.text(he.app, "--xe-grid", "/grids/xe"_json_pointer, "start:stop:count (PWL only)",
             [](const std::string& s) { return grid_value(s, "--xe-grid"); });
  he.ov.toggle(he.app, "--compare", "/heteroclinic/compare"_json_pointer, "smooth, PWL and canard tangent");
  he.defaults = paper_pair;

  auto& re = add("regions", "label a (xe, F) grid");
  add_param_flags(re.app, re.ov, false);
  add_solver_flags(re.app, re.ov);
  re.ov.text(re.app, "--model", "/model"_json_pointer, "smooth or pwl");
  re.ov.text(re.app, "--F-grid", "/grids/F"_json_pointer, "start:stop:count",
             [](const std::string& s) { return grid_value(s, "--F-grid"); });
  re.ov.text(re.app, "--xe-grid", "/grids/xe"_json_pointer, "start:stop:count",
             [](const std::string& s) { return grid_value(s, "--xe-grid"); });
  re.defaults = paper_pair;

  auto& st = add("stochastic", "survival and extinction-time ensembles");
  st.ov.number(st.app, "--x0", "/params/x0"_json_pointer, "lower vegetation equilibrium");
  st.ov.number(st.app, "--x1", "/params/x1"_json_pointer, "upper vegetation equilibrium");
  st.ov.text(st.app, "--F", "/noise/F"_json_pointer, "F values, one CSV each",
             [](const std::string& s) { return grid_value(s, "--F"); });
  st.ov.text(st.app, "--sigma", "/noise/sigma"_json_pointer, "noise intensities",
             [](const std::string& s) { return grid_value(s, "--sigma"); });
  st.ov.text(st.app, "--xe-grid", "/grids/xe"_json_pointer, "start:stop:count",
             [](const std::string& s) { return grid_value(s, "--xe-grid"); });
  st.ov.number(st.app, "--n", "/noise/n"_json_pointer, "realizations per cell");
  st.ov.number(st.app, "--seed", "/noise/seed"_json_pointer, "base seed");
  st.ov.number(st.app, "--dt", "/noise/dt"_json_pointer, "time step");
  st.ov.number(st.app, "--t-max", "/noise/t_max"_json_pointer, "horizon");
  st.ov.text(st.app, "--scaling", "/noise/scaling"_json_pointer, "increment or drift-weighted");
  st.defaults = paper_pair;
  st.defaults["grids"] = {{"xe", "1.5:2:51"}};
  st.defaults["noise"] = {{"n", 90}};

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what(), 2);
    return 2;
  }

  try {
    for (auto& [name, s] : subs) {
      if (!s->app->parsed()) continue;
      const bool explicit_out = s->app->get_option("--out")->count() > 0;
      Resolved r = resolve(name, s->config, s->ov, s->defaults);
      if (name == "equilibria") return run_equilibria(r, explicit_out || r.out != ".");
      if (name == "portrait") return run_portrait(r);
      if (name == "heteroclinic") return run_heteroclinic(r);
      if (name == "regions") return run_regions(r);
      if (name == "stochastic") return run_stochastic(r);
    }
    print_error("usage", "no subcommand", 2);
    return 2;
  } catch (const UsageError& e) {
    print_error("usage", e.what(), 2);
    return 2;
  } catch (const ApiError& e) {
    const int code = fdyn_status_is_validation(e.status) ? 2 : 3;
    print_error(fdyn_status_string(e.status), e.what(), code);
    return code;
  } catch (const json::exception& e) {
    print_error("usage", std::string("config: ") + e.what(), 2);
    return 2;
  } catch (const std::exception& e) {
    print_error("internal", e.what(), 3);
    return 3;
  }
}
