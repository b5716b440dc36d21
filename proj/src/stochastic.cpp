#include "facildyn/stochastic.hpp"

#include <cmath>
#include <random>

#include "facildyn/error.hpp"
#include "facildyn/parallel.hpp"

namespace facildyn {

void NoiseConfig::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw Error(ErrorCode::InvalidArgument, "sigma must be >= 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::InvalidArgument, "dt must be > 0");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw Error(ErrorCode::InvalidArgument, "t_max must be > 0");
  if (!(y_extinct >= 0.0) || !(x_extinct >= 0.0)) throw Error(ErrorCode::InvalidArgument, "thresholds must be >= 0");
  if (!(blowup > 0.0)) throw Error(ErrorCode::InvalidArgument, "blow-up radius must be > 0");
  if (!(initial.x >= 0.0) || !(initial.y >= 0.0) || !std::isfinite(initial.x) || !std::isfinite(initial.y)) {
    throw Error(ErrorCode::InvalidArgument, "initial state must be finite and nonnegative");
  }
}

const char* to_string(NoiseScaling s) noexcept {
  return s == NoiseScaling::DriftWeighted ? "drift-weighted" : "increment";
}

NoiseScaling parse_noise_scaling(const std::string& s) {
  if (s == "increment") return NoiseScaling::Increment;
  if (s == "drift-weighted") return NoiseScaling::DriftWeighted;
  throw Error(ErrorCode::InvalidArgument, "unknown noise scaling '" + s + "'");
}

State em_step(const SmoothParams& p, const State& s, const NoiseConfig& cfg, double noise_draw) noexcept {
  const auto v = field(p, s);
  double x = s.x + v[0] * cfg.dt + cfg.sigma * noise_draw;
  double y = s.y + v[1] * cfg.dt;
  if (x < 0.0) x = 0.0;
  if (y < 0.0) y = 0.0;
  return {x, y};
}

Realization simulate_realization(const SmoothParams& p, const NoiseConfig& cfg) {
  cfg.validate();
  std::mt19937_64 gen(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sdt = std::sqrt(cfg.dt) * (cfg.scaling == NoiseScaling::DriftWeighted ? cfg.dt : 1.0);
  const auto steps = static_cast<std::size_t>(std::llround(cfg.t_max / cfg.dt));

  Realization r;
  State s = cfg.initial;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double draw = cfg.sigma > 0.0 ? sdt * normal(gen) : 0.0;
    s = em_step(p, s, cfg, draw);
    const double t = static_cast<double>(k) * cfg.dt;
    if (!std::isfinite(s.x) || !std::isfinite(s.y) || std::hypot(s.x, s.y) > cfg.blowup) {
      r.survived = false;
      r.blowup = true;
      r.extinction_time = t;
      break;
    }
    if (!r.resource_dip_time && s.x < cfg.x_extinct) r.resource_dip_time = t;
    if (s.y < cfg.y_extinct) {
      r.survived = false;
      r.extinction_time = t;
      break;
    }
  }
  r.final_state = s;
  return r;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t cell, std::uint64_t realization) noexcept {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ cell) ^ realization);
}

namespace {

EnsembleResult run_ensemble(double x0, double x1, double F, const std::vector<double>& sigma_grid,
                            const std::vector<double>& xe_grid, std::size_t n, const NoiseConfig& cfg,
                            unsigned threads) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
  if (sigma_grid.empty() || xe_grid.empty()) throw Error(ErrorCode::InvalidArgument, "grids must be non-empty");
  cfg.validate();
  for (double s : sigma_grid) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw Error(ErrorCode::InvalidArgument, "sigma values must be >= 0");
  }
  std::vector<SmoothParams> params;
  params.reserve(xe_grid.size());
  for (double xe : xe_grid) params.push_back(SmoothParams::make(x0, x1, xe, F));

  EnsembleResult res;
  res.x0 = x0;
  res.x1 = x1;
  res.F = F;
  res.base_seed = cfg.seed;
  res.sigma_grid = sigma_grid;
  res.xe_grid = xe_grid;
  const std::size_t cells = sigma_grid.size() * xe_grid.size();
  std::vector<Realization> runs(cells * n);
  parallel_for(cells * n, threads, [&](std::size_t k) {
    const std::size_t cell = k / n, rep = k % n;
    NoiseConfig c = cfg;
    c.sigma = sigma_grid[cell / xe_grid.size()];
    c.seed = derive_seed(cfg.seed, cell, rep);
    runs[k] = simulate_realization(params[cell % xe_grid.size()], c);
  });

  res.cells.resize(cells);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    EnsembleCell& e = res.cells[cell];
    e.cell_index = cell;
    e.sigma = sigma_grid[cell / xe_grid.size()];
    e.xe = xe_grid[cell % xe_grid.size()];
    e.n = n;
    double sum = 0.0, sum2 = 0.0;
    std::size_t survived = 0;
    for (std::size_t rep = 0; rep < n; ++rep) {
      const Realization& r = runs[cell * n + rep];
      if (r.survived) ++survived;
      if (r.blowup) ++e.n_blowup;
      if (r.resource_dip_time) ++e.n_resource_dip;
      if (r.extinction_time) {
        ++e.n_extinct;
        sum += *r.extinction_time;
      }
    }
    e.survival = static_cast<double>(survived) / static_cast<double>(n);
    if (e.n_extinct > 0) {
      const double mean = sum / static_cast<double>(e.n_extinct);
      for (std::size_t rep = 0; rep < n; ++rep) {
        const Realization& r = runs[cell * n + rep];
        if (r.extinction_time) sum2 += (*r.extinction_time - mean) * (*r.extinction_time - mean);
      }
      e.mean_ext_time = mean;
      e.std_ext_time = e.n_extinct > 1 ? std::sqrt(sum2 / static_cast<double>(e.n_extinct - 1)) : 0.0;
    }
  }
  return res;
}

}  // namespace

EnsembleResult survival_grid(double x0, double x1, double F, const std::vector<double>& sigma_grid,
                             const std::vector<double>& xe_grid, std::size_t n, const NoiseConfig& cfg,
                             unsigned threads) {
  return run_ensemble(x0, x1, F, sigma_grid, xe_grid, n, cfg, threads);
}

EnsembleResult extinction_times(double x0, double x1, double F, const std::vector<double>& xe_grid,
                                const std::vector<double>& sigma_list, std::size_t n, const NoiseConfig& cfg,
                                unsigned threads) {
  return run_ensemble(x0, x1, F, sigma_list, xe_grid, n, cfg, threads);
}

double survival_threshold(const EnsembleResult& r, std::size_t i_sigma, double level) {
  const std::size_t m = r.xe_grid.size();
  if (m == 0 || i_sigma >= r.sigma_grid.size()) throw Error(ErrorCode::InvalidArgument, "no such sigma row");
  for (std::size_t k = m; k-- > 0;) {
    const double s = r.at(i_sigma, k).survival;
    if (s < level) {
      if (k + 1 == m) return r.xe_grid[k];
      const double s_right = r.at(i_sigma, k + 1).survival;
      const double w = (s_right - level) / (s_right - s);
      return r.xe_grid[k + 1] + w * (r.xe_grid[k] - r.xe_grid[k + 1]);
    }
  }
  return r.xe_grid.front();
}

}  // namespace facildyn
