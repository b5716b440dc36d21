#pragma once

// Euler-Maruyama ensembles with additive noise on the resource equation:
//   dx = f_x dt + sigma dW,   dy = f_y dt.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "facildyn/params.hpp"
#include "facildyn/smooth_model.hpp"

namespace facildyn {

/// Increment: x gains sigma * N(0, dt) per step.
/// DriftWeighted: the draw is multiplied by dt as well, as in
/// x += (f_x + sigma * eta) dt with eta ~ N(0, dt).
enum class NoiseScaling { Increment, DriftWeighted };

[[nodiscard]] const char* to_string(NoiseScaling s) noexcept;
[[nodiscard]] NoiseScaling parse_noise_scaling(const std::string& s);

struct NoiseConfig {
  double sigma = 0.0;
  NoiseScaling scaling = NoiseScaling::Increment;
  double dt = 0.01;
  double t_max = 300.0;
  std::uint64_t seed = 0x5eed;
  double y_extinct = 1e-4;  // consumer extinction (defines the event)
  double x_extinct = 1e-4;  // resource dip, diagnostic only
  double blowup = 1e3;
  State initial{1.5, 0.3};

  void validate() const;
};

/// One step; noise_draw ~ N(0, dt). Negative coordinates are clamped to 0.
[[nodiscard]] State em_step(const SmoothParams& p, const State& s, const NoiseConfig& cfg, double noise_draw) noexcept;

struct Realization {
  bool survived = true;
  std::optional<double> extinction_time;
  bool blowup = false;
  std::optional<double> resource_dip_time;
  State final_state;
};

/// Runs from cfg.initial with generator seeded by cfg.seed.
[[nodiscard]] Realization simulate_realization(const SmoothParams& p, const NoiseConfig& cfg);

/// SplitMix64 mixing of (base, cell, realization) into a generator seed.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t base, std::uint64_t cell, std::uint64_t realization) noexcept;

struct EnsembleCell {
  double sigma = 0.0;
  double xe = 0.0;
  double survival = 0.0;
  std::size_t n = 0;
  std::optional<double> mean_ext_time;
  std::optional<double> std_ext_time;
  std::size_t n_extinct = 0;
  std::size_t n_blowup = 0;
  std::size_t n_resource_dip = 0;
  std::size_t cell_index = 0;
};

struct EnsembleResult {
  double x0 = 0.0;
  double x1 = 0.0;
  double F = 0.0;
  std::uint64_t base_seed = 0;
  std::vector<double> sigma_grid;
  std::vector<double> xe_grid;
  std::vector<EnsembleCell> cells;  // sigma-major: cells[i_sigma * xe_grid.size() + i_xe]

  [[nodiscard]] const EnsembleCell& at(std::size_t i_sigma, std::size_t i_xe) const {
    return cells[i_sigma * xe_grid.size() + i_xe];
  }
};

/// n realizations per (sigma, xe) cell; seeds derive from cfg.seed, so the
/// result does not depend on the thread count.
[[nodiscard]] EnsembleResult survival_grid(double x0, double x1, double F, const std::vector<double>& sigma_grid,
                                           const std::vector<double>& xe_grid, std::size_t n, const NoiseConfig& cfg,
                                           unsigned threads = 0);

/// Same ensemble, read as extinction-time statistics per (xe, sigma).
[[nodiscard]] EnsembleResult extinction_times(double x0, double x1, double F, const std::vector<double>& xe_grid,
                                              const std::vector<double>& sigma_list, std::size_t n,
                                              const NoiseConfig& cfg, unsigned threads = 0);

/// xe where survival, scanned from the largest xe down, first falls below
/// level (linear interpolation with the cell to its right). Returns the grid
/// maximum if the rightmost cell is already below, the minimum if none is.
[[nodiscard]] double survival_threshold(const EnsembleResult& r, std::size_t i_sigma, double level = 0.5);

}  // namespace facildyn
