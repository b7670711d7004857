#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "etest/harness.hpp"

namespace etest::calib {

/// tau = 2^k for k = -3..3, i.e. 1/8, 1/4, ..., 8.
std::vector<double> default_tau_grid();

struct SweepRow {
  double tau = 1.0;
  double psnr_mean = 0.0;    // PSNR(y1) against A x_star, averaged over trials
  double psnr_stderr = 0.0;
  double lambda = 0.0;
  bool hit_lambda_max = false;
  bool feasible = true;  // false when no lambda meets the calibration target; power is then 0
  std::vector<double> power;  // per level
  std::vector<double> power_stderr;
};

struct SweepTable {
  std::vector<double> levels;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::vector<SweepRow> rows;
};

/// For every tau, rebuilds the scenario with that split parameter, calibrates
/// lambda when the scenario asks for it, and runs `trials` class-1 trials.
/// Cell (i, j) draws from Rng::child(derive_seed(seed, i), j).
SweepTable tau_sweep(const harness::ScenarioConfig& scenario, const std::vector<double>& taus,
                     std::size_t trials, std::uint64_t seed, Exec exec = Exec::Parallel);

/// Plot-ready form: one (level, power) series per tau plus a (tau, PSNR) series.
nlohmann::json sweep_to_json(const SweepTable& table);

}  // namespace etest::calib
