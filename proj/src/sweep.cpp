#include "etest/sweep.hpp"

#include <cmath>

#include "etest/calibrate.hpp"

namespace etest::calib {

using harness::ScenarioConfig;

std::vector<double> default_tau_grid() {
  std::vector<double> taus;
  for (int k = -3; k <= 3; ++k) taus.push_back(std::ldexp(1.0, k));
  return taus;
}

SweepTable tau_sweep(const ScenarioConfig& scenario, const std::vector<double>& taus,
                     std::size_t trials, std::uint64_t seed, Exec exec) {
  require(scenario.noise.family == NoiseFamily::Gaussian, ErrorCode::ConfigError,
          "tau sweep needs a Gaussian scenario");
  require(!taus.empty(), ErrorCode::InvalidArgument, "tau grid is empty");
  require(trials >= 2, ErrorCode::InvalidArgument, "tau sweep needs at least 2 trials");

  SweepTable table;
  table.levels = scenario.levels;
  table.trials = trials;
  table.seed = seed;
  const std::size_t nl = scenario.levels.size();

  for (std::size_t i = 0; i < taus.size(); ++i) {
    require(std::isfinite(taus[i]) && taus[i] > 0.0, ErrorCode::InvalidArgument,
            "tau must be positive");
    ScenarioConfig cfg = scenario;
    cfg.split.tau = taus[i];
    cfg.split.beta.reset();
    cfg.bootstrap.reset();
    const harness::Scenario sc = harness::synth_scenario(cfg);
    const std::uint64_t cell = derive_seed(seed, i);

    SweepRow row;
    row.tau = taus[i];
    if (cfg.lambda.mode == harness::LambdaSpec::Mode::Fixed) {
      row.lambda = cfg.lambda.value;
    } else {
      const auto holdout = static_cast<std::size_t>(
          std::ceil(cfg.lambda.holdout_fraction * static_cast<double>(cfg.trials_null)));
      const CalibrationSet set(harness::null_scores(sc, holdout, derive_seed(cell, 0), exec),
                               cfg.lambda.target);
      try {
        const auto res = calibrate_lambda(set, cfg.lambda.lambda_max);
        row.lambda = res.lambda.value;
        row.hit_lambda_max = res.hit_lambda_max;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoFeasibleLambda) throw;
        row.feasible = false;
      }
    }

    const std::uint64_t stream = derive_seed(cell, 1);
    std::vector<harness::TrialOutcome> outcomes(trials);
    for_each_trial(exec, trials, [&](std::size_t j) {
      Rng rng = Rng::child(stream, j);
      outcomes[j] = harness::run_trial(sc, 1, row.feasible ? row.lambda : 1.0, rng);
    });

    double sum = 0.0, sum2 = 0.0;
    std::vector<std::uint64_t> rejections(nl, 0);
    for (const auto& o : outcomes) {
      sum += o.psnr_y1;
      sum2 += o.psnr_y1 * o.psnr_y1;
      if (!row.feasible) continue;
      for (std::size_t l = 0; l < nl; ++l) rejections[l] += o.proposed[l];
    }
    const double n = static_cast<double>(trials);
    row.psnr_mean = sum / n;
    const double var = std::max(0.0, (sum2 - n * row.psnr_mean * row.psnr_mean) / (n - 1.0));
    row.psnr_stderr = std::sqrt(var / n);
    for (std::size_t l = 0; l < nl; ++l) {
      const double p = static_cast<double>(rejections[l]) / n;
      row.power.push_back(p);
      row.power_stderr.push_back(std::sqrt(p * (1.0 - p) / n));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

nlohmann::json sweep_to_json(const SweepTable& t) {
  using nlohmann::json;
  json j;
  j["schema"] = "etest.sweep/1";
  j["levels"] = t.levels;
  j["trials"] = t.trials;
  j["seed"] = t.seed;
  j["rows"] = json::array();
  json psnr_series = json::array();
  for (const auto& r : t.rows) {
    json power_series = json::array();
    for (std::size_t l = 0; l < t.levels.size(); ++l) {
      power_series.push_back({{"level", t.levels[l]}, {"power", r.power[l]},
                              {"stderr", r.power_stderr[l]}});
    }
    j["rows"].push_back({{"tau", r.tau},
                         {"psnr_y1", r.psnr_mean},
                         {"psnr_y1_stderr", r.psnr_stderr},
                         {"lambda", r.feasible ? json(r.lambda) : json(nullptr)},
                         {"feasible", r.feasible},
                         {"hit_lambda_max", r.hit_lambda_max},
                         {"series", power_series}});
    psnr_series.push_back({{"tau", r.tau}, {"psnr_y1", r.psnr_mean}});
  }
  j["psnr_series"] = psnr_series;
  return j;
}

}  // namespace etest::calib
