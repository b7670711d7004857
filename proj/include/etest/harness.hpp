#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "etest/evalue.hpp"
#include "etest/parallel.hpp"
#include "etest/scenario.hpp"

namespace etest::harness {

inline constexpr const char* kReportSchema = "etest.report/1";

enum class Method { Proposed, SoftmaxBaseline, BootstrapSignTest };
std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

/// Everything computed for one simulated measurement.
struct TrialOutcome {
  double raw_score = 0.0;
  double psnr_y1 = 0.0;  // PSNR of y1 against A x_star, MAX = 1
  std::vector<bool> proposed;  // rejection per level
  std::vector<bool> softmax;
  std::vector<bool> bootstrap;  // empty unless the bootstrap is configured
  std::size_t bootstrap_clamped = 0;
};

/// Simulates x_star of class `cls`, measures, splits, estimates from y2,
/// encodes and evaluates every configured test. All randomness comes from rng.
TrialOutcome run_trial(const Scenario& sc, int cls, double lambda, Rng& rng,
                       Exec bootstrap_exec = Exec::Serial);

/// Raw null scores phi(x_hat(y2))^T dq for `count` class-0 trials of `stream`.
std::vector<double> null_scores(const Scenario& sc, std::size_t count, std::uint64_t stream,
                                Exec exec = Exec::Parallel);

double psnr(const Vector& estimate, const Vector& truth);

struct Rate {
  double mean = 0.0;
  std::optional<double> std;  // across repeats; present iff repeats > 1

  bool operator==(const Rate&) const = default;
};

struct MethodRates {
  Method method = Method::Proposed;
  std::vector<Rate> type1;  // one per level
  std::vector<Rate> power;

  bool operator==(const MethodRates&) const = default;
};

struct RepeatInfo {
  double lambda = 0.0;
  bool lambda_calibrated = false;
  bool hit_lambda_max = false;
  double calibration_mean_e = 0.0;  // on the holdout
  double null_mean_e = 0.0;         // on the evaluation null trials
  std::size_t bootstrap_clamped = 0;

  bool operator==(const RepeatInfo&) const = default;
};

struct ReportTable {
  nlohmann::json config;  // canonical echo
  std::string config_hash;
  std::uint64_t master_seed = 0;
  std::vector<double> levels;
  std::size_t trials_null = 0;
  std::size_t trials_alt = 0;
  std::size_t repeats = 0;
  std::vector<MethodRates> methods;
  std::vector<RepeatInfo> repeat_info;
  double baseline_type1 = 0.0;  // no clean-image classifier error in synthetic scenarios
  std::optional<double> runtime_s;

  const MethodRates& rates(Method m) const;
  bool operator==(const ReportTable&) const = default;
};

/// Full Monte Carlo protocol. Repeat r uses seed_r = derive_seed(master, r);
/// calibration, null and alternative trials take streams 0, 1, 2 of seed_r.
ReportTable run_experiment(const ScenarioConfig& cfg, Exec exec = Exec::Parallel);

enum class ReportFormat { Json, Csv };

nlohmann::json report_to_json(const ReportTable& table);
ReportTable report_from_json(const nlohmann::json& j);
/// CSV rows: method, metric, level, mean[, std]. The std column is omitted
/// when repeats == 1.
std::string report_to_csv(const ReportTable& table);
void emit_report(const ReportTable& table, ReportFormat format, const std::filesystem::path& path);

}  // namespace etest::harness
