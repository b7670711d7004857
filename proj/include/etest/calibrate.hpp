#pragma once

#include <span>
#include <vector>

#include "etest/evalue.hpp"

namespace etest::calib {

inline constexpr double kDefaultTarget = 0.98;
inline constexpr double kDefaultLambdaMax = 100.0;

/// Raw null scores s_i = phi(x_hat(y2_i))^T (q0 - q1) and the target for the
/// empirical null mean of exp(-lambda s).
class CalibrationSet {
 public:
  explicit CalibrationSet(std::vector<double> scores, double target = kDefaultTarget);

  /// (1/N) sum exp(-lambda s_i), computed with a log-sum-exp.
  double mean_e(double lambda) const;
  double log_mean_e(double lambda) const;

  const std::vector<double>& scores() const noexcept { return scores_; }
  double target() const noexcept { return target_; }

 private:
  std::vector<double> scores_;
  double target_;
};

struct CalibrationResult {
  evalue::Temperature lambda;
  double mean_e;      // empirical null mean of E at lambda
  bool hit_lambda_max;
};

/// Largest lambda in (0, lambda_max] with mean_e(lambda) <= target. The
/// feasible set of the convex mean_e is an interval; its right end is
/// bracketed on a 256-point log grid and refined by bisection.
/// Fails with NoFeasibleLambda when no lambda in range is feasible.
CalibrationResult calibrate_lambda(const CalibrationSet& set,
                                   double lambda_max = kDefaultLambdaMax);

}  // namespace etest::calib
