#include "etest/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace etest::calib {

namespace {

constexpr int kGridPoints = 256;
constexpr double kGridSpan = 1e-6;  // smallest grid point = lambda_max * kGridSpan
constexpr double kRelTol = 1e-6;

}  // namespace

CalibrationSet::CalibrationSet(std::vector<double> scores, double target)
    : scores_(std::move(scores)), target_(target) {
  require(!scores_.empty(), ErrorCode::InvalidArgument, "calibration set is empty");
  require(target_ > 0.0 && target_ <= 1.0, ErrorCode::InvalidArgument,
          "calibration target must lie in (0, 1]");
  for (double s : scores_) {
    require(std::isfinite(s), ErrorCode::InvalidArgument, "non-finite calibration score");
  }
}

double CalibrationSet::log_mean_e(double lambda) const {
  double max_term = -std::numeric_limits<double>::infinity();
  for (double s : scores_) max_term = std::max(max_term, -lambda * s);
  double acc = 0.0;
  for (double s : scores_) acc += std::exp(-lambda * s - max_term);
  return max_term + std::log(acc / static_cast<double>(scores_.size()));
}

double CalibrationSet::mean_e(double lambda) const { return std::exp(log_mean_e(lambda)); }

CalibrationResult calibrate_lambda(const CalibrationSet& set, double lambda_max) {
  require(std::isfinite(lambda_max) && lambda_max > 0.0, ErrorCode::InvalidArgument,
          "lambda_max must be positive");
  const bool any_positive =
      std::any_of(set.scores().begin(), set.scores().end(), [](double s) { return s > 0.0; });
  require(any_positive, ErrorCode::NoFeasibleLambda,
          "no positive null score: mean E >= 1 for every lambda > 0");

  const double log_target = std::log(set.target());
  auto feasible = [&](double lambda) { return set.log_mean_e(lambda) <= log_target; };

  if (feasible(lambda_max)) return {evalue::Temperature(lambda_max), set.mean_e(lambda_max), true};

  // Walk the log grid down from lambda_max to the first feasible point.
  const double log_lo = std::log(lambda_max * kGridSpan);
  const double log_hi = std::log(lambda_max);
  double feasible_lambda = 0.0;
  double infeasible_lambda = lambda_max;
  for (int i = kGridPoints - 2; i >= 0; --i) {
    const double lambda =
        std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(i) / (kGridPoints - 1));
    if (feasible(lambda)) {
      feasible_lambda = lambda;
      break;
    }
    infeasible_lambda = lambda;
  }

  if (feasible_lambda == 0.0) {
    // The feasible interval may be narrower than a grid cell: locate the
    // minimizer of the convex log mean by golden-section search.
    double a = 0.0, b = lambda_max;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = set.log_mean_e(c), fd = set.log_mean_e(d);
    for (int it = 0; it < 200 && (b - a) > 1e-12 * lambda_max; ++it) {
      if (fc < fd) {
        b = d, d = c, fd = fc;
        c = b - g * (b - a);
        fc = set.log_mean_e(c);
      } else {
        a = c, c = d, fc = fd;
        d = a + g * (b - a);
        fd = set.log_mean_e(d);
      }
    }
    const double argmin = 0.5 * (a + b);
    require(argmin > 0.0 && feasible(argmin), ErrorCode::NoFeasibleLambda,
            "mean E exceeds the target for every lambda in (0, lambda_max]");
    feasible_lambda = argmin;
    infeasible_lambda = lambda_max;
  }

  // Bisection on the right boundary of the feasible interval.
  double lo = feasible_lambda, hi = infeasible_lambda;
  while (hi - lo > kRelTol * lo) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? lo : hi) = mid;
  }
  return {evalue::Temperature(lo), set.mean_e(lo), false};
}

}  // namespace etest::calib
