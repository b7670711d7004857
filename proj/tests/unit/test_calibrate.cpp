#include <doctest.h>

#include <cmath>

#include "etest/calibrate.hpp"
#include "oracles.hpp"

using namespace etest;
using namespace etest::calib;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an etest::Error");
  return ErrorCode::InvalidArgument;
}

std::vector<double> normal_scores(std::uint64_t seed, int n, double mu, double sd) {
  Rng rng(seed);
  std::vector<double> s(n);
  for (auto& x : s) x = mu + sd * rng.normal();
  return s;
}

}  // namespace

TEST_CASE("constant scores") {
  const CalibrationSet set(std::vector<double>(10, 0.5));
  const auto r = calibrate_lambda(set, 50.0);
  CHECK(r.lambda.value == 50.0);
  CHECK(r.hit_lambda_max);
  CHECK(-2 * std::log(0.98) == doctest::Approx(0.040405).epsilon(1e-5));
  // Just above the boundary is feasible, just below is not.
  CHECK(set.mean_e(0.0405) <= 0.98);
  CHECK(set.mean_e(0.0404) > 0.98);
  const auto tight = calibrate_lambda(CalibrationSet(std::vector<double>(10, 0.5)), 0.0405);
  CHECK(tight.lambda.value == 0.0405);
}

TEST_CASE("symmetric scores are infeasible") {
  CHECK(code_of([] { calibrate_lambda(CalibrationSet({1.0, -1.0})); }) ==
        ErrorCode::NoFeasibleLambda);
  CHECK(code_of([] { calibrate_lambda(CalibrationSet(std::vector<double>(5, -0.1))); }) ==
        ErrorCode::NoFeasibleLambda);
}

TEST_CASE("gaussian scores against a dense grid") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    CAPTURE(seed);
    const auto s = normal_scores(seed, 1000, 0.3, 0.1);
    const CalibrationSet set(s);
    const auto r = calibrate_lambda(set);
    const double lam = r.lambda.value;
    CHECK(oracle::mean_e(s, lam) <= 0.98 + 1e-12);
    if (!r.hit_lambda_max) CHECK(oracle::mean_e(s, lam * 1.001) > 0.98);
    const double grid = oracle::grid_lambda(s, 0.98, 100.0);
    // The grid step is a factor of 10^(6/9999); the result lies within one step above it.
    CHECK(lam >= grid);
    CHECK(lam <= grid * std::pow(10.0, 6.0 / 9999) * (1 + 1e-12));
    CHECK(r.mean_e == doctest::Approx(oracle::mean_e(s, lam)).epsilon(1e-12));
  }
}

TEST_CASE("empirical null mean curve") {
  const auto s = normal_scores(9, 500, 0.1, 0.3);
  const CalibrationSet set(s);
  CHECK(set.mean_e(0.0) == 1.0);
  // Convexity on a grid, and agreement with a direct long double sum.
  for (double a = 0.0; a < 20.0; a += 0.25) {
    const double mid = set.mean_e(a + 0.125);
    CHECK(mid <= 0.5 * (set.mean_e(a) + set.mean_e(a + 0.25)) * (1 + 1e-12));
    CHECK(set.mean_e(a) == doctest::Approx(oracle::mean_e(s, a)).epsilon(1e-12));
  }
  // Large lambda with a negative score stays finite through log-sum-exp.
  const CalibrationSet extreme({2.0, -2.0});
  CHECK(extreme.log_mean_e(1000.0) == doctest::Approx(2000.0 - std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("calibration set validation") {
  CHECK(code_of([] { CalibrationSet(std::vector<double>{}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { CalibrationSet({0.1, NAN}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { CalibrationSet({0.1}, 0.0); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { CalibrationSet({0.1}, 1.5); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { calibrate_lambda(CalibrationSet({0.1}), 0.0); }) == ErrorCode::InvalidArgument);
}
