#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "etest/evalue.hpp"
#include "oracles.hpp"

using namespace etest;
using namespace etest::evalue;

namespace {

const std::vector<double> kLevels{0.02, 0.05, 0.1, 0.15, 0.2};

UnitEmbedding unit(Vector v) { return UnitEmbedding::normalized(v); }

UnitEmbedding random_unit(Rng& rng, Eigen::Index d) {
  Vector v(d);
  for (auto& x : v) x = rng.normal();
  return unit(v);
}

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

}  // namespace

TEST_CASE("statistic examples") {
  Rng rng(1);
  const auto q = random_unit(rng, 6);
  const auto phi = random_unit(rng, 6);
  CHECK(statistic(phi, HypothesisPair(q, q), Temperature(3.0)) == 0.0);

  const HypothesisPair antipodal(q, UnitEmbedding(-q.vector()));
  CHECK(statistic(q, antipodal, Temperature(1.0)) == doctest::Approx(2.0).epsilon(1e-15));

  // Scores given directly as phi.q0 = 0.30 and phi.q1 = 0.10 along orthogonal axes.
  const Vector x = (Vector(3) << 0.30, 0.10, std::sqrt(1 - 0.09 - 0.01)).finished();
  const HypothesisPair hyp(UnitEmbedding(Vector::Unit(3, 0)), UnitEmbedding(Vector::Unit(3, 1)));
  CHECK(statistic(UnitEmbedding(x), hyp, Temperature(1.44)) == doctest::Approx(0.288).epsilon(1e-14));
  CHECK(code_of([] { Temperature(0.0); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { Temperature(-1.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("evaluate examples") {
  SUBCASE("t = 0") {
    const auto o = evaluate_statistic(0.0, 0.0, kLevels);
    CHECK(o.e_value == 1.0);
    CHECK(o.p_value == 1.0);
    for (const auto& d : o.decisions) CHECK(d.decision == Decision::FailToReject);
  }
  SUBCASE("E = 25 rejects at 0.05") {
    const auto o = evaluate_statistic(-std::log(25.0), 0.0, kLevels);
    CHECK(o.e_value == doctest::Approx(25.0).epsilon(1e-14));
    CHECK(o.p_value == doctest::Approx(0.04).epsilon(1e-14));
    CHECK(o.rejects(0.05));
    CHECK_FALSE(o.rejects(0.02));
  }
  SUBCASE("t = 0.288") {
    const auto o = evaluate_statistic(0.288, 0.2, kLevels);
    CHECK(o.e_value == doctest::Approx(0.74975).epsilon(1e-5));
    CHECK(o.log_e_value == -0.288);
    CHECK(o.p_value == 1.0);
    for (const auto& d : o.decisions) CHECK(d.decision == Decision::FailToReject);
  }
  SUBCASE("boundary E = 1/alpha rejects") {
    CHECK(markov_rejects(std::log(0.05), 0.05));
    CHECK_FALSE(markov_rejects(std::nextafter(std::log(0.05), 0.0), 0.05));
  }
  SUBCASE("level validation") {
    CHECK(code_of([] { validate_levels(std::vector<double>{0.05, 1.0}); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { validate_levels(std::vector<double>{0.0}); }) == ErrorCode::InvalidArgument);
  }
}

TEST_CASE("softmax baseline") {
  CHECK(softmax_from_logits(0.7, 0.7, kLevels).p0 == 0.5);
  const auto s = softmax_from_logits(0.4, 0.0, kLevels);
  CHECK(s.p0 == doctest::Approx(0.59869).epsilon(1e-5));
  CHECK(s.p0 + s.p1 == doctest::Approx(1.0));
  // Stable for large logits.
  const auto big = softmax_from_logits(-800.0, 800.0, kLevels);
  CHECK(big.p0 == 0.0);
  CHECK(big.decisions.back().decision == Decision::Reject);
  const auto o = softmax_from_logits(5.0, -5.0, kLevels);
  CHECK(o.decisions.front().decision == Decision::FailToReject);
}

TEST_CASE("properties of the e-value") {
  Rng rng(2);
  for (int rep = 0; rep < 2000; ++rep) {
    const auto q0 = random_unit(rng, 8), q1 = random_unit(rng, 8), phi = random_unit(rng, 8);
    const Temperature lam(std::exp(3.0 * rng.normal()));
    const auto a = evaluate(phi, HypothesisPair(q0, q1), lam, kLevels);
    const auto b = evaluate(phi, HypothesisPair(q1, q0), lam, kLevels);
    CHECK(a.e_value >= 0.0);
    CHECK(a.raw_score >= -2.0);
    CHECK(a.raw_score <= 2.0);
    CHECK(a.t == -b.t);
    CHECK(a.log_e_value == -b.log_e_value);
    if (std::isfinite(a.e_value) && a.e_value > 1e-300 && a.e_value < 1e300) {
      CHECK(a.e_value * b.e_value == doctest::Approx(1.0).epsilon(1e-12));
    }
    bool rejected = false;
    for (const auto& d : a.decisions) {
      if (rejected) CHECK(d.decision == Decision::Reject);
      rejected = rejected || d.decision == Decision::Reject;
    }
  }
}

TEST_CASE("markov guarantee for scores with null mean at most one") {
  // Scores drawn so that E = exp(-lambda s) has mean exactly 1 in the
  // population: s ~ N(mu, v) with lambda = 2 mu / v.
  const double mu = 0.05, v = 0.01, lambda = 2 * mu / v;
  const int n = 200000;
  Rng rng(3);
  std::vector<double> t(n);
  for (auto& x : t) x = lambda * (mu + std::sqrt(v) * rng.normal());
  for (double alpha : kLevels) {
    int rej = 0;
    for (double x : t) rej += markov_rejects(x, alpha);
    CHECK(double(rej) / n <= alpha + 4 * std::sqrt(alpha * (1 - alpha) / n));
  }
}

TEST_CASE("p-value is conservative on a simulated null") {
  const double mu = 0.08, v = 0.02, lambda = 2 * mu / v;
  const int n = 100000;
  Rng rng(4);
  std::vector<double> p;
  for (int i = 0; i < n; ++i) {
    const double s = mu + std::sqrt(v) * rng.normal();
    p.push_back(evaluate_statistic(lambda * s, s, kLevels).p_value);
  }
  std::sort(p.begin(), p.end());
  for (double u = 0.01; u < 1.0; u += 0.01) {
    const double cdf = double(std::upper_bound(p.begin(), p.end(), u) - p.begin()) / n;
    CHECK(cdf <= u + 4 * std::sqrt(u * (1 - u) / n));
  }
}
