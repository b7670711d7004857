#pragma once

#include <string_view>
#include <variant>

#include "etest/types.hpp"

namespace etest::split {

/// Gaussian noise injection: Y1 = y + tau Z, Y2 = y - Z / tau, Z ~ N(0, Sigma).
struct GaussianConfig {
  double tau;
  CovModel sigma;
};

/// Binomial thinning for Y = gamma * Poisson(Ax / gamma).
struct PoissonConfig {
  double beta;
  double gamma;
};

using SplitConfig = std::variant<GaussianConfig, PoissonConfig>;

void validate(const SplitConfig& config);

/// Accepts "gaussian" and "poisson". "gamma" and "binomial" fail with
/// ErrorCode::Unsupported, anything else with ErrorCode::ConfigError.
void require_supported_family(std::string_view family);

struct SplitPair {
  MeasurementVec y1;
  MeasurementVec y2;
  SplitConfig config;
};

SplitPair gaussian_split(const MeasurementVec& y, double tau, const CovModel& sigma, Rng& rng);
/// Same split with the injected noise Z supplied by the caller.
SplitPair gaussian_split_with_noise(const MeasurementVec& y, double tau, const CovModel& sigma,
                                    const Vector& z);

/// Gaussian split driven by beta through the generalized contract
/// y = (1 - beta) y1 + beta y2: y1 is drawn given y, y2 is then deterministic.
SplitPair gaussian_split_beta(const MeasurementVec& y, double beta, const CovModel& sigma,
                              Rng& rng);

/// Integer photon counts y / gamma; fails with NegativeEntries or
/// NonIntegerCounts. Values within 1e-9 of an integer are rounded.
std::vector<std::uint64_t> poisson_counts(const Vector& y, double gamma);

SplitPair poisson_split(const MeasurementVec& y, double beta, double gamma, Rng& rng);
/// Poisson split with the binomial draws z supplied by the caller.
SplitPair poisson_split_with_draws(const MeasurementVec& y, double beta, double gamma,
                                   const std::vector<std::uint64_t>& z);

SplitPair apply(const SplitConfig& config, const MeasurementVec& y, Rng& rng);

/// tau = sqrt(beta / (1 - beta)).
double beta_to_tau(double beta);
/// beta = tau^2 / (1 + tau^2).
double tau_to_beta(double tau);

/// Covariance of Y2 given x for the Gaussian split: ((1 + tau^2) / tau^2) Sigma.
CovModel inflated_covariance(const CovModel& sigma, double tau);

}  // namespace etest::split
