#include "etest/split.hpp"

#include <cmath>
#include <string>

namespace etest::split {

namespace {

constexpr double kCountTolerance = 1e-9;

void require_tau(double tau) {
  require(std::isfinite(tau) && tau > 0.0, ErrorCode::InvalidArgument,
          "tau must be positive and finite");
}

void require_beta(double beta) {
  require(beta > 0.0 && beta < 1.0, ErrorCode::InvalidArgument, "beta must lie in (0, 1)");
}

}  // namespace

void validate(const SplitConfig& config) {
  if (const auto* g = std::get_if<GaussianConfig>(&config)) {
    require_tau(g->tau);
  } else {
    const auto& p = std::get<PoissonConfig>(config);
    require_beta(p.beta);
    require(std::isfinite(p.gamma) && p.gamma > 0.0, ErrorCode::InvalidArgument,
            "gamma must be positive");
  }
}

void require_supported_family(std::string_view family) {
  if (family == "gaussian" || family == "poisson") return;
  if (family == "gamma" || family == "binomial") {
    fail(ErrorCode::Unsupported,
         std::string(family) +
             " splitting needs the h1/h2 densities of the generalized recorrupted-to-recorrupted "
             "construction (Monroy et al., 2025), which are not implemented");
  }
  fail(ErrorCode::ConfigError, "unknown noise family '" + std::string(family) + "'");
}

SplitPair gaussian_split_with_noise(const MeasurementVec& y, double tau, const CovModel& sigma,
                                    const Vector& z) {
  require_tau(tau);
  require(y.family() == NoiseFamily::Gaussian, ErrorCode::InvalidArgument,
          "Gaussian split needs a Gaussian measurement");
  require(z.size() == y.data().size() && sigma.dim() == y.size(), ErrorCode::DimensionMismatch,
          "noise dimension differs from measurement");
  Vector y1 = y.data() + tau * z;
  Vector y2 = y.data() - z / tau;
  return SplitPair{MeasurementVec(std::move(y1), NoiseFamily::Gaussian),
                   MeasurementVec(std::move(y2), NoiseFamily::Gaussian),
                   GaussianConfig{tau, sigma}};
}

SplitPair gaussian_split(const MeasurementVec& y, double tau, const CovModel& sigma, Rng& rng) {
  require_tau(tau);
  require(sigma.dim() == y.size(), ErrorCode::DimensionMismatch,
          "covariance dimension differs from measurement");
  const Vector z = gaussian_sample(rng, sigma);
  return gaussian_split_with_noise(y, tau, sigma, z);
}

SplitPair gaussian_split_beta(const MeasurementVec& y, double beta, const CovModel& sigma,
                              Rng& rng) {
  require_beta(beta);
  require(y.family() == NoiseFamily::Gaussian, ErrorCode::InvalidArgument,
          "Gaussian split needs a Gaussian measurement");
  require(sigma.dim() == y.size(), ErrorCode::DimensionMismatch,
          "covariance dimension differs from measurement");
  const double tau = beta_to_tau(beta);
  // Conditional law of Y1 given y: N(y, (beta / (1 - beta)) Sigma).
  Vector y1 = y.data() + tau * gaussian_sample(rng, sigma);
  Vector y2 = y.data() / beta - ((1.0 - beta) / beta) * y1;
  return SplitPair{MeasurementVec(std::move(y1), NoiseFamily::Gaussian),
                   MeasurementVec(std::move(y2), NoiseFamily::Gaussian),
                   GaussianConfig{tau, sigma}};
}

std::vector<std::uint64_t> poisson_counts(const Vector& y, double gamma) {
  require(std::isfinite(gamma) && gamma > 0.0, ErrorCode::InvalidArgument, "gamma must be positive");
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    require(y[i] >= -kCountTolerance * gamma, ErrorCode::NegativeEntries,
            "entry " + std::to_string(i) + " is negative");
    const double c = y[i] / gamma;
    const double r = std::round(c);
    require(std::fabs(c - r) <= kCountTolerance, ErrorCode::NonIntegerCounts,
            "entry " + std::to_string(i) + " is not an integer multiple of gamma");
    counts[static_cast<std::size_t>(i)] = static_cast<std::uint64_t>(std::max(r, 0.0));
  }
  return counts;
}

SplitPair poisson_split_with_draws(const MeasurementVec& y, double beta, double gamma,
                                   const std::vector<std::uint64_t>& z) {
  require_beta(beta);
  const auto counts = poisson_counts(y.data(), gamma);
  require(z.size() == counts.size(), ErrorCode::DimensionMismatch,
          "binomial draws differ in length from measurement");
  const auto m = static_cast<Eigen::Index>(counts.size());
  Vector y1(m), y2(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto zi = z[static_cast<std::size_t>(i)];
    require(zi <= counts[static_cast<std::size_t>(i)], ErrorCode::InvalidArgument,
            "binomial draw exceeds photon count");
    const double thinned = gamma * static_cast<double>(zi);
    y1[i] = std::max(0.0, (y.data()[i] - thinned) / (1.0 - beta));
    // Equal to y / beta - ((1 - beta) / beta) y1 without the cancellation.
    y2[i] = thinned / beta;
  }
  return SplitPair{MeasurementVec(std::move(y1), NoiseFamily::ScaledPoisson),
                   MeasurementVec(std::move(y2), NoiseFamily::ScaledPoisson),
                   PoissonConfig{beta, gamma}};
}

SplitPair poisson_split(const MeasurementVec& y, double beta, double gamma, Rng& rng) {
  require_beta(beta);
  const auto counts = poisson_counts(y.data(), gamma);
  std::vector<std::uint64_t> z(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) z[i] = rng.binomial(counts[i], beta);
  return poisson_split_with_draws(y, beta, gamma, z);
}

SplitPair apply(const SplitConfig& config, const MeasurementVec& y, Rng& rng) {
  validate(config);
  if (const auto* g = std::get_if<GaussianConfig>(&config)) {
    return gaussian_split(y, g->tau, g->sigma, rng);
  }
  const auto& p = std::get<PoissonConfig>(config);
  return poisson_split(y, p.beta, p.gamma, rng);
}

double beta_to_tau(double beta) {
  require_beta(beta);
  return std::sqrt(beta / (1.0 - beta));
}

double tau_to_beta(double tau) {
  require_tau(tau);
  const double t2 = tau * tau;
  return t2 / (1.0 + t2);
}

CovModel inflated_covariance(const CovModel& sigma, double tau) {
  require_tau(tau);
  return sigma.scaled((1.0 + tau * tau) / (tau * tau));
}

}  // namespace etest::split
