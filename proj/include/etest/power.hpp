#pragma once

#include <cstdint>

#include "etest/operators.hpp"
#include "etest/parallel.hpp"
#include "etest/types.hpp"

namespace etest::power {

/// Standard normal CDF, 0.5 * erfc(-x / sqrt 2).
double normal_cdf(double x) noexcept;

enum class Mode {
  /// Mean uses Phi x_star, i.e. assumes x_hat(A x_star) = x_star.
  PaperConsistent,
  /// Mean uses Phi x_hat(A x_star) = Phi (b + B A x_star).
  ExactAffine,
};

enum class Fidelity { Linearized, ExactStatistic, FullPipeline };

/// Linear-Gaussian setting for the rejection probability under H1.
struct PowerSpec {
  Matrix phi;            // d x n encoder
  ForwardModel forward;  // A
  CovModel sigma;        // measurement noise covariance (m x m)
  double tau = 1.0;
  Vector x_star;         // ground truth (n)
  Vector offset;         // b
  Matrix gain;           // B (n x m), the estimator Jacobian d x_hat / d y
  Vector delta_q;        // q0 - q1 (d)
  double lambda = 1.0;
  double alpha = 0.05;
  Mode mode = Mode::ExactAffine;

  void validate() const;
  std::size_t n() const noexcept { return static_cast<std::size_t>(x_star.size()); }
  std::size_t m() const { return forward.output_dim(n()); }
};

/// Gaussian surrogate t ~ N(mean, stddev^2) of the linearized statistic.
struct LinearizedStatistic {
  double mean;
  double stddev;
  Vector noise_direction;  // (Phi B sqrt(Sigma_tau))^T delta_q scaled by lambda / ||u||
  Vector anchor;           // u = Phi x_star or Phi x_hat(A x_star)
};

LinearizedStatistic linearize(const PowerSpec& spec);

/// P(t <= log alpha) under the linearized model; indicator(mean <= log alpha)
/// when the surrogate is degenerate.
double closed_form_power(const PowerSpec& spec);

struct McEstimate {
  double power;
  double std_error;
  std::uint64_t rejections;
  std::uint64_t trials;
};

/// Monte Carlo rejection frequency. Trial i uses Rng::child(seed, i).
McEstimate mc_power(const PowerSpec& spec, std::uint64_t trials, Fidelity fidelity,
                    std::uint64_t seed, Exec exec = Exec::Parallel);

/// Leading left singular vector of Phi B sqrt(Sigma_tau) (the embedding
/// direction with the largest estimator noise).
Vector top_noise_direction(const PowerSpec& spec);

}  // namespace etest::power
