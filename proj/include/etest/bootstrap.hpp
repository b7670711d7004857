#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "etest/evalue.hpp"
#include "etest/operators.hpp"
#include "etest/parallel.hpp"

namespace etest::boot {

inline constexpr double kDefaultSimFloor = 1e-6;

// Equivariant parametric bootstrap. Starting from x_hat = estimate(y2), each
// sample shifts the estimate by a random group element g_k, re-measures it
// with fresh noise, re-estimates, and undoes the shift:
//   x_k = g_k^{-1} estimate(A g_k x_hat + sqrt(Sigma_tau) eps_k).
// This resampling recipe is an interpretation; equivariant-bootstrap
// references describe the general scheme, not this exact recipe.

struct BootstrapConfig {
  std::size_t k = 200;
  ops::CyclicShift2D group;
  double kappa = 0.0;
  double sim_floor = kDefaultSimFloor;

  void validate() const;
};

/// Sample k uses Rng::child(seed, k).
std::vector<ImageVec> equivariant_bootstrap(const MeasurementVec& y2, const ForwardModel& forward,
                                            const CovModel& sigma_tau,
                                            const ops::Estimator& estimator,
                                            const ops::CyclicShift2D& group, std::size_t k,
                                            std::uint64_t seed, Exec exec = Exec::Parallel);

struct BootstrapStatistics {
  std::vector<double> t_tilde;
  std::size_t clamped = 0;  // samples where either similarity hit the floor
};

/// t_k = log(max(D0k, floor)) - log(max(D1k, floor)), Dik = lambda phi(x_k)^T qi.
BootstrapStatistics bootstrap_statistics(std::span<const ImageVec> samples,
                                         const ops::SphereEncoder& encoder,
                                         const HypothesisPair& hyp, evalue::Temperature lambda,
                                         double sim_floor = kDefaultSimFloor);
double log_ratio_statistic(double d0, double d1, double sim_floor, bool* clamped = nullptr);

struct BootstrapResult {
  std::vector<double> t_tilde;
  std::size_t below = 0;  // S = #{t_k < kappa}
  double p_value = 1.0;
  std::vector<evalue::LevelDecision> decisions;
};

/// P(Binomial(k, 1/2) >= s). Exact integer arithmetic for k <= 62, log-space
/// summation beyond.
double sign_test_tail(std::size_t k, std::size_t s);

/// One-sided sign test of H0: median >= kappa against H1: median < kappa.
/// Rejects at alpha iff p <= alpha.
BootstrapResult sign_test(std::span<const double> t_tilde, double kappa,
                          std::span<const double> levels);

/// kappa = fraction * median(null_statistics).
double calibrate_kappa(std::span<const double> null_statistics, double fraction = 0.01);

double median(std::vector<double> values);

}  // namespace etest::boot
