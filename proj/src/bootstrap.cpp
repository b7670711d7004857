#include "etest/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace etest::boot {

void BootstrapConfig::validate() const {
  require(k >= 1, ErrorCode::InvalidArgument, "bootstrap needs K >= 1");
  require(std::isfinite(sim_floor) && sim_floor > 0.0, ErrorCode::InvalidArgument,
          "similarity floor must be positive");
  require(group.max_dx >= 0 && group.max_dy >= 0, ErrorCode::InvalidArgument,
          "shift ranges must be non-negative");
  require(std::isfinite(kappa), ErrorCode::InvalidArgument, "kappa must be finite");
}

std::vector<ImageVec> equivariant_bootstrap(const MeasurementVec& y2, const ForwardModel& forward,
                                            const CovModel& sigma_tau,
                                            const ops::Estimator& estimator,
                                            const ops::CyclicShift2D& group, std::size_t k,
                                            std::uint64_t seed, Exec exec) {
  require(k >= 1, ErrorCode::InvalidArgument, "bootstrap needs K >= 1");
  require(y2.family() == NoiseFamily::Gaussian, ErrorCode::InvalidArgument,
          "equivariant bootstrap resamples Gaussian noise only");
  const ImageVec x_hat = estimator.estimate(y2);
  require(x_hat.shape().has_value(), ErrorCode::MissingShape,
          "bootstrap needs an estimator with an image shape");
  require(forward.output_dim(x_hat.size()) == sigma_tau.dim(), ErrorCode::DimensionMismatch,
          "noise covariance differs from measurement size");

  std::vector<std::optional<ImageVec>> slots(k);
  for_each_trial(exec, k, [&](std::size_t i) {
    Rng rng = Rng::child(seed, i);
    const ops::Shift2D g = group.sample(rng);
    const ImageVec shifted = ops::apply_group(group, g, x_hat);
    const Vector y_tilde = forward.apply(shifted.data()) + gaussian_sample(rng, sigma_tau);
    const ImageVec x_tilde = estimator.estimate(y_tilde);
    slots[i] = ops::invert_group(group, g, ImageVec(x_tilde.data(), x_hat.shape()));
  });

  std::vector<ImageVec> out;
  out.reserve(k);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

double log_ratio_statistic(double d0, double d1, double sim_floor, bool* clamped) {
  const bool c = d0 < sim_floor || d1 < sim_floor;
  if (clamped) *clamped = c;
  return std::log(std::max(d0, sim_floor)) - std::log(std::max(d1, sim_floor));
}

BootstrapStatistics bootstrap_statistics(std::span<const ImageVec> samples,
                                         const ops::SphereEncoder& encoder,
                                         const HypothesisPair& hyp, evalue::Temperature lambda,
                                         double sim_floor) {
  require(!samples.empty(), ErrorCode::InvalidArgument, "no bootstrap samples");
  require(sim_floor > 0.0, ErrorCode::InvalidArgument, "similarity floor must be positive");
  BootstrapStatistics out;
  out.t_tilde.reserve(samples.size());
  for (const auto& x : samples) {
    const auto phi = encoder.encode(x);
    bool clamped = false;
    out.t_tilde.push_back(log_ratio_statistic(lambda.value * phi.dot(hyp.q0),
                                              lambda.value * phi.dot(hyp.q1), sim_floor, &clamped));
    if (clamped) ++out.clamped;
  }
  return out;
}

double sign_test_tail(std::size_t k, std::size_t s) {
  require(s <= k, ErrorCode::InvalidArgument, "count exceeds sample size");
  if (s == 0) return 1.0;
  if (k <= 62) {
    // Binomial coefficients and their partial sums stay below 2^62.
    std::uint64_t c = 1;  // C(k, j)
    std::uint64_t tail = 0;
    for (std::size_t j = 0; j <= k; ++j) {
      if (j >= s) tail += c;
      c = c * (k - j) / (j + 1);
    }
    return std::ldexp(static_cast<double>(tail), -static_cast<int>(k));
  }
  const double log_half = -static_cast<double>(k) * std::log(2.0);
  auto log_term = [&](std::size_t j) {
    return std::lgamma(static_cast<double>(k) + 1.0) - std::lgamma(static_cast<double>(j) + 1.0) -
           std::lgamma(static_cast<double>(k - j) + 1.0) + log_half;
  };
  double max_term = -std::numeric_limits<double>::infinity();
  for (std::size_t j = s; j <= k; ++j) max_term = std::max(max_term, log_term(j));
  double acc = 0.0;
  for (std::size_t j = s; j <= k; ++j) acc += std::exp(log_term(j) - max_term);
  return std::min(1.0, std::exp(max_term + std::log(acc)));
}

BootstrapResult sign_test(std::span<const double> t_tilde, double kappa,
                          std::span<const double> levels) {
  require(!t_tilde.empty(), ErrorCode::InvalidArgument, "sign test needs K >= 1");
  evalue::validate_levels(levels);
  BootstrapResult out;
  out.t_tilde.assign(t_tilde.begin(), t_tilde.end());
  out.below = static_cast<std::size_t>(
      std::count_if(t_tilde.begin(), t_tilde.end(), [&](double t) { return t < kappa; }));
  out.p_value = sign_test_tail(t_tilde.size(), out.below);
  for (double a : levels) {
    out.decisions.push_back(
        {a, out.p_value <= a ? evalue::Decision::Reject : evalue::Decision::FailToReject});
  }
  return out;
}

double median(std::vector<double> values) {
  require(!values.empty(), ErrorCode::InvalidArgument, "median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double calibrate_kappa(std::span<const double> null_statistics, double fraction) {
  require(std::isfinite(fraction), ErrorCode::InvalidArgument, "kappa fraction must be finite");
  return fraction * median(std::vector<double>(null_statistics.begin(), null_statistics.end()));
}

}  // namespace etest::boot
