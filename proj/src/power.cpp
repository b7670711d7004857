#include "etest/power.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/SVD>

#include "etest/evalue.hpp"
#include "etest/split.hpp"

namespace etest::power {

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

void PowerSpec::validate() const {
  require(x_star.size() >= 1, ErrorCode::InvalidArgument, "empty ground truth");
  const std::size_t mm = m();
  require(phi.cols() == x_star.size(), ErrorCode::DimensionMismatch,
          "encoder columns differ from image size");
  require(sigma.dim() == mm, ErrorCode::DimensionMismatch,
          "noise covariance differs from measurement size");
  require(gain.rows() == x_star.size() && static_cast<std::size_t>(gain.cols()) == mm,
          ErrorCode::DimensionMismatch, "estimator gain must be n x m");
  require(offset.size() == x_star.size(), ErrorCode::DimensionMismatch,
          "estimator offset must have n entries");
  require(delta_q.size() == phi.rows(), ErrorCode::DimensionMismatch,
          "delta_q dimension differs from encoder output");
  require(std::isfinite(tau) && tau > 0.0, ErrorCode::InvalidArgument, "tau must be positive");
  require(std::isfinite(lambda) && lambda > 0.0, ErrorCode::InvalidArgument,
          "lambda must be positive");
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
}

namespace {

Matrix noise_map(const PowerSpec& spec) {
  const CovModel sigma_tau = split::inflated_covariance(spec.sigma, spec.tau);
  return spec.phi * spec.gain * sigma_tau.sqrt_matrix();
}

double normalized_statistic(const PowerSpec& spec, const Vector& x_hat) {
  const Vector u = spec.phi * x_hat;
  const double norm = u.norm();
  require(norm > ops::SphereEncoder::kMinNorm, ErrorCode::ZeroImageEmbedding,
          "Phi x_hat is (near) zero");
  return spec.lambda * spec.delta_q.dot(u) / norm;
}

}  // namespace

LinearizedStatistic linearize(const PowerSpec& spec) {
  spec.validate();
  Vector anchor = spec.mode == Mode::PaperConsistent
                      ? Vector(spec.phi * spec.x_star)
                      : Vector(spec.phi * (spec.offset + spec.gain * spec.forward.apply(spec.x_star)));
  const double norm = anchor.norm();
  require(norm > ops::SphereEncoder::kMinNorm, ErrorCode::ZeroImageEmbedding,
          spec.mode == Mode::PaperConsistent ? "Phi x_star is (near) zero"
                                             : "Phi x_hat(A x_star) is (near) zero");
  LinearizedStatistic out;
  out.mean = spec.lambda * spec.delta_q.dot(anchor) / norm;
  out.noise_direction = (spec.lambda / norm) * (noise_map(spec).transpose() * spec.delta_q);
  out.stddev = out.noise_direction.norm();
  out.anchor = std::move(anchor);
  return out;
}

double closed_form_power(const PowerSpec& spec) {
  const auto lin = linearize(spec);
  const double threshold = std::log(spec.alpha);
  if (lin.stddev == 0.0) return lin.mean <= threshold ? 1.0 : 0.0;
  return normal_cdf((threshold - lin.mean) / lin.stddev);
}

McEstimate mc_power(const PowerSpec& spec, std::uint64_t trials, Fidelity fidelity,
                    std::uint64_t seed, Exec exec) {
  require(trials >= 100, ErrorCode::InvalidArgument, "mc_power needs at least 100 trials");
  spec.validate();
  const auto m = static_cast<Eigen::Index>(spec.m());

  // Per-fidelity precomputation shared (read-only) by all trials.
  const CovModel sigma_tau = split::inflated_covariance(spec.sigma, spec.tau);
  LinearizedStatistic lin;
  if (fidelity == Fidelity::Linearized) lin = linearize(spec);
  const Vector clean = spec.forward.apply(spec.x_star);
  const ops::SphereEncoder encoder = ops::SphereEncoder::linear(spec.phi);
  const ops::Estimator estimator = ops::Estimator::affine(spec.offset, spec.gain);

  std::vector<std::uint8_t> rejected(trials, 0);
  for_each_trial(exec, trials, [&](std::size_t i) {
    Rng rng = Rng::child(seed, i);
    double t = 0.0;
    switch (fidelity) {
      case Fidelity::Linearized: {
        Vector xi(m);
        for (Eigen::Index k = 0; k < m; ++k) xi[k] = rng.normal();
        t = lin.mean + lin.noise_direction.dot(xi);
        break;
      }
      case Fidelity::ExactStatistic: {
        const Vector y2 = clean + gaussian_sample(rng, sigma_tau);
        t = normalized_statistic(spec, spec.offset + spec.gain * y2);
        break;
      }
      case Fidelity::FullPipeline: {
        const MeasurementVec y(clean + gaussian_sample(rng, spec.sigma), NoiseFamily::Gaussian);
        const auto pair = split::gaussian_split(y, spec.tau, spec.sigma, rng);
        const auto phi = encoder.encode(estimator.estimate(pair.y2));
        t = spec.lambda * evalue::raw_score(phi.vector(), spec.delta_q);
        break;
      }
    }
    rejected[i] = evalue::markov_rejects(t, spec.alpha) ? 1 : 0;
  });

  std::uint64_t count = 0;
  for (auto r : rejected) count += r;
  const double p = static_cast<double>(count) / static_cast<double>(trials);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(trials)), count, trials};
}

Vector top_noise_direction(const PowerSpec& spec) {
  spec.validate();
  Eigen::JacobiSVD<Matrix> svd(noise_map(spec), Eigen::ComputeThinU);
  return svd.matrixU().col(0);
}

}  // namespace etest::power
