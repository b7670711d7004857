#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "etest/bootstrap.hpp"
#include "etest/operators.hpp"
#include "etest/split.hpp"
#include "etest/types.hpp"

namespace etest::harness {

inline constexpr const char* kScenarioSchema = "etest.scenario/1";

// Declarative description of a Monte Carlo experiment. JSON form mirrors the
// field names below; unknown keys are rejected.

struct NoiseSpec {
  NoiseFamily family = NoiseFamily::Gaussian;
  double sigma = 0.5617;  // Gaussian standard deviation
  double gamma = 0.5;     // scaled-Poisson shot-noise level
};

struct SplitSpec {
  std::optional<double> tau;   // Gaussian
  std::optional<double> beta;  // Poisson, or Gaussian via tau = sqrt(beta / (1 - beta))
};

struct ForwardSpec {
  enum class Kind { Identity, Mask, Dense } kind = Kind::Identity;
  double keep_prob = 0.2;  // Mask: Bernoulli probability of observing a pixel
  std::size_t rows = 0;    // Dense: number of measurements
  std::uint64_t seed = 3;
};

struct EstimatorSpec {
  enum class Kind { Identity, AffineMmse, External } kind = Kind::AffineMmse;
  double prior_mean = 0.5;   // constant prior image
  bool prior_class_mean = false;  // JSON "class_mean": prior mean (c0 + c1) / 2 instead
  double prior_scale = 0.25; // prior standard deviation per pixel
  std::string command;
  double timeout_s = 300.0;
};

struct EncoderSpec {
  std::uint64_t seed = 11;  // Phi has i.i.d. N(0, 1/n) entries
};

struct HypothesisSpec {
  enum class Mode { Synthetic, FromEmbeddings } mode = Mode::Synthetic;
  std::string path;
  std::string q0_id;
  std::string q1_id;
};

struct SynthSpec {
  std::size_t height = 8;
  std::size_t width = 8;
  std::size_t channels = 1;
  std::size_t d = 16;
  std::uint64_t prototype_seed0 = 101;
  std::uint64_t prototype_seed1 = 202;
  double base = 0.5;       // shared mean intensity of both prototypes
  double contrast = 0.25;  // per-pixel spread of a prototype around `base`
  std::optional<double> contrast1;  // class-1 spread when it differs from `contrast`
  std::size_t nuisance_dim = 8;
  double nuisance_scale = 0.05;
  std::uint64_t nuisance_seed = 303;

  std::size_t n() const noexcept { return height * width * channels; }
  double contrast_of(int cls) const noexcept { return cls == 1 && contrast1 ? *contrast1 : contrast; }
};

struct LambdaSpec {
  enum class Mode { Fixed, Calibrate } mode = Mode::Calibrate;
  double value = 1.0;
  double target = 0.98;
  double holdout_fraction = 0.2;
  double lambda_max = 100.0;
};

struct BootstrapSpec {
  std::size_t k = 50;
  double kappa = 0.0;
  int max_dx = 2;
  int max_dy = 2;
  double sim_floor = boot::kDefaultSimFloor;
};

struct ScenarioConfig {
  std::string name = "scenario";
  NoiseSpec noise;
  SplitSpec split;
  ForwardSpec forward;
  EstimatorSpec estimator;
  EncoderSpec encoder;
  HypothesisSpec hypotheses;
  SynthSpec synth;
  LambdaSpec lambda;
  std::vector<double> levels = {0.02, 0.05, 0.1, 0.15, 0.2};
  std::size_t trials_null = 1000;
  std::size_t trials_alt = 1000;
  std::size_t repeats = 1;
  std::uint64_t master_seed = 1;
  std::optional<BootstrapSpec> bootstrap;

  void validate() const;
  /// Split parameter as tau (Gaussian) or beta (Poisson), with defaults 1 and 0.15.
  double tau() const;
  double beta() const;
};

ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioConfig& cfg);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// FNV-1a 64 of the canonical JSON form, as 16 hex digits.
std::string config_hash(const ScenarioConfig& cfg);

/// A scenario with every random ingredient (operators, prototypes, nuisance
/// basis) drawn; shared read-only across trials.
struct Scenario {
  ScenarioConfig config;
  Shape shape;
  ForwardModel forward;
  ops::SphereEncoder encoder;
  HypothesisPair hypotheses;
  Vector prototype0;
  Vector prototype1;
  Matrix nuisance_basis;  // n x nuisance_dim, orthonormal columns
  CovModel noise_cov;     // Gaussian measurement covariance (or its Poisson surrogate)
  CovModel y2_cov;        // covariance of y2 used by the estimator and the bootstrap
  split::SplitConfig split;
  ops::Estimator estimator;

  std::size_t n() const noexcept { return shape.size(); }
  std::size_t m() const { return forward.output_dim(n()); }
  const Vector& prototype(int cls) const { return cls == 0 ? prototype0 : prototype1; }

  /// x_star = c_cls + U w, w ~ N(0, nuisance_scale^2 I); clamped to be
  /// non-negative for Poisson scenarios.
  Vector draw_ground_truth(int cls, Rng& rng) const;
  /// Noisy measurement of x_star under the scenario's noise model.
  MeasurementVec measure(const Vector& x_star, Rng& rng) const;
};

/// Materializes the synthetic ground-truth model: prototypes c0, c1, the
/// encoder Phi, and text embeddings q_i = phi(c_i) (or embeddings from file,
/// with prototypes chosen as minimum-norm preimages).
Scenario synth_scenario(const ScenarioConfig& cfg);

/// Random Gaussian matrix with i.i.d. N(0, scale^2) entries.
Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double scale, Rng& rng);

}  // namespace etest::harness
