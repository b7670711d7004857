#include "etest/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <Eigen/QR>

#include "etest/embedding_io.hpp"

namespace etest::harness {

using nlohmann::json;

namespace {

/// Reads an object while tracking which keys were consumed, so that unknown
/// keys can be reported once parsing is done.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string context) : j_(j), context_(std::move(context)) {
    require(j_.is_object(), ErrorCode::ConfigError, context_ + " must be a JSON object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception& e) {
      fail(ErrorCode::ConfigError, context_ + "." + key + ": " + e.what());
    }
  }

  template <typename T>
  T required(const std::string& key) {
    require(has(key), ErrorCode::ConfigError, context_ + "." + key + " is required");
    return get<T>(key, T{});
  }

  const json& child(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      require(seen_.contains(key), ErrorCode::ConfigError,
              "unknown key '" + key + "' in " + context_);
    }
  }

 private:
  const json& j_;
  std::string context_;
  std::set<std::string> seen_;
};

NoiseSpec parse_noise(const json& j) {
  ObjectReader r(j, "noise");
  NoiseSpec s;
  const auto family = r.required<std::string>("family");
  split::require_supported_family(family);
  s.family = family == "poisson" ? NoiseFamily::ScaledPoisson : NoiseFamily::Gaussian;
  s.sigma = r.get("sigma", s.sigma);
  s.gamma = r.get("gamma", s.gamma);
  r.finish();
  return s;
}

SplitSpec parse_split(const json& j) {
  ObjectReader r(j, "split");
  SplitSpec s;
  if (r.has("tau")) s.tau = r.get("tau", 1.0);
  if (r.has("beta")) s.beta = r.get("beta", 0.15);
  r.finish();
  return s;
}

ForwardSpec parse_forward(const json& j) {
  ObjectReader r(j, "forward");
  ForwardSpec s;
  const auto kind = r.get<std::string>("kind", "identity");
  if (kind == "identity") {
    s.kind = ForwardSpec::Kind::Identity;
  } else if (kind == "mask") {
    s.kind = ForwardSpec::Kind::Mask;
  } else if (kind == "dense") {
    s.kind = ForwardSpec::Kind::Dense;
  } else {
    fail(ErrorCode::ConfigError, "forward.kind must be identity, mask or dense");
  }
  s.keep_prob = r.get("keep_prob", s.keep_prob);
  s.rows = r.get("rows", s.rows);
  s.seed = r.get("seed", s.seed);
  r.finish();
  return s;
}

EstimatorSpec parse_estimator(const json& j) {
  ObjectReader r(j, "estimator");
  EstimatorSpec s;
  const auto kind = r.get<std::string>("kind", "affine_mmse");
  if (kind == "identity") {
    s.kind = EstimatorSpec::Kind::Identity;
  } else if (kind == "affine_mmse") {
    s.kind = EstimatorSpec::Kind::AffineMmse;
  } else if (kind == "external") {
    s.kind = EstimatorSpec::Kind::External;
  } else {
    fail(ErrorCode::ConfigError, "estimator.kind must be identity, affine_mmse or external");
  }
  if (r.has("prior_mean") && j.at("prior_mean").is_string()) {
    require(j.at("prior_mean") == "class_mean", ErrorCode::ConfigError,
            "estimator.prior_mean must be a number or \"class_mean\"");
    s.prior_class_mean = true;
  } else {
    s.prior_mean = r.get("prior_mean", s.prior_mean);
  }
  s.prior_scale = r.get("prior_scale", s.prior_scale);
  s.command = r.get("command", s.command);
  s.timeout_s = r.get("timeout_s", s.timeout_s);
  r.finish();
  return s;
}

EncoderSpec parse_encoder(const json& j) {
  ObjectReader r(j, "encoder");
  EncoderSpec s;
  const auto kind = r.get<std::string>("kind", "linear");
  require(kind == "linear", ErrorCode::ConfigError, "encoder.kind must be linear");
  s.seed = r.get("seed", s.seed);
  r.finish();
  return s;
}

HypothesisSpec parse_hypotheses(const json& j) {
  ObjectReader r(j, "hypotheses");
  HypothesisSpec s;
  const auto mode = r.get<std::string>("mode", "synthetic");
  if (mode == "synthetic") {
    s.mode = HypothesisSpec::Mode::Synthetic;
  } else if (mode == "embeddings") {
    s.mode = HypothesisSpec::Mode::FromEmbeddings;
    s.path = r.required<std::string>("path");
    s.q0_id = r.required<std::string>("q0");
    s.q1_id = r.required<std::string>("q1");
  } else {
    fail(ErrorCode::ConfigError, "hypotheses.mode must be synthetic or embeddings");
  }
  r.finish();
  return s;
}

SynthSpec parse_synth(const json& j) {
  ObjectReader r(j, "synth");
  SynthSpec s;
  s.height = r.get("height", s.height);
  s.width = r.get("width", s.width);
  s.channels = r.get("channels", s.channels);
  s.d = r.get("d", s.d);
  s.prototype_seed0 = r.get("prototype_seed0", s.prototype_seed0);
  s.prototype_seed1 = r.get("prototype_seed1", s.prototype_seed1);
  s.base = r.get("base", s.base);
  s.contrast = r.get("contrast", s.contrast);
  if (r.has("contrast1")) s.contrast1 = r.get("contrast1", s.contrast);
  s.nuisance_dim = r.get("nuisance_dim", s.nuisance_dim);
  s.nuisance_scale = r.get("nuisance_scale", s.nuisance_scale);
  s.nuisance_seed = r.get("nuisance_seed", s.nuisance_seed);
  r.finish();
  return s;
}

LambdaSpec parse_lambda(const json& j) {
  ObjectReader r(j, "lambda");
  LambdaSpec s;
  const auto mode = r.get<std::string>("mode", "calibrate");
  if (mode == "fixed") {
    s.mode = LambdaSpec::Mode::Fixed;
    s.value = r.required<double>("value");
  } else if (mode == "calibrate") {
    s.mode = LambdaSpec::Mode::Calibrate;
  } else {
    fail(ErrorCode::ConfigError, "lambda.mode must be fixed or calibrate");
  }
  s.target = r.get("target", s.target);
  s.holdout_fraction = r.get("holdout_fraction", s.holdout_fraction);
  s.lambda_max = r.get("lambda_max", s.lambda_max);
  r.finish();
  return s;
}

BootstrapSpec parse_bootstrap(const json& j) {
  ObjectReader r(j, "bootstrap");
  BootstrapSpec s;
  s.k = r.get("k", s.k);
  s.kappa = r.get("kappa", s.kappa);
  s.max_dx = r.get("max_dx", s.max_dx);
  s.max_dy = r.get("max_dy", s.max_dy);
  s.sim_floor = r.get("sim_floor", s.sim_floor);
  r.finish();
  return s;
}

}  // namespace

// --- ScenarioConfig ----------------------------------------------------------

double ScenarioConfig::tau() const {
  if (split.tau) return *split.tau;
  if (split.beta) return split::beta_to_tau(*split.beta);
  return 1.0;
}

double ScenarioConfig::beta() const {
  if (split.beta) return *split.beta;
  if (split.tau) return split::tau_to_beta(*split.tau);
  return 0.15;
}

void ScenarioConfig::validate() const {
  auto check = [](bool ok, const std::string& what) { require(ok, ErrorCode::ConfigError, what); };
  check(!levels.empty(), "levels must be non-empty");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    check(levels[i] > 0.0 && levels[i] < 1.0, "levels must lie in (0, 1)");
    if (i > 0) check(levels[i] > levels[i - 1], "levels must be strictly increasing");
  }
  check(trials_null >= 1, "trials_null must be >= 1");
  check(repeats >= 1, "repeats must be >= 1");
  check(!(split.tau && split.beta), "give either split.tau or split.beta, not both");
  if (split.tau) check(*split.tau > 0.0, "split.tau must be positive");
  if (split.beta) check(*split.beta > 0.0 && *split.beta < 1.0, "split.beta must lie in (0, 1)");
  if (noise.family == NoiseFamily::Gaussian) {
    check(std::isfinite(noise.sigma) && noise.sigma >= 0.0, "noise.sigma must be >= 0");
  } else {
    check(std::isfinite(noise.gamma) && noise.gamma > 0.0, "noise.gamma must be positive");
    check(!bootstrap.has_value(), "the bootstrap resamples Gaussian noise only");
    check(hypotheses.mode == HypothesisSpec::Mode::Synthetic,
          "Poisson scenarios need synthetic (non-negative) prototypes");
  }
  check(synth.n() >= 1, "synth image must have at least one pixel");
  check(synth.d >= 2, "synth.d must be >= 2");
  check(synth.nuisance_dim <= synth.n(), "synth.nuisance_dim exceeds the image size");
  check(synth.nuisance_scale >= 0.0 && synth.contrast >= 0.0 && synth.contrast_of(1) >= 0.0,
        "synth scales must be >= 0");
  if (forward.kind == ForwardSpec::Kind::Mask) {
    check(forward.keep_prob > 0.0 && forward.keep_prob <= 1.0, "forward.keep_prob must lie in (0, 1]");
  }
  if (forward.kind == ForwardSpec::Kind::Dense) check(forward.rows >= 1, "forward.rows must be >= 1");
  if (estimator.kind == EstimatorSpec::Kind::AffineMmse) {
    check(estimator.prior_scale > 0.0, "estimator.prior_scale must be positive");
  }
  if (estimator.kind == EstimatorSpec::Kind::External) {
    check(!estimator.command.empty(), "estimator.command is required for external estimators");
    check(estimator.timeout_s > 0.0, "estimator.timeout_s must be positive");
  }
  if (lambda.mode == LambdaSpec::Mode::Fixed) {
    check(lambda.value > 0.0, "lambda.value must be positive");
  } else {
    check(lambda.target > 0.0 && lambda.target <= 1.0, "lambda.target must lie in (0, 1]");
    check(lambda.holdout_fraction > 0.0, "lambda.holdout_fraction must be positive");
    check(lambda.lambda_max > 0.0, "lambda.lambda_max must be positive");
  }
  if (bootstrap) {
    check(bootstrap->k >= 1, "bootstrap.k must be >= 1");
    check(bootstrap->max_dx >= 0 && bootstrap->max_dy >= 0, "bootstrap shifts must be >= 0");
    check(bootstrap->sim_floor > 0.0, "bootstrap.sim_floor must be positive");
  }
}

ScenarioConfig scenario_from_json(const json& j) {
  ObjectReader r(j, "scenario");
  const auto schema = r.required<std::string>("schema");
  require(schema == kScenarioSchema, ErrorCode::ConfigError,
          "unsupported scenario schema '" + schema + "'");
  ScenarioConfig c;
  c.name = r.get("name", c.name);
  if (r.has("noise")) c.noise = parse_noise(r.child("noise"));
  if (r.has("split")) c.split = parse_split(r.child("split"));
  if (r.has("forward")) c.forward = parse_forward(r.child("forward"));
  if (r.has("estimator")) c.estimator = parse_estimator(r.child("estimator"));
  if (r.has("encoder")) c.encoder = parse_encoder(r.child("encoder"));
  if (r.has("hypotheses")) c.hypotheses = parse_hypotheses(r.child("hypotheses"));
  if (r.has("synth")) c.synth = parse_synth(r.child("synth"));
  if (r.has("lambda")) c.lambda = parse_lambda(r.child("lambda"));
  c.levels = r.get("levels", c.levels);
  c.trials_null = r.get("trials_null", c.trials_null);
  c.trials_alt = r.get("trials_alt", c.trials_alt);
  c.repeats = r.get("repeats", c.repeats);
  c.master_seed = r.get("master_seed", c.master_seed);
  if (r.has("bootstrap") && !r.child("bootstrap").is_null()) {
    c.bootstrap = parse_bootstrap(r.child("bootstrap"));
  }
  r.finish();
  c.validate();
  return c;
}

json to_json(const ScenarioConfig& c) {
  json j;
  j["schema"] = kScenarioSchema;
  j["name"] = c.name;
  j["noise"] = {{"family", std::string(to_string(c.noise.family))}};
  if (c.noise.family == NoiseFamily::Gaussian) {
    j["noise"]["sigma"] = c.noise.sigma;
  } else {
    j["noise"]["gamma"] = c.noise.gamma;
  }
  j["split"] = json::object();
  if (c.split.tau) j["split"]["tau"] = *c.split.tau;
  if (c.split.beta) j["split"]["beta"] = *c.split.beta;

  static constexpr const char* kForward[] = {"identity", "mask", "dense"};
  j["forward"] = {{"kind", kForward[static_cast<int>(c.forward.kind)]}};
  if (c.forward.kind == ForwardSpec::Kind::Mask) {
    j["forward"]["keep_prob"] = c.forward.keep_prob;
    j["forward"]["seed"] = c.forward.seed;
  } else if (c.forward.kind == ForwardSpec::Kind::Dense) {
    j["forward"]["rows"] = c.forward.rows;
    j["forward"]["seed"] = c.forward.seed;
  }

  static constexpr const char* kEstimator[] = {"identity", "affine_mmse", "external"};
  j["estimator"] = {{"kind", kEstimator[static_cast<int>(c.estimator.kind)]}};
  if (c.estimator.kind == EstimatorSpec::Kind::AffineMmse) {
    j["estimator"]["prior_mean"] =
        c.estimator.prior_class_mean ? json("class_mean") : json(c.estimator.prior_mean);
    j["estimator"]["prior_scale"] = c.estimator.prior_scale;
  } else if (c.estimator.kind == EstimatorSpec::Kind::External) {
    j["estimator"]["command"] = c.estimator.command;
    j["estimator"]["timeout_s"] = c.estimator.timeout_s;
  }

  j["encoder"] = {{"kind", "linear"}, {"seed", c.encoder.seed}};
  if (c.hypotheses.mode == HypothesisSpec::Mode::Synthetic) {
    j["hypotheses"] = {{"mode", "synthetic"}};
  } else {
    j["hypotheses"] = {{"mode", "embeddings"},
                       {"path", c.hypotheses.path},
                       {"q0", c.hypotheses.q0_id},
                       {"q1", c.hypotheses.q1_id}};
  }
  const auto& s = c.synth;
  j["synth"] = {{"height", s.height},
                {"width", s.width},
                {"channels", s.channels},
                {"d", s.d},
                {"prototype_seed0", s.prototype_seed0},
                {"prototype_seed1", s.prototype_seed1},
                {"base", s.base},
                {"contrast", s.contrast},
                {"nuisance_dim", s.nuisance_dim},
                {"nuisance_scale", s.nuisance_scale},
                {"nuisance_seed", s.nuisance_seed}};
  if (s.contrast1) j["synth"]["contrast1"] = *s.contrast1;
  if (c.lambda.mode == LambdaSpec::Mode::Fixed) {
    j["lambda"] = {{"mode", "fixed"}, {"value", c.lambda.value}};
  } else {
    j["lambda"] = {{"mode", "calibrate"},
                   {"target", c.lambda.target},
                   {"holdout_fraction", c.lambda.holdout_fraction},
                   {"lambda_max", c.lambda.lambda_max}};
  }
  j["levels"] = c.levels;
  j["trials_null"] = c.trials_null;
  j["trials_alt"] = c.trials_alt;
  j["repeats"] = c.repeats;
  j["master_seed"] = c.master_seed;
  if (c.bootstrap) {
    j["bootstrap"] = {{"k", c.bootstrap->k},
                      {"kappa", c.bootstrap->kappa},
                      {"max_dx", c.bootstrap->max_dx},
                      {"max_dy", c.bootstrap->max_dy},
                      {"sim_floor", c.bootstrap->sim_floor}};
  }
  return j;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  ScenarioConfig cfg = scenario_from_json(j);
  // Embedding paths are resolved relative to the scenario file.
  if (cfg.hypotheses.mode == HypothesisSpec::Mode::FromEmbeddings &&
      std::filesystem::path(cfg.hypotheses.path).is_relative()) {
    cfg.hypotheses.path = (path.parent_path() / cfg.hypotheses.path).string();
  }
  return cfg;
}

std::string config_hash(const ScenarioConfig& cfg) {
  const std::string text = to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// --- Scenario ----------------------------------------------------------------

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double scale, Rng& rng) {
  Matrix a(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  // Row-major fill order so that streams do not depend on Eigen's storage order.
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) a(r, c) = scale * rng.normal();
  }
  return a;
}

namespace {

ForwardModel make_forward(const ForwardSpec& spec, std::size_t n) {
  Rng rng(spec.seed);
  switch (spec.kind) {
    case ForwardSpec::Kind::Identity:
      return ForwardModel::identity();
    case ForwardSpec::Kind::Mask: {
      std::vector<std::uint8_t> mask(n);
      for (auto& m : mask) m = rng.uniform() < spec.keep_prob ? 1 : 0;
      return ForwardModel::binary_mask(std::move(mask));
    }
    case ForwardSpec::Kind::Dense:
      return ForwardModel::dense(gaussian_matrix(spec.rows, n, 1.0 / std::sqrt(double(n)), rng));
  }
  return ForwardModel::identity();
}

Vector make_prototype(const SynthSpec& s, int cls, bool non_negative) {
  Rng rng(cls == 0 ? s.prototype_seed0 : s.prototype_seed1);
  const double contrast = s.contrast_of(cls);
  Vector c(static_cast<Eigen::Index>(s.n()));
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    c[i] = s.base + contrast * rng.normal();
    if (non_negative) c[i] = std::max(c[i], 0.0);
  }
  return c;
}

}  // namespace

Vector Scenario::draw_ground_truth(int cls, Rng& rng) const {
  Vector x = prototype(cls);
  const double scale = config.synth.nuisance_scale;
  if (nuisance_basis.cols() > 0 && scale > 0.0) {
    Vector w(nuisance_basis.cols());
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = scale * rng.normal();
    x += nuisance_basis * w;
  }
  if (config.noise.family == NoiseFamily::ScaledPoisson) x = x.cwiseMax(0.0);
  return x;
}

MeasurementVec Scenario::measure(const Vector& x_star, Rng& rng) const {
  Vector clean = forward.apply(x_star);
  if (config.noise.family == NoiseFamily::Gaussian) {
    return MeasurementVec(clean + gaussian_sample(rng, noise_cov), NoiseFamily::Gaussian);
  }
  const double gamma = config.noise.gamma;
  Vector y(clean.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    y[i] = gamma * static_cast<double>(rng.poisson(std::max(clean[i], 0.0) / gamma));
  }
  return MeasurementVec(std::move(y), NoiseFamily::ScaledPoisson);
}

Scenario synth_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto& s = cfg.synth;
  const std::size_t n = s.n();
  const bool poisson = cfg.noise.family == NoiseFamily::ScaledPoisson;
  const Shape shape{s.height, s.width, s.channels};

  ForwardModel forward = make_forward(cfg.forward, n);
  const std::size_t m = forward.output_dim(n);

  Rng phi_rng(cfg.encoder.seed);
  Matrix phi = gaussian_matrix(s.d, n, 1.0 / std::sqrt(double(n)), phi_rng);
  ops::SphereEncoder encoder = ops::SphereEncoder::linear(phi);

  Vector c0, c1;
  std::optional<HypothesisPair> hyp;
  if (cfg.hypotheses.mode == HypothesisSpec::Mode::Synthetic) {
    c0 = make_prototype(s, 0, poisson);
    c1 = make_prototype(s, 1, poisson);
    hyp.emplace(encoder.encode(c0), encoder.encode(c1), "class0", "class1");
  } else {
    const auto table = read_embeddings(cfg.hypotheses.path);
    const auto& q0 = lookup(table, cfg.hypotheses.q0_id);
    const auto& q1 = lookup(table, cfg.hypotheses.q1_id);
    require(q0.dim() == s.d, ErrorCode::ConfigError,
            "embedding dimension differs from synth.d");
    // Minimum-norm preimages Phi^T (Phi Phi^T)^{-1} q, rescaled to the
    // configured per-pixel contrast; phi(c_i) = q_i up to rounding.
    const Matrix gram = phi * phi.transpose();
    Eigen::LLT<Matrix> llt(gram);
    require(llt.info() == Eigen::Success, ErrorCode::SingularSystem,
            "encoder rows are linearly dependent");
    auto preimage = [&](const UnitEmbedding& q) {
      Vector c = phi.transpose() * llt.solve(q.vector());
      const double rms = c.norm() / std::sqrt(double(n));
      return Vector(c * (s.contrast > 0.0 ? s.contrast / rms : 1.0 / rms));
    };
    c0 = preimage(q0);
    c1 = preimage(q1);
    hyp.emplace(q0, q1, cfg.hypotheses.q0_id, cfg.hypotheses.q1_id);
  }
  require(hyp->delta().norm() > 1e-9, ErrorCode::DegenerateHypotheses,
          "q0 and q1 coincide");

  Matrix nuisance(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(s.nuisance_dim));
  if (s.nuisance_dim > 0) {
    Rng u_rng(s.nuisance_seed);
    const Matrix g = gaussian_matrix(n, s.nuisance_dim, 1.0, u_rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    nuisance = qr.householderQ() * Matrix::Identity(g.rows(), g.cols());
  }

  const double tau = cfg.tau();
  CovModel noise_cov = CovModel::scaled_identity(m, 0.0);
  CovModel y2_cov = noise_cov;
  std::optional<split::SplitConfig> split_cfg;
  if (!poisson) {
    noise_cov = CovModel::scaled_identity(m, cfg.noise.sigma * cfg.noise.sigma);
    y2_cov = split::inflated_covariance(noise_cov, tau);
    split_cfg = split::GaussianConfig{tau, noise_cov};
  } else {
    const double beta = cfg.beta();
    // Var(Y2 | x) = gamma (A x) / beta; evaluated at the prior mean intensity.
    const double level =
        cfg.estimator.prior_class_mean ? 0.5 * (c0.mean() + c1.mean()) : cfg.estimator.prior_mean;
    const double intensity = std::max(level, 1e-3);
    noise_cov = CovModel::scaled_identity(m, cfg.noise.gamma * intensity);
    y2_cov = CovModel::scaled_identity(m, cfg.noise.gamma * intensity / beta);
    split_cfg = split::PoissonConfig{beta, cfg.noise.gamma};
  }

  std::optional<ops::Estimator> estimator;
  switch (cfg.estimator.kind) {
    case EstimatorSpec::Kind::Identity:
      require(m == n, ErrorCode::ConfigError, "identity estimator needs m = n");
      estimator = ops::Estimator::identity(shape);
      break;
    case EstimatorSpec::Kind::AffineMmse: {
      const Vector mean = cfg.estimator.prior_class_mean
                              ? Vector(0.5 * (c0 + c1))
                              : Vector::Constant(static_cast<Eigen::Index>(n), cfg.estimator.prior_mean);
      const CovModel prior =
          CovModel::scaled_identity(n, cfg.estimator.prior_scale * cfg.estimator.prior_scale);
      estimator = ops::affine_mmse(forward, y2_cov, mean, prior, shape);
      break;
    }
    case EstimatorSpec::Kind::External:
      estimator = ops::Estimator::external(
          cfg.estimator.command, {},
          std::chrono::milliseconds(static_cast<long long>(cfg.estimator.timeout_s * 1000.0)),
          shape);
      break;
  }

  return Scenario{cfg,
                  shape,
                  std::move(forward),
                  std::move(encoder),
                  std::move(*hyp),
                  std::move(c0),
                  std::move(c1),
                  std::move(nuisance),
                  std::move(noise_cov),
                  std::move(y2_cov),
                  std::move(*split_cfg),
                  std::move(*estimator)};
}

}  // namespace etest::harness
