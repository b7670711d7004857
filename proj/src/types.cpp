#include "etest/types.hpp"

#include <cmath>
#include <string>

namespace etest {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::BadDtype: return "BadDtype";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::TrailingBytes: return "TrailingBytes";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NormOutOfTolerance: return "NormOutOfTolerance";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::NegativeEntries: return "NegativeEntries";
    case ErrorCode::NonIntegerCounts: return "NonIntegerCounts";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::ZeroImageEmbedding: return "ZeroImageEmbedding";
    case ErrorCode::MissingShape: return "MissingShape";
    case ErrorCode::ExternalProcessFailed: return "ExternalProcessFailed";
    case ErrorCode::NoFeasibleLambda: return "NoFeasibleLambda";
    case ErrorCode::DegenerateHypotheses: return "DegenerateHypotheses";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

std::string_view to_string(NoiseFamily family) noexcept {
  return family == NoiseFamily::Gaussian ? "gaussian" : "poisson";
}

bool all_finite(const Vector& v) noexcept {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) return false;
  }
  return true;
}

ImageVec::ImageVec(Vector data, std::optional<Shape> shape)
    : data_(std::move(data)), shape_(shape) {
  require(data_.size() >= 1, ErrorCode::InvalidArgument, "image must have at least one pixel");
  require(all_finite(data_), ErrorCode::InvalidArgument, "image has non-finite entries");
  if (shape_) {
    require(shape_->size() == size(), ErrorCode::DimensionMismatch,
            "shape " + std::to_string(shape_->height) + "x" + std::to_string(shape_->width) + "x" +
                std::to_string(shape_->channels) + " does not match " + std::to_string(size()) +
                " pixels");
  }
}

MeasurementVec::MeasurementVec(Vector data, NoiseFamily family)
    : data_(std::move(data)), family_(family) {
  require(data_.size() >= 1, ErrorCode::InvalidArgument, "measurement must be non-empty");
  require(all_finite(data_), ErrorCode::InvalidArgument, "measurement has non-finite entries");
}

// --- ForwardModel ---------------------------------------------------------

ForwardModel ForwardModel::binary_mask(std::vector<std::uint8_t> mask) {
  require(!mask.empty(), ErrorCode::InvalidArgument, "empty mask");
  for (auto& m : mask) m = m ? 1 : 0;
  return ForwardModel(BinaryMask{std::move(mask)});
}

ForwardModel ForwardModel::dense(Matrix a) {
  require(a.rows() >= 1 && a.cols() >= 1, ErrorCode::InvalidArgument, "empty forward matrix");
  require(a.allFinite(), ErrorCode::InvalidArgument, "forward matrix has non-finite entries");
  return ForwardModel(Dense{std::move(a)});
}

std::size_t ForwardModel::output_dim(std::size_t n) const {
  if (const auto* d = std::get_if<Dense>(&kind_)) {
    require(static_cast<std::size_t>(d->a.cols()) == n, ErrorCode::DimensionMismatch,
            "forward matrix has " + std::to_string(d->a.cols()) + " columns, image has " +
                std::to_string(n));
    return static_cast<std::size_t>(d->a.rows());
  }
  if (const auto* m = std::get_if<BinaryMask>(&kind_)) {
    require(m->mask.size() == n, ErrorCode::DimensionMismatch, "mask length differs from image");
  }
  return n;
}

Vector ForwardModel::apply(const Vector& x) const {
  return std::visit(
      [&](const auto& k) -> Vector {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Identity>) {
          return x;
        } else if constexpr (std::is_same_v<K, BinaryMask>) {
          require(k.mask.size() == static_cast<std::size_t>(x.size()),
                  ErrorCode::DimensionMismatch, "mask length differs from image");
          Vector out(x.size());
          for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = k.mask[i] ? x[i] : 0.0;
          return out;
        } else {
          require(k.a.cols() == x.size(), ErrorCode::DimensionMismatch,
                  "forward matrix columns differ from image size");
          return k.a * x;
        }
      },
      kind_);
}

Matrix ForwardModel::matrix(std::size_t n) const {
  const auto ni = static_cast<Eigen::Index>(n);
  return std::visit(
      [&](const auto& k) -> Matrix {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Identity>) {
          return Matrix::Identity(ni, ni);
        } else if constexpr (std::is_same_v<K, BinaryMask>) {
          require(k.mask.size() == n, ErrorCode::DimensionMismatch, "mask length differs");
          Matrix a = Matrix::Zero(ni, ni);
          for (Eigen::Index i = 0; i < ni; ++i) a(i, i) = k.mask[i] ? 1.0 : 0.0;
          return a;
        } else {
          require(k.a.cols() == ni, ErrorCode::DimensionMismatch, "forward matrix columns differ");
          return k.a;
        }
      },
      kind_);
}

// --- CovModel -------------------------------------------------------------

CovModel CovModel::scaled_identity(std::size_t dim, double variance) {
  require(dim >= 1, ErrorCode::InvalidArgument, "covariance dimension must be >= 1");
  require(std::isfinite(variance) && variance >= 0.0, ErrorCode::InvalidArgument,
          "variance must be finite and non-negative");
  return CovModel(ScaledIdentity{dim, variance});
}

CovModel CovModel::diagonal(Vector variances) {
  require(variances.size() >= 1, ErrorCode::InvalidArgument, "empty diagonal covariance");
  for (Eigen::Index i = 0; i < variances.size(); ++i) {
    require(std::isfinite(variances[i]) && variances[i] >= 0.0, ErrorCode::InvalidArgument,
            "variances must be finite and non-negative");
  }
  return CovModel(Diagonal{std::move(variances)});
}

CovModel CovModel::dense(Matrix sigma) {
  require(sigma.rows() >= 1 && sigma.rows() == sigma.cols(), ErrorCode::InvalidArgument,
          "dense covariance must be square and non-empty");
  require(sigma.allFinite(), ErrorCode::InvalidArgument, "covariance has non-finite entries");
  require((sigma - sigma.transpose()).cwiseAbs().maxCoeff() <=
              1e-12 * std::max(1.0, sigma.cwiseAbs().maxCoeff()),
          ErrorCode::NotPositiveDefinite, "covariance is not symmetric");
  Eigen::LLT<Matrix> llt(sigma);
  require(llt.info() == Eigen::Success, ErrorCode::NotPositiveDefinite,
          "Cholesky factorization failed");
  Matrix lower = llt.matrixL();
  const double scale = sigma.cwiseAbs().rowwise().sum().maxCoeff();
  const double residual = (lower * lower.transpose() - sigma).cwiseAbs().rowwise().sum().maxCoeff();
  require(residual <= 1e-8 * scale, ErrorCode::NotPositiveDefinite,
          "Cholesky residual too large");
  return CovModel(DenseSPD{std::move(sigma), std::move(lower)});
}

std::size_t CovModel::dim() const noexcept {
  return std::visit(
      [](const auto& k) -> std::size_t {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ScaledIdentity>) {
          return k.dim;
        } else if constexpr (std::is_same_v<K, Diagonal>) {
          return static_cast<std::size_t>(k.variances.size());
        } else {
          return static_cast<std::size_t>(k.sigma.rows());
        }
      },
      kind_);
}

Vector CovModel::apply_sqrt(const Vector& w) const {
  require(static_cast<std::size_t>(w.size()) == dim(), ErrorCode::DimensionMismatch,
          "vector length differs from covariance dimension");
  return std::visit(
      [&](const auto& k) -> Vector {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ScaledIdentity>) {
          return std::sqrt(k.variance) * w;
        } else if constexpr (std::is_same_v<K, Diagonal>) {
          return k.variances.cwiseSqrt().cwiseProduct(w);
        } else {
          return k.lower.template triangularView<Eigen::Lower>() * w;
        }
      },
      kind_);
}

Matrix CovModel::sqrt_matrix() const {
  return std::visit(
      [](const auto& k) -> Matrix {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ScaledIdentity>) {
          const auto n = static_cast<Eigen::Index>(k.dim);
          return std::sqrt(k.variance) * Matrix::Identity(n, n);
        } else if constexpr (std::is_same_v<K, Diagonal>) {
          return k.variances.cwiseSqrt().asDiagonal();
        } else {
          return k.lower;
        }
      },
      kind_);
}

Matrix CovModel::dense_matrix() const {
  return std::visit(
      [](const auto& k) -> Matrix {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ScaledIdentity>) {
          const auto n = static_cast<Eigen::Index>(k.dim);
          return k.variance * Matrix::Identity(n, n);
        } else if constexpr (std::is_same_v<K, Diagonal>) {
          return k.variances.asDiagonal();
        } else {
          return k.sigma;
        }
      },
      kind_);
}

CovModel CovModel::scaled(double factor) const {
  require(std::isfinite(factor) && factor >= 0.0, ErrorCode::InvalidArgument,
          "covariance scale must be finite and non-negative");
  return std::visit(
      [&](const auto& k) -> CovModel {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ScaledIdentity>) {
          return CovModel(ScaledIdentity{k.dim, k.variance * factor});
        } else if constexpr (std::is_same_v<K, Diagonal>) {
          return CovModel(Diagonal{k.variances * factor});
        } else {
          require(factor > 0.0, ErrorCode::NotPositiveDefinite,
                  "dense covariance cannot be scaled to zero");
          return CovModel(DenseSPD{k.sigma * factor, k.lower * std::sqrt(factor)});
        }
      },
      kind_);
}

bool CovModel::is_zero() const noexcept {
  if (const auto* s = std::get_if<ScaledIdentity>(&kind_)) return s->variance == 0.0;
  if (const auto* d = std::get_if<Diagonal>(&kind_)) return d->variances.isZero(0.0);
  return false;
}

Vector gaussian_sample(Rng& rng, const CovModel& cov) {
  Vector w(static_cast<Eigen::Index>(cov.dim()));
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = rng.normal();
  return cov.apply_sqrt(w);
}

// --- Embeddings -----------------------------------------------------------

UnitEmbedding::UnitEmbedding(Vector v) : v_(std::move(v)) {
  require(v_.size() >= 2, ErrorCode::InvalidArgument, "embedding dimension must be >= 2");
  require(all_finite(v_), ErrorCode::InvalidArgument, "embedding has non-finite entries");
  require(std::fabs(v_.norm() - 1.0) <= kNormTolerance, ErrorCode::NormOutOfTolerance,
          "embedding is not unit norm (norm " + std::to_string(v_.norm()) + ")");
}

UnitEmbedding UnitEmbedding::normalized(const Vector& v, double min_norm) {
  const double norm = v.norm();
  require(norm > min_norm, ErrorCode::ZeroImageEmbedding, "vector norm is (near) zero");
  return UnitEmbedding(v / norm);
}

double UnitEmbedding::dot(const UnitEmbedding& other) const {
  require(dim() == other.dim(), ErrorCode::DimensionMismatch, "embedding dimensions differ");
  return v_.dot(other.v_);
}

HypothesisPair::HypothesisPair(UnitEmbedding q0_, UnitEmbedding q1_, std::string label0_,
                               std::string label1_)
    : q0(std::move(q0_)), q1(std::move(q1_)), label0(std::move(label0_)),
      label1(std::move(label1_)) {
  require(q0.dim() == q1.dim(), ErrorCode::DimensionMismatch,
          "hypothesis embeddings have different dimensions");
}

}  // namespace etest
