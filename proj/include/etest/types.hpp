#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "etest/error.hpp"
#include "etest/rng.hpp"

namespace etest {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

bool all_finite(const Vector& v) noexcept;

/// Row-major (height, width, channels) layout of an image vector.
struct Shape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;

  std::size_t size() const noexcept { return height * width * channels; }
  bool operator==(const Shape&) const = default;
};

class ImageVec {
 public:
  explicit ImageVec(Vector data, std::optional<Shape> shape = std::nullopt);

  const Vector& data() const noexcept { return data_; }
  const std::optional<Shape>& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(data_.size()); }

 private:
  Vector data_;
  std::optional<Shape> shape_;
};

enum class NoiseFamily { Gaussian, ScaledPoisson };

std::string_view to_string(NoiseFamily family) noexcept;

class MeasurementVec {
 public:
  MeasurementVec(Vector data, NoiseFamily family);

  const Vector& data() const noexcept { return data_; }
  NoiseFamily family() const noexcept { return family_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(data_.size()); }

 private:
  Vector data_;
  NoiseFamily family_;
};

/// Linear measurement operator A.
class ForwardModel {
 public:
  struct Identity {};
  struct BinaryMask {
    std::vector<std::uint8_t> mask;
  };
  struct Dense {
    Matrix a;
  };

  ForwardModel() = default;
  static ForwardModel identity() { return ForwardModel(Identity{}); }
  static ForwardModel binary_mask(std::vector<std::uint8_t> mask);
  static ForwardModel dense(Matrix a);

  /// Number of measurements produced for an image of `n` pixels.
  std::size_t output_dim(std::size_t n) const;
  Vector apply(const Vector& x) const;
  /// Explicit m x n matrix.
  Matrix matrix(std::size_t n) const;

  bool is_identity() const noexcept { return std::holds_alternative<Identity>(kind_); }
  const std::variant<Identity, BinaryMask, Dense>& kind() const noexcept { return kind_; }

 private:
  template <typename K>
  explicit ForwardModel(K k) : kind_(std::move(k)) {}

  std::variant<Identity, BinaryMask, Dense> kind_ = Identity{};
};

/// Gaussian noise covariance with a cached square root.
///
/// Zero variances are accepted for the scaled-identity and diagonal kinds so
/// that noiseless limits can be expressed; dense matrices must be SPD.
class CovModel {
 public:
  struct ScaledIdentity {
    std::size_t dim;
    double variance;
  };
  struct Diagonal {
    Vector variances;
  };
  struct DenseSPD {
    Matrix sigma;
    Matrix lower;  // L with L L^T = sigma
  };

  static CovModel scaled_identity(std::size_t dim, double variance);
  static CovModel diagonal(Vector variances);
  static CovModel dense(Matrix sigma);

  std::size_t dim() const noexcept;
  /// sqrt(Sigma) * w for a right-hand side w; uses the Cholesky factor for dense.
  Vector apply_sqrt(const Vector& w) const;
  Matrix sqrt_matrix() const;
  Matrix dense_matrix() const;
  /// Covariance multiplied by a non-negative factor.
  CovModel scaled(double factor) const;
  bool is_zero() const noexcept;

  const std::variant<ScaledIdentity, Diagonal, DenseSPD>& kind() const noexcept { return kind_; }

 private:
  template <typename K>
  explicit CovModel(K k) : kind_(std::move(k)) {}

  std::variant<ScaledIdentity, Diagonal, DenseSPD> kind_;
};

/// sqrt(Sigma) w with w i.i.d. standard normal.
Vector gaussian_sample(Rng& rng, const CovModel& cov);

/// A point on the unit hypersphere of dimension d >= 2.
class UnitEmbedding {
 public:
  static constexpr double kNormTolerance = 1e-6;

  explicit UnitEmbedding(Vector v);
  /// Normalizes v; fails with ZeroImageEmbedding when its norm is <= min_norm.
  static UnitEmbedding normalized(const Vector& v, double min_norm = 1e-12);

  const Vector& vector() const noexcept { return v_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(v_.size()); }
  double dot(const UnitEmbedding& other) const;

 private:
  Vector v_;
};

struct HypothesisPair {
  HypothesisPair(UnitEmbedding q0, UnitEmbedding q1, std::string label0 = {},
                 std::string label1 = {});

  UnitEmbedding q0;
  UnitEmbedding q1;
  std::string label0;
  std::string label1;

  /// q0 - q1.
  Vector delta() const { return q0.vector() - q1.vector(); }
  std::size_t dim() const noexcept { return q0.dim(); }
};

}  // namespace etest
