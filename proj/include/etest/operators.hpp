#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>

#include "etest/embedding_io.hpp"
#include "etest/types.hpp"

namespace etest::ops {

// --- Encoders ---------------------------------------------------------------

/// Image encoder onto the unit sphere: either phi(x) = Phi x / ||Phi x|| or a
/// table of precomputed embeddings addressed by id.
class SphereEncoder {
 public:
  static constexpr double kMinNorm = 1e-12;

  static SphereEncoder linear(Matrix phi);
  static SphereEncoder stored(EmbeddingMap table);

  UnitEmbedding encode(const ImageVec& x) const;
  UnitEmbedding encode(const Vector& x) const;
  UnitEmbedding encode(const std::string& id) const;

  bool is_linear() const noexcept { return std::holds_alternative<Matrix>(kind_); }
  /// Phi; only valid for linear encoders.
  const Matrix& matrix() const;
  std::size_t dim() const;

 private:
  template <typename K>
  explicit SphereEncoder(K k) : kind_(std::move(k)) {}

  std::variant<Matrix, EmbeddingMap> kind_;
};

// --- Estimators -------------------------------------------------------------

class Estimator {
 public:
  struct Identity {};
  /// x_hat(y) = offset + gain * y.
  struct Affine {
    Vector offset;
    Matrix gain;
  };
  /// Out-of-process reconstruction through EMT1 file exchange.
  struct External {
    std::string command;
    std::filesystem::path workdir;
    std::chrono::milliseconds timeout{300'000};
  };

  static Estimator identity(std::optional<Shape> shape = std::nullopt);
  static Estimator affine(Vector offset, Matrix gain, std::optional<Shape> shape = std::nullopt);
  static Estimator external(std::string command, std::filesystem::path workdir = {},
                            std::chrono::milliseconds timeout = std::chrono::seconds(300),
                            std::optional<Shape> shape = std::nullopt);

  ImageVec estimate(const MeasurementVec& y) const;
  ImageVec estimate(const Vector& y) const;

  bool is_affine() const noexcept { return std::holds_alternative<Affine>(kind_); }
  const Affine& affine_parts() const;
  /// d x_hat / d y (n x m). Exact for identity and affine estimators.
  Matrix jacobian(std::size_t m) const;

  const std::optional<Shape>& output_shape() const noexcept { return shape_; }
  Estimator with_shape(std::optional<Shape> shape) const;
  const std::variant<Identity, Affine, External>& kind() const noexcept { return kind_; }

 private:
  template <typename K>
  Estimator(K k, std::optional<Shape> shape) : kind_(std::move(k)), shape_(shape) {}

  std::variant<Identity, Affine, External> kind_;
  std::optional<Shape> shape_;
};

/// Gaussian posterior mean for x ~ N(prior_mean, prior_cov), y = A x + N(0, noise):
/// gain = C A^T (A C A^T + noise)^{-1}, offset = mu - gain A mu.
Estimator affine_mmse(const ForwardModel& forward, const CovModel& noise, const Vector& prior_mean,
                      const CovModel& prior_cov, std::optional<Shape> shape = std::nullopt);

/// Runs `command` through /bin/sh with ETEST_IO_DIR pointing at a fresh
/// directory containing in.emt; reads out.emt back. Kills the child on timeout.
Vector run_external(const Estimator::External& spec, const Vector& y);

// --- Group actions ----------------------------------------------------------

struct Shift2D {
  int dx = 0;
  int dy = 0;
};

/// Cyclic pixel translations of an image grid (the group Z_h x Z_w).
struct CyclicShift2D {
  int max_dx = 0;
  int max_dy = 0;

  Shift2D sample(Rng& rng) const;
};

/// out(r, c) = x((r + dy) mod h, (c + dx) mod w), per channel. Any integer
/// shift is accepted; fails with MissingShape when x has no shape.
ImageVec cyclic_shift(Shift2D g, const ImageVec& x);

/// cyclic_shift restricted to |dx| <= max_dx, |dy| <= max_dy.
ImageVec apply_group(const CyclicShift2D& group, Shift2D g, const ImageVec& x);
ImageVec invert_group(const CyclicShift2D& group, Shift2D g, const ImageVec& x);
Shift2D compose(Shift2D a, Shift2D b) noexcept;
Shift2D inverse(Shift2D g) noexcept;

}  // namespace etest::ops
