#include "etest/operators.hpp"

#include <cerrno>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <thread>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "etest/tensor_io.hpp"

extern char** environ;

namespace etest::ops {

// --- SphereEncoder ----------------------------------------------------------

SphereEncoder SphereEncoder::linear(Matrix phi) {
  require(phi.rows() >= 2 && phi.cols() >= 1, ErrorCode::InvalidArgument,
          "encoder matrix must be at least 2 x 1");
  require(phi.allFinite(), ErrorCode::InvalidArgument, "encoder matrix has non-finite entries");
  return SphereEncoder(std::move(phi));
}

SphereEncoder SphereEncoder::stored(EmbeddingMap table) {
  require(!table.empty(), ErrorCode::InvalidArgument, "empty embedding table");
  return SphereEncoder(std::move(table));
}

UnitEmbedding SphereEncoder::encode(const Vector& x) const {
  const auto* phi = std::get_if<Matrix>(&kind_);
  require(phi != nullptr, ErrorCode::InvalidArgument, "stored encoders are addressed by id");
  require(phi->cols() == x.size(), ErrorCode::DimensionMismatch,
          "encoder expects " + std::to_string(phi->cols()) + " pixels, got " +
              std::to_string(x.size()));
  const Vector u = *phi * x;
  const double norm = u.norm();
  require(norm > kMinNorm, ErrorCode::ZeroImageEmbedding, "Phi x is (near) zero");
  return UnitEmbedding(u / norm);
}

UnitEmbedding SphereEncoder::encode(const ImageVec& x) const { return encode(x.data()); }

UnitEmbedding SphereEncoder::encode(const std::string& id) const {
  const auto* table = std::get_if<EmbeddingMap>(&kind_);
  require(table != nullptr, ErrorCode::InvalidArgument, "linear encoders take images, not ids");
  return lookup(*table, id);
}

const Matrix& SphereEncoder::matrix() const {
  const auto* phi = std::get_if<Matrix>(&kind_);
  require(phi != nullptr, ErrorCode::InvalidArgument, "encoder is not linear");
  return *phi;
}

std::size_t SphereEncoder::dim() const {
  if (const auto* phi = std::get_if<Matrix>(&kind_)) return static_cast<std::size_t>(phi->rows());
  return std::get<EmbeddingMap>(kind_).begin()->second.dim();
}

// --- Estimator --------------------------------------------------------------

Estimator Estimator::identity(std::optional<Shape> shape) { return Estimator(Identity{}, shape); }

Estimator Estimator::affine(Vector offset, Matrix gain, std::optional<Shape> shape) {
  require(offset.size() == gain.rows(), ErrorCode::DimensionMismatch,
          "affine offset and gain have different output sizes");
  require(offset.allFinite() && gain.allFinite(), ErrorCode::InvalidArgument,
          "affine estimator has non-finite entries");
  return Estimator(Affine{std::move(offset), std::move(gain)}, shape);
}

Estimator Estimator::external(std::string command, std::filesystem::path workdir,
                              std::chrono::milliseconds timeout, std::optional<Shape> shape) {
  require(!command.empty(), ErrorCode::InvalidArgument, "empty external command");
  require(timeout.count() > 0, ErrorCode::InvalidArgument, "timeout must be positive");
  return Estimator(External{std::move(command), std::move(workdir), timeout}, shape);
}

Estimator Estimator::with_shape(std::optional<Shape> shape) const {
  Estimator copy = *this;
  copy.shape_ = shape;
  return copy;
}

const Estimator::Affine& Estimator::affine_parts() const {
  const auto* a = std::get_if<Affine>(&kind_);
  require(a != nullptr, ErrorCode::InvalidArgument, "estimator is not affine");
  return *a;
}

Matrix Estimator::jacobian(std::size_t m) const {
  if (std::holds_alternative<Identity>(kind_)) {
    const auto mi = static_cast<Eigen::Index>(m);
    return Matrix::Identity(mi, mi);
  }
  const auto& a = affine_parts();
  require(static_cast<std::size_t>(a.gain.cols()) == m, ErrorCode::DimensionMismatch,
          "affine gain has wrong number of columns");
  return a.gain;
}

ImageVec Estimator::estimate(const Vector& y) const {
  Vector x = std::visit(
      [&](const auto& k) -> Vector {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Identity>) {
          return y;
        } else if constexpr (std::is_same_v<K, Affine>) {
          require(k.gain.cols() == y.size(), ErrorCode::DimensionMismatch,
                  "affine gain expects " + std::to_string(k.gain.cols()) + " measurements, got " +
                      std::to_string(y.size()));
          return k.offset + k.gain * y;
        } else {
          return run_external(k, y);
        }
      },
      kind_);
  if (shape_ && shape_->size() != static_cast<std::size_t>(x.size())) {
    fail(ErrorCode::DimensionMismatch, "estimate size differs from the configured image shape");
  }
  return ImageVec(std::move(x), shape_);
}

ImageVec Estimator::estimate(const MeasurementVec& y) const { return estimate(y.data()); }

Estimator affine_mmse(const ForwardModel& forward, const CovModel& noise, const Vector& prior_mean,
                      const CovModel& prior_cov, std::optional<Shape> shape) {
  const auto n = static_cast<std::size_t>(prior_mean.size());
  require(prior_cov.dim() == n, ErrorCode::DimensionMismatch,
          "prior covariance dimension differs from prior mean");
  const std::size_t m = forward.output_dim(n);
  require(noise.dim() == m, ErrorCode::DimensionMismatch,
          "noise covariance dimension differs from measurement size");
  const Matrix a = forward.matrix(n);
  const Matrix c = prior_cov.dense_matrix();
  const Matrix ca_t = c * a.transpose();
  const Matrix system = a * ca_t + noise.dense_matrix();
  Eigen::LLT<Matrix> llt(system);
  require(llt.info() == Eigen::Success, ErrorCode::SingularSystem,
          "A C A^T + Sigma is not positive definite");
  // gain = C A^T S^{-1}  <=>  S gain^T = A C.
  Matrix gain = llt.solve(ca_t.transpose()).transpose();
  require(gain.allFinite(), ErrorCode::SingularSystem, "MMSE gain is not finite");
  Vector offset = prior_mean - gain * (a * prior_mean);
  return Estimator::affine(std::move(offset), std::move(gain), shape);
}

// --- External process protocol ----------------------------------------------

namespace {

struct TempDir {
  std::filesystem::path path;
  ~TempDir() {
    std::error_code ec;
    if (!path.empty()) std::filesystem::remove_all(path, ec);
  }
};

TempDir make_io_dir(const std::filesystem::path& base) {
  const auto root = base.empty() ? std::filesystem::temp_directory_path() : base;
  std::string pattern = (root / "etest-io-XXXXXX").string();
  require(::mkdtemp(pattern.data()) != nullptr, ErrorCode::ExternalProcessFailed,
          "cannot create I/O directory under " + root.string() + ": " + std::strerror(errno));
  return TempDir{pattern};
}

}  // namespace

Vector run_external(const Estimator::External& spec, const Vector& y) {
  const TempDir dir = make_io_dir(spec.workdir);
  write_tensor(dir.path / "in.emt", Tensor::from_vector(y));
  // The child environment is assembled before fork so that only exec runs in
  // the child.
  const std::string io_var = "ETEST_IO_DIR=" + dir.path.string();
  std::vector<char*> envp;
  for (char** e = environ; *e != nullptr; ++e) {
    if (std::strncmp(*e, "ETEST_IO_DIR=", 13) != 0) envp.push_back(*e);
  }
  envp.push_back(const_cast<char*>(io_var.c_str()));
  envp.push_back(nullptr);
  const char* argv[] = {"sh", "-c", spec.command.c_str(), nullptr};

  const pid_t pid = ::fork();
  require(pid >= 0, ErrorCode::ExternalProcessFailed, "fork failed");
  if (pid == 0) {
    ::execve("/bin/sh", const_cast<char* const*>(argv), envp.data());
    ::_exit(127);
  }

  const auto deadline = std::chrono::steady_clock::now() + spec.timeout;
  int status = 0;
  for (;;) {
    const pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0 && errno != EINTR) fail(ErrorCode::ExternalProcessFailed, "waitpid failed");
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      fail(ErrorCode::ExternalProcessFailed, "external estimator timed out: " + spec.command);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  require(WIFEXITED(status) && WEXITSTATUS(status) == 0, ErrorCode::ExternalProcessFailed,
          "external estimator exited abnormally: " + spec.command);

  Tensor out;
  try {
    out = read_tensor(dir.path / "out.emt");
  } catch (const Error& e) {
    fail(ErrorCode::ExternalProcessFailed, std::string("invalid out.emt: ") + e.what());
  }
  Vector x = out.to_vector();
  require(x.size() >= 1 && all_finite(x), ErrorCode::ExternalProcessFailed,
          "out.emt is empty or has non-finite values");
  return x;
}

// --- Group actions ----------------------------------------------------------

Shift2D CyclicShift2D::sample(Rng& rng) const {
  Shift2D g;
  g.dx = static_cast<int>(rng.uniform_int(-max_dx, max_dx));
  g.dy = static_cast<int>(rng.uniform_int(-max_dy, max_dy));
  return g;
}

ImageVec cyclic_shift(Shift2D g, const ImageVec& x) {
  require(x.shape().has_value(), ErrorCode::MissingShape, "group action needs image shape");
  const Shape s = *x.shape();
  const auto h = static_cast<long>(s.height);
  const auto w = static_cast<long>(s.width);
  const auto c = static_cast<long>(s.channels);
  auto wrap = [](long v, long n) { return ((v % n) + n) % n; };
  const Vector& in = x.data();
  Vector out(in.size());
  for (long r = 0; r < h; ++r) {
    const long src_r = wrap(r + g.dy, h);
    for (long col = 0; col < w; ++col) {
      const long src_c = wrap(col + g.dx, w);
      for (long ch = 0; ch < c; ++ch) {
        out[(r * w + col) * c + ch] = in[(src_r * w + src_c) * c + ch];
      }
    }
  }
  return ImageVec(std::move(out), s);
}

ImageVec apply_group(const CyclicShift2D& group, Shift2D g, const ImageVec& x) {
  require(std::abs(g.dx) <= group.max_dx && std::abs(g.dy) <= group.max_dy,
          ErrorCode::InvalidArgument, "shift exceeds the configured range");
  return cyclic_shift(g, x);
}

ImageVec invert_group(const CyclicShift2D& group, Shift2D g, const ImageVec& x) {
  require(std::abs(g.dx) <= group.max_dx && std::abs(g.dy) <= group.max_dy,
          ErrorCode::InvalidArgument, "shift exceeds the configured range");
  return cyclic_shift(inverse(g), x);
}

Shift2D compose(Shift2D a, Shift2D b) noexcept { return Shift2D{a.dx + b.dx, a.dy + b.dy}; }

Shift2D inverse(Shift2D g) noexcept { return Shift2D{-g.dx, -g.dy}; }

}  // namespace etest::ops
