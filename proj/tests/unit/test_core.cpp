#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "etest/embedding_io.hpp"
#include "etest/rng.hpp"
#include "etest/tensor_io.hpp"
#include "etest/types.hpp"
#include "oracles.hpp"

using namespace etest;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an etest::Error");
  return ErrorCode::InvalidArgument;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("etest_unit_" + name);
}

}  // namespace

TEST_CASE("rng streams are reproducible and children are distinct") {
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c0 = Rng::child(7, 0), c1 = Rng::child(7, 1);
  CHECK(c0.next_u64() != c1.next_u64());
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));
  CHECK(derive_seed(7, 3) != derive_seed(8, 3));
}

TEST_CASE("uniform, normal and uniform_int moments") {
  Rng rng(11);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(std::fabs(su / n - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
  CHECK(std::fabs(sn / n) < 4 / std::sqrt(double(n)));
  CHECK(std::fabs(sn2 / n - 1.0) < 4 * std::sqrt(2.0 / n));

  std::vector<int> hist(5, 0);
  for (int i = 0; i < 50000; ++i) {
    const auto k = rng.uniform_int(-2, 2);
    REQUIRE(k >= -2);
    REQUIRE(k <= 2);
    ++hist[static_cast<std::size_t>(k + 2)];
  }
  for (int h : hist) CHECK(std::fabs(h - 10000.0) < 4 * std::sqrt(50000 * 0.2 * 0.8));
}

TEST_CASE("binomial and poisson samplers match their moments") {
  Rng rng(5);
  for (auto [n, p] : {std::pair<std::uint64_t, double>{10, 0.3}, {64, 0.85}, {500, 0.15},
                      {3, 0.0}, {7, 1.0}}) {
    const int trials = 40000;
    double s = 0, s2 = 0;
    for (int i = 0; i < trials; ++i) {
      const auto k = rng.binomial(n, p);
      REQUIRE(k <= n);
      s += double(k);
      s2 += double(k) * double(k);
    }
    const double mean = s / trials, var = s2 / trials - mean * mean;
    const double tv = double(n) * p * (1 - p);
    CHECK(std::fabs(mean - double(n) * p) <= 4 * std::sqrt(tv / trials) + 1e-12);
    if (tv > 0) CHECK(std::fabs(var / tv - 1.0) < 0.05);
  }
  for (double mu : {0.0, 0.7, 4.0, 9.99, 10.0, 35.0, 400.0}) {
    const int trials = 40000;
    double s = 0, s2 = 0;
    for (int i = 0; i < trials; ++i) {
      const double k = double(rng.poisson(mu));
      s += k;
      s2 += k * k;
    }
    const double mean = s / trials, var = s2 / trials - mean * mean;
    CHECK(std::fabs(mean - mu) <= 4 * std::sqrt(mu / trials) + 1e-12);
    if (mu > 0) CHECK(std::fabs(var / mu - 1.0) < 0.05);
  }
}

TEST_CASE("poisson pmf at small mean matches exact probabilities") {
  Rng rng(19);
  const double mu = 4.0;
  const int trials = 100000;
  std::vector<int> counts(30, 0);
  for (int i = 0; i < trials; ++i) {
    const auto k = rng.poisson(mu);
    if (k < counts.size()) ++counts[k];
  }
  double pk = std::exp(-mu);
  for (int k = 0; k < 12; ++k) {
    const double se = std::sqrt(pk * (1 - pk) / trials);
    CHECK(std::fabs(counts[k] / double(trials) - pk) < 4 * se + 1e-9);
    pk *= mu / (k + 1);
  }
}

TEST_CASE("CovModel sampling") {
  SUBCASE("zero variance gives the zero vector") {
    Rng rng(1);
    CHECK(gaussian_sample(rng, CovModel::scaled_identity(4, 0.0)).isZero(0.0));
  }
  SUBCASE("scaled identity variance") {
    Rng rng(2);
    const double sigma = 0.5617;
    const auto cov = CovModel::scaled_identity(3, sigma * sigma);
    const int n = 100000;
    Vector s2 = Vector::Zero(3);
    for (int i = 0; i < n; ++i) s2 += gaussian_sample(rng, cov).cwiseAbs2();
    for (int c = 0; c < 3; ++c) CHECK(std::fabs(s2[c] / n / 0.31551 - 1.0) < 0.05);
  }
  SUBCASE("fixed seed reproduces the draw") {
    const auto cov = CovModel::diagonal((Vector(3) << 1.0, 2.0, 0.5).finished());
    Rng a(7), b(7);
    CHECK(gaussian_sample(a, cov) == gaussian_sample(b, cov));
  }
  SUBCASE("dense SPD sample covariance within 4 standard errors") {
    Matrix sigma(3, 3);
    sigma << 2.0, 0.6, -0.3, 0.6, 1.0, 0.2, -0.3, 0.2, 0.5;
    const auto cov = CovModel::dense(sigma);
    Rng rng(3);
    const int n = 100000;
    Matrix acc = Matrix::Zero(3, 3);
    for (int i = 0; i < n; ++i) {
      const Vector x = gaussian_sample(rng, cov);
      acc += x * x.transpose();
    }
    acc /= n;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        // Var(x_i x_j) = S_ii S_jj + S_ij^2 for zero-mean Gaussians.
        const double se = std::sqrt((sigma(i, i) * sigma(j, j) + sigma(i, j) * sigma(i, j)) / n);
        CHECK(std::fabs(acc(i, j) - sigma(i, j)) < 4 * se);
      }
    }
  }
  SUBCASE("non-SPD and asymmetric inputs are rejected") {
    Matrix bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;
    CHECK(code_of([&] { CovModel::dense(bad); }) == ErrorCode::NotPositiveDefinite);
    Matrix asym(2, 2);
    asym << 1.0, 0.1, 0.0, 1.0;
    CHECK(code_of([&] { CovModel::dense(asym); }) == ErrorCode::NotPositiveDefinite);
    CHECK(code_of([&] { CovModel::scaled_identity(2, -1.0); }) == ErrorCode::InvalidArgument);
  }
}

TEST_CASE("ImageVec and UnitEmbedding validation") {
  CHECK(code_of([] { const ImageVec x{Vector()}; }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { const ImageVec x(Vector::Ones(5), Shape{2, 2, 1}); }) ==
        ErrorCode::DimensionMismatch);
  Vector bad = Vector::Ones(3);
  bad[1] = std::nan("");
  CHECK(code_of([&] { const ImageVec x{bad}; }) == ErrorCode::InvalidArgument);

  CHECK(code_of([] { const UnitEmbedding u{Vector::Ones(2)}; }) == ErrorCode::NormOutOfTolerance);
  CHECK(code_of([] { UnitEmbedding::normalized(Vector::Zero(3)); }) == ErrorCode::ZeroImageEmbedding);
  const auto u = UnitEmbedding::normalized((Vector(2) << 3.0, 4.0).finished());
  CHECK(u.vector()[0] == doctest::Approx(0.6));
  CHECK(u.dot(u) == doctest::Approx(1.0));
}

TEST_CASE("EMT1 format") {
  SUBCASE("byte accounting of a 1-D f32 tensor") {
    const auto t = Tensor::from_vector((Vector(2) << 1.0, 2.5).finished(), DType::F32);
    const auto bytes = encode_tensor(t);
    CHECK(bytes.size() == 18);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "EMT1");
    CHECK(bytes[4] == 1);
    CHECK(bytes[5] == 1);
    CHECK(decode_tensor(bytes) == t);
  }
  SUBCASE("round trip of random tensors, byte for byte") {
    Rng rng(4);
    for (int rep = 0; rep < 50; ++rep) {
      Tensor t;
      t.dtype = rep % 2 ? DType::F32 : DType::F64;
      const auto ndim = static_cast<std::size_t>(rng.uniform_int(0, 3));
      std::size_t count = 1;
      for (std::size_t k = 0; k < ndim; ++k) {
        t.dims.push_back(static_cast<std::uint32_t>(rng.uniform_int(1, 4)));
        count *= t.dims.back();
      }
      for (std::size_t i = 0; i < count; ++i) {
        const double v = rng.normal() * 100.0;
        t.values.push_back(t.dtype == DType::F32 ? double(float(v)) : v);
      }
      const auto bytes = encode_tensor(t);
      CHECK(decode_tensor(bytes) == t);
      CHECK(encode_tensor(decode_tensor(bytes)) == bytes);
    }
  }
  SUBCASE("file round trip") {
    const auto path = temp_path("rt.emt");
    const auto t = Tensor::from_image(ImageVec(Vector::LinSpaced(6, 0.0, 1.0), Shape{2, 3, 1}));
    write_tensor(path, t);
    CHECK(read_tensor(path) == t);
    CHECK(read_tensor(path).dims == std::vector<std::uint32_t>{2, 3, 1});
    std::filesystem::remove(path);
  }
  SUBCASE("malformed inputs") {
    auto bytes = encode_tensor(Tensor::from_vector(Vector::Ones(3)));
    auto magic = bytes;
    magic[0] = 'X';
    magic[1] = 'X';
    magic[2] = 'X';
    magic[3] = 'X';
    CHECK(code_of([&] { decode_tensor(magic); }) == ErrorCode::BadMagic);
    auto dtype = bytes;
    dtype[4] = 9;
    CHECK(code_of([&] { decode_tensor(dtype); }) == ErrorCode::BadDtype);
    auto truncated = bytes;
    truncated.pop_back();
    CHECK(code_of([&] { decode_tensor(truncated); }) == ErrorCode::Truncated);
    auto trailing = bytes;
    trailing.push_back(0);
    CHECK(code_of([&] { decode_tensor(trailing); }) == ErrorCode::TrailingBytes);
    CHECK(code_of([] { decode_tensor(std::vector<std::uint8_t>{'E', 'M'}); }) == ErrorCode::Truncated);
  }
}

TEST_CASE("EMB1 embeddings") {
  SUBCASE("canonical basis") {
    const auto m = parse_embeddings(
        R"({"format":"EMB1","dim":2,"items":[{"id":"a","v":[1,0]},{"id":"b","v":[0,1]}]})");
    REQUIRE(m.size() == 2);
    CHECK(lookup(m, "a").vector() == (Vector(2) << 1.0, 0.0).finished());
    CHECK(lookup(m, "b").dot(lookup(m, "a")) == 0.0);
  }
  SUBCASE("norm tolerance on read") {
    CHECK(code_of([] {
            parse_embeddings(R"({"format":"EMB1","dim":2,"items":[{"id":"a","v":[0.9,0]}]})");
          }) == ErrorCode::NormOutOfTolerance);
    const auto m =
        parse_embeddings(R"({"format":"EMB1","dim":2,"items":[{"id":"a","v":[1.0004,0]}]})");
    CHECK(lookup(m, "a").vector().norm() == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("structural errors") {
    CHECK(code_of([] {
            parse_embeddings(
                R"({"format":"EMB1","dim":2,"items":[{"id":"a","v":[1,0]},{"id":"a","v":[0,1]}]})");
          }) == ErrorCode::DuplicateId);
    CHECK(code_of([] {
            parse_embeddings(R"({"format":"EMB1","dim":3,"items":[{"id":"a","v":[1,0]}]})");
          }) == ErrorCode::DimensionMismatch);
    CHECK(code_of([] { parse_embeddings(R"({"format":"EMB2","dim":2,"items":[]})"); }) ==
          ErrorCode::ParseError);
    CHECK(code_of([] { parse_embeddings("not json"); }) == ErrorCode::ParseError);
    const auto m = parse_embeddings(R"({"format":"EMB1","dim":2,"items":[{"id":"a","v":[1,0]}]})");
    CHECK(code_of([&] { lookup(m, "zz"); }) == ErrorCode::UnknownId);
  }
  SUBCASE("format then parse is exact and idempotent") {
    Rng rng(9);
    EmbeddingMap m;
    for (int i = 0; i < 20; ++i) {
      Vector v(8);
      for (auto& x : v) x = rng.normal();
      m.emplace("img" + std::to_string(i), UnitEmbedding::normalized(v));
    }
    const std::string text = format_embeddings(m);
    const auto back = parse_embeddings(text);
    REQUIRE(back.size() == m.size());
    for (const auto& [id, e] : m) CHECK(lookup(back, id).vector() == e.vector());
    CHECK(format_embeddings(back) == text);

    const auto path = temp_path("emb.json");
    write_embeddings(path, m);
    CHECK(format_embeddings(read_embeddings(path)) == text);
    std::filesystem::remove(path);
  }
}
