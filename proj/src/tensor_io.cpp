#include "etest/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>

namespace etest {

namespace {

constexpr std::uint8_t kMagic[4] = {'E', 'M', 'T', '1'};

static_assert(std::endian::native == std::endian::little,
              "EMT1 I/O assumes a little-endian host");

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

template <typename T>
T get(std::span<const std::uint8_t> bytes, std::size_t& offset) {
  require(offset + sizeof(T) <= bytes.size(), ErrorCode::Truncated, "EMT1 file is truncated");
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  offset += sizeof(T);
  return value;
}

std::size_t element_size(DType dtype) { return dtype == DType::F32 ? 4 : 8; }

}  // namespace

std::size_t Tensor::element_count() const noexcept {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         [](std::size_t a, std::uint32_t b) { return a * b; });
}

Tensor Tensor::from_vector(const Vector& v, DType dtype) {
  Tensor t;
  t.dtype = dtype;
  t.dims = {static_cast<std::uint32_t>(v.size())};
  t.values.assign(v.data(), v.data() + v.size());
  if (dtype == DType::F32) {
    for (auto& x : t.values) x = static_cast<float>(x);
  }
  return t;
}

Tensor Tensor::from_image(const ImageVec& x, DType dtype) {
  Tensor t = from_vector(x.data(), dtype);
  if (const auto& s = x.shape()) {
    t.dims = {static_cast<std::uint32_t>(s->height), static_cast<std::uint32_t>(s->width),
              static_cast<std::uint32_t>(s->channels)};
  }
  return t;
}

Vector Tensor::to_vector() const {
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  require(t.dtype == DType::F32 || t.dtype == DType::F64, ErrorCode::BadDtype,
          "unknown dtype code");
  require(t.dims.size() <= 255, ErrorCode::InvalidArgument, "too many dimensions for EMT1");
  require(t.element_count() == t.values.size(), ErrorCode::DimensionMismatch,
          "tensor dims do not match value count");
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.reserve(6 + 4 * t.dims.size() + element_size(t.dtype) * t.values.size());
  put(out, static_cast<std::uint8_t>(t.dtype));
  put(out, static_cast<std::uint8_t>(t.dims.size()));
  for (auto d : t.dims) put(out, d);
  if (t.dtype == DType::F32) {
    for (double v : t.values) put(out, static_cast<float>(v));
  } else {
    for (double v : t.values) put(out, v);
  }
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= 4, ErrorCode::Truncated, "EMT1 file shorter than its magic");
  require(std::memcmp(bytes.data(), kMagic, 4) == 0, ErrorCode::BadMagic,
          "file does not start with EMT1");
  std::size_t offset = 4;
  Tensor t;
  const auto code = get<std::uint8_t>(bytes, offset);
  require(code == 1 || code == 2, ErrorCode::BadDtype, "dtype code " + std::to_string(code));
  t.dtype = static_cast<DType>(code);
  const auto ndim = get<std::uint8_t>(bytes, offset);
  t.dims.resize(ndim);
  for (auto& d : t.dims) d = get<std::uint32_t>(bytes, offset);
  const std::size_t count = t.element_count();
  const std::size_t payload = count * element_size(t.dtype);
  require(bytes.size() - offset >= payload, ErrorCode::Truncated, "EMT1 payload is truncated");
  require(bytes.size() - offset == payload, ErrorCode::TrailingBytes,
          "EMT1 file has bytes after the payload");
  t.values.resize(count);
  for (auto& v : t.values) {
    v = t.dtype == DType::F32 ? static_cast<double>(get<float>(bytes, offset))
                              : get<double>(bytes, offset);
  }
  return t;
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  const auto bytes = encode_tensor(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorCode::IoError, "write failed for " + path.string());
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_tensor(bytes);
}

}  // namespace etest
