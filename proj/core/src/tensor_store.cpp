#include "ddseg/tensor_store.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "ddseg/error.hpp"

namespace ddseg {
namespace {

constexpr std::array<char, 4> kMagic{'D', 'D', 'T', '1'};
constexpr std::size_t kMaxDims = 4;

template <typename T>
constexpr DType dtype_of() {
  if constexpr (std::is_same_v<T, float>) return DType::f32;
  if constexpr (std::is_same_v<T, double>) return DType::f64;
  if constexpr (std::is_same_v<T, std::uint8_t>) return DType::u8;
  if constexpr (std::is_same_v<T, std::int64_t>) return DType::i64;
}

template <typename U>
void put_le(std::vector<std::byte>& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<std::byte>((value >> (8 * i)) & 0xFF));
  }
}

template <typename U>
U get_le(const std::byte* p) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    value |= static_cast<U>(std::to_integer<std::uint8_t>(p[i])) << (8 * i);
  }
  return value;
}

template <typename T>
void put_element(std::vector<std::byte>& out, T value) {
  if constexpr (std::is_same_v<T, float>) {
    put_le(out, std::bit_cast<std::uint32_t>(value));
  } else if constexpr (std::is_same_v<T, double>) {
    put_le(out, std::bit_cast<std::uint64_t>(value));
  } else if constexpr (std::is_same_v<T, std::uint8_t>) {
    out.push_back(static_cast<std::byte>(value));
  } else {
    put_le(out, static_cast<std::uint64_t>(value));
  }
}

template <typename T>
T get_element(const std::byte* p) {
  if constexpr (std::is_same_v<T, float>) {
    return std::bit_cast<float>(get_le<std::uint32_t>(p));
  } else if constexpr (std::is_same_v<T, double>) {
    return std::bit_cast<double>(get_le<std::uint64_t>(p));
  } else if constexpr (std::is_same_v<T, std::uint8_t>) {
    return std::to_integer<std::uint8_t>(*p);
  } else {
    return static_cast<std::int64_t>(get_le<std::uint64_t>(p));
  }
}

std::size_t checked_product(std::span<const std::uint64_t> shape) {
  std::uint64_t n = 1;
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimension must be >= 1");
    if (n > std::numeric_limits<std::uint64_t>::max() / d) {
      throw ShapeError("tensor element count overflows");
    }
    n *= d;
  }
  return static_cast<std::size_t>(n);
}

void validate_shape(std::span<const std::uint64_t> shape) {
  if (shape.empty() || shape.size() > kMaxDims) {
    throw ShapeError("tensor must have 1 to 4 dimensions, got " +
                     std::to_string(shape.size()));
  }
  checked_product(shape);
}

template <typename T>
std::vector<T> decode_payload(const std::byte* p, std::size_t count) {
  std::vector<T> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    values[i] = get_element<T>(p + i * sizeof(T));
  }
  return values;
}

}  // namespace

std::size_t dtype_size(DType dtype) noexcept {
  switch (dtype) {
    case DType::f32: return 4;
    case DType::f64: return 8;
    case DType::u8: return 1;
    case DType::i64: return 8;
  }
  return 0;
}

DenseTensor::DenseTensor(std::vector<std::uint64_t> shape, Storage data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  validate_shape(shape_);
  const std::size_t len =
      std::visit([](const auto& v) { return v.size(); }, data_);
  if (len != checked_product(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(len) +
                     " does not match shape product " +
                     std::to_string(checked_product(shape_)));
  }
}

DenseTensor DenseTensor::from_f64(std::vector<std::uint64_t> shape,
                                  std::vector<double> values) {
  return DenseTensor(std::move(shape), std::move(values));
}

DType DenseTensor::dtype() const noexcept {
  return std::visit(
      [](const auto& v) {
        return dtype_of<typename std::decay_t<decltype(v)>::value_type>();
      },
      data_);
}

std::size_t DenseTensor::element_count() const noexcept {
  return std::visit([](const auto& v) { return v.size(); }, data_);
}

std::vector<double> DenseTensor::to_f64() const {
  return std::visit(
      [](const auto& v) {
        std::vector<double> out(v.size());
        std::transform(v.begin(), v.end(), out.begin(),
                       [](auto x) { return static_cast<double>(x); });
        return out;
      },
      data_);
}

std::vector<std::byte> encode_tensor(const DenseTensor& tensor) {
  std::vector<std::byte> out;
  out.reserve(6 + 8 * tensor.ndim() +
              dtype_size(tensor.dtype()) * tensor.element_count());
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  out.push_back(static_cast<std::byte>(tensor.dtype()));
  out.push_back(static_cast<std::byte>(tensor.ndim()));
  for (auto d : tensor.shape()) put_le<std::uint64_t>(out, d);
  std::visit(
      [&out](const auto& v) {
        for (auto x : v) put_element(out, x);
      },
      tensor.storage());
  return out;
}

DenseTensor decode_tensor(std::span<const std::byte> bytes) {
  if (bytes.size() < 6) {
    throw LengthError("tensor header truncated");
  }
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin(),
                  [](char c, std::byte b) {
                    return static_cast<std::byte>(c) == b;
                  })) {
    throw FormatError("bad tensor magic, expected DDT1");
  }
  const auto code = std::to_integer<std::uint8_t>(bytes[4]);
  if (code < 1 || code > 4) {
    throw UnsupportedDtypeError("unknown dtype code " + std::to_string(code));
  }
  const auto dtype = static_cast<DType>(code);
  const std::size_t ndim = std::to_integer<std::uint8_t>(bytes[5]);
  if (ndim < 1 || ndim > kMaxDims) {
    throw FormatError("tensor ndim must be 1..4, got " + std::to_string(ndim));
  }
  const std::size_t header = 6 + 8 * ndim;
  if (bytes.size() < header) {
    throw LengthError("tensor shape header truncated");
  }
  std::vector<std::uint64_t> shape(ndim);
  for (std::size_t i = 0; i < ndim; ++i) {
    shape[i] = get_le<std::uint64_t>(bytes.data() + 6 + 8 * i);
  }
  std::size_t count = 0;
  try {
    count = checked_product(shape);
  } catch (const ShapeError& e) {
    throw FormatError(e.what());
  }
  const std::size_t elem = dtype_size(dtype);
  if (count > (std::numeric_limits<std::size_t>::max() - header) / elem) {
    throw LengthError("declared tensor payload too large");
  }
  const std::size_t payload = count * elem;
  if (bytes.size() - header < payload) {
    throw LengthError("tensor payload truncated: declared " +
                      std::to_string(payload) + " bytes, found " +
                      std::to_string(bytes.size() - header));
  }
  if (bytes.size() - header > payload) {
    throw LengthError("trailing bytes after tensor payload");
  }
  const std::byte* p = bytes.data() + header;
  switch (dtype) {
    case DType::f32: return {std::move(shape), decode_payload<float>(p, count)};
    case DType::f64: return {std::move(shape), decode_payload<double>(p, count)};
    case DType::u8:
      return {std::move(shape), decode_payload<std::uint8_t>(p, count)};
    case DType::i64:
      return {std::move(shape), decode_payload<std::int64_t>(p, count)};
  }
  throw UnsupportedDtypeError("unknown dtype");
}

DenseTensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open tensor file " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading tensor file " + path.string());
  return decode_tensor(std::as_bytes(std::span(raw)));
}

void write_tensor(const DenseTensor& tensor,
                  const std::filesystem::path& path) {
  const auto bytes = encode_tensor(tensor);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error writing tensor file " + path.string());
}

}  // namespace ddseg
