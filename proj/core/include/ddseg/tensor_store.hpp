#pragma once

// DDT1 dense tensor container.
//
// Layout (all integers little-endian):
//   bytes 0..3   magic "DDT1"
//   byte  4      dtype code (1=f32, 2=f64, 3=u8, 4=i64)
//   byte  5      ndim (1..4)
//   ndim x u64   dimension sizes
//   payload      row-major elements, little-endian

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

namespace ddseg {

enum class DType : std::uint8_t { f32 = 1, f64 = 2, u8 = 3, i64 = 4 };

std::size_t dtype_size(DType dtype) noexcept;

class DenseTensor {
 public:
  using Storage = std::variant<std::vector<float>, std::vector<double>,
                               std::vector<std::uint8_t>,
                               std::vector<std::int64_t>>;

  DenseTensor() = default;
  /// Throws ShapeError if the shape is invalid or does not match the data.
  DenseTensor(std::vector<std::uint64_t> shape, Storage data);

  static DenseTensor from_f64(std::vector<std::uint64_t> shape,
                              std::vector<double> values);

  DType dtype() const noexcept;
  const std::vector<std::uint64_t>& shape() const noexcept { return shape_; }
  std::size_t ndim() const noexcept { return shape_.size(); }
  std::size_t element_count() const noexcept;
  const Storage& storage() const noexcept { return data_; }

  /// All elements promoted to double, row-major.
  std::vector<double> to_f64() const;

  friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

 private:
  std::vector<std::uint64_t> shape_;
  Storage data_;
};

std::vector<std::byte> encode_tensor(const DenseTensor& tensor);
DenseTensor decode_tensor(std::span<const std::byte> bytes);

/// Throws FormatError, LengthError, UnsupportedDtypeError or IoError.
DenseTensor read_tensor(const std::filesystem::path& path);
void write_tensor(const DenseTensor& tensor, const std::filesystem::path& path);

}  // namespace ddseg
