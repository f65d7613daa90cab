#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ddseg/upsample_jbu.hpp"

namespace ddseg {

/// Reads an 8-bit PNG or a binary PPM (P6, maxval up to 65535) and scales
/// channels to [0, 1]. The format is detected from the file's magic bytes.
GuidanceImage read_guide_image(const std::filesystem::path& path);

/// Writes the guide as an 8-bit P6 PPM (channels rounded to 1/255).
void write_guide_ppm(const GuidanceImage& image,
                     const std::filesystem::path& path);

struct Gray16Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint16_t> values;
};

/// P5 with maxval 65535 and big-endian samples.
void write_pgm16(const Gray16Image& image, const std::filesystem::path& path);
Gray16Image read_pgm16(const std::filesystem::path& path);

struct Rgb8Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> rgb;  // interleaved
};

void write_ppm8(const Rgb8Image& image, const std::filesystem::path& path);
Rgb8Image read_ppm8(const std::filesystem::path& path);

}  // namespace ddseg
