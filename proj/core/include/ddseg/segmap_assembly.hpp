#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ddseg/matrix.hpp"

namespace ddseg {

/// Score map of one class, indexed by the class's position in the original
/// class list.
struct DiscrepancyMap {
  std::size_t class_index = 0;
  Matrix values;
};

struct LabelMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint32_t> labels;

  std::uint32_t operator()(std::size_t y, std::size_t x) const noexcept {
    return labels[y * width + x];
  }
  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

struct PaletteEntry {
  std::string name;
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
};
using Palette = std::vector<PaletteEntry>;

/// Per-pixel argmax over the candidate maps; ties go to the lowest class
/// index. Throws ShapeError on dimension mismatch, NumericalError on
/// non-finite scores.
LabelMap assemble(std::span<const DiscrepancyMap> maps);

/// Writes `pgm_path` as a 16-bit P5 of raw labels. With a palette, also
/// writes a colorized P6 next to it (same stem, .ppm extension).
void write_label_map(const LabelMap& map, const std::filesystem::path& pgm_path,
                     const std::optional<Palette>& palette = std::nullopt);

LabelMap read_label_map(const std::filesystem::path& pgm_path);

/// Parses "name r g b" lines; blank lines and '#' comments are skipped.
Palette read_palette(const std::filesystem::path& path);

}  // namespace ddseg
