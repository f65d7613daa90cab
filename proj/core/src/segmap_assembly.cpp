#include "ddseg/segmap_assembly.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "ddseg/error.hpp"
#include "ddseg/image_io.hpp"

namespace ddseg {

LabelMap assemble(std::span<const DiscrepancyMap> maps) {
  if (maps.empty()) throw EmptyCandidatesError("no class maps to assemble");
  const std::size_t H = maps.front().values.rows();
  const std::size_t W = maps.front().values.cols();
  for (const auto& m : maps) {
    if (m.values.rows() != H || m.values.cols() != W) {
      throw ShapeError("class maps differ in dimensions");
    }
    if (m.class_index > std::numeric_limits<std::uint32_t>::max()) {
      throw ShapeError("class index does not fit a label");
    }
    for (double v : m.values.data()) {
      if (!std::isfinite(v)) {
        throw NumericalError("class map " + std::to_string(m.class_index) +
                             " has non-finite values");
      }
    }
  }

  std::vector<std::size_t> order(maps.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return maps[a].class_index < maps[b].class_index;
  });

  LabelMap out{H, W, std::vector<std::uint32_t>(H * W)};
  for (std::size_t p = 0; p < H * W; ++p) {
    const DiscrepancyMap* best = &maps[order.front()];
    double best_value = best->values.data()[p];
    for (std::size_t k = 1; k < order.size(); ++k) {
      const double v = maps[order[k]].values.data()[p];
      if (v > best_value) {
        best_value = v;
        best = &maps[order[k]];
      }
    }
    out.labels[p] = static_cast<std::uint32_t>(best->class_index);
  }
  return out;
}

void write_label_map(const LabelMap& map, const std::filesystem::path& pgm_path,
                     const std::optional<Palette>& palette) {
  if (map.labels.size() != map.height * map.width) {
    throw ShapeError("label buffer does not match its dimensions");
  }
  Gray16Image gray{map.height, map.width,
                   std::vector<std::uint16_t>(map.labels.size())};
  for (std::size_t i = 0; i < map.labels.size(); ++i) {
    if (map.labels[i] > std::numeric_limits<std::uint16_t>::max()) {
      throw ShapeError("label exceeds the 16-bit PGM range");
    }
    gray.values[i] = static_cast<std::uint16_t>(map.labels[i]);
  }

  Rgb8Image color;
  if (palette) {
    color = {map.height, map.width, std::vector<std::uint8_t>(map.labels.size() * 3)};
    for (std::size_t i = 0; i < map.labels.size(); ++i) {
      const auto label = map.labels[i];
      if (label >= palette->size()) {
        throw PaletteError("label " + std::to_string(label) +
                           " has no palette entry (palette has " +
                           std::to_string(palette->size()) + ")");
      }
      const auto& e = (*palette)[label];
      color.rgb[3 * i] = e.r;
      color.rgb[3 * i + 1] = e.g;
      color.rgb[3 * i + 2] = e.b;
    }
  }

  write_pgm16(gray, pgm_path);
  if (palette) {
    auto ppm_path = pgm_path;
    ppm_path.replace_extension(".ppm");
    write_ppm8(color, ppm_path);
  }
}

LabelMap read_label_map(const std::filesystem::path& pgm_path) {
  const Gray16Image gray = read_pgm16(pgm_path);
  return {gray.height, gray.width, {gray.values.begin(), gray.values.end()}};
}

Palette read_palette(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open palette " + path.string());
  Palette palette;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    PaletteEntry e;
    int r = -1, g = -1, b = -1;
    if (!(fields >> e.name >> r >> g >> b) || r < 0 || r > 255 || g < 0 ||
        g > 255 || b < 0 || b > 255) {
      throw FormatError("palette line " + std::to_string(line_no) +
                        ": expected 'name r g b' with 0..255 channels");
    }
    e.r = static_cast<std::uint8_t>(r);
    e.g = static_cast<std::uint8_t>(g);
    e.b = static_cast<std::uint8_t>(b);
    palette.push_back(std::move(e));
  }
  return palette;
}

}  // namespace ddseg
