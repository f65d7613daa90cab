#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "ddseg/error.hpp"
#include "ddseg/image_io.hpp"
#include "ddseg/segmap_assembly.hpp"
#include "test_util.hpp"

namespace ddseg {
namespace {

DiscrepancyMap map_of(std::size_t c, std::size_t h, std::size_t w, std::vector<double> v) {
  return {c, Matrix(h, w, std::move(v))};
}

TEST(Assemble, PicksTheLargestScore) {
  const std::vector<DiscrepancyMap> maps{map_of(0, 1, 3, {0.1, 0.9, 0.5}),
                                         map_of(2, 1, 3, {0.8, 0.2, 0.4})};
  const auto labels = assemble(maps);
  EXPECT_EQ(labels.labels, (std::vector<std::uint32_t>{2, 0, 0}));
  EXPECT_EQ(labels.height, 1u);
  EXPECT_EQ(labels.width, 3u);
}

TEST(Assemble, TiesGoToTheLowestClassIndex) {
  // Input order should not matter for tie-breaking.
  const std::vector<DiscrepancyMap> maps{map_of(5, 1, 2, {0.3, 0.3}), map_of(1, 1, 2, {0.3, 0.1}),
                                         map_of(3, 1, 2, {0.3, 0.3})};
  EXPECT_EQ(assemble(maps).labels, (std::vector<std::uint32_t>{1, 3}));
}

TEST(Assemble, LabelsIndexTheOriginalClassList) {
  const std::vector<DiscrepancyMap> maps{map_of(7, 1, 1, {1.0})};
  EXPECT_EQ(assemble(maps)(0, 0), 7u);
}

TEST(Assemble, InvariantUnderStrictlyIncreasingTransforms) {
  std::mt19937_64 rng(51);
  std::vector<DiscrepancyMap> maps, transformed;
  for (std::size_t c = 0; c < 4; ++c) {
    auto m = testing::random_matrix(rng, 6, 5);
    maps.push_back({c, m});
    for (double& v : m.data()) v = std::exp(3.0 * v) - 2.0;
    transformed.push_back({c, m});
  }
  EXPECT_EQ(assemble(maps), assemble(transformed));
}

TEST(Assemble, Errors) {
  EXPECT_THROW(assemble(std::vector<DiscrepancyMap>{}), EmptyCandidatesError);
  const std::vector<DiscrepancyMap> mismatched{map_of(0, 1, 2, {0, 0}), map_of(1, 2, 1, {0, 0})};
  EXPECT_THROW(assemble(mismatched), ShapeError);
  const std::vector<DiscrepancyMap> nan{map_of(0, 1, 1, {std::nan("")})};
  EXPECT_THROW(assemble(nan), NumericalError);
}

TEST(LabelMapIo, SinglePixelFileIsExact) {
  testing::TempDir dir("labels1");
  write_label_map(LabelMap{1, 1, {0}}, dir / "one.pgm");
  const auto bytes = testing::file_bytes(dir / "one.pgm");
  const std::string expected = std::string("P5\n1 1\n65535\n") + std::string(2, '\0');
  EXPECT_EQ(std::string(bytes.begin(), bytes.end()), expected);
}

TEST(LabelMapIo, SamplesAreBigEndian) {
  testing::TempDir dir("labels_be");
  write_label_map(LabelMap{1, 2, {0x0102, 3}}, dir / "be.pgm");
  const auto bytes = testing::file_bytes(dir / "be.pgm");
  // "P5\n1 2\n65535\n" is 13 bytes.
  ASSERT_EQ(bytes.size(), 13u + 4u);
  EXPECT_EQ(bytes[13], 0x01);
  EXPECT_EQ(bytes[14], 0x02);
  EXPECT_EQ(bytes[15], 0x00);
  EXPECT_EQ(bytes[16], 0x03);
}

TEST(LabelMapIo, RoundTrip) {
  std::mt19937_64 rng(52);
  std::uniform_int_distribution<std::uint32_t> d(0, 65535);
  LabelMap map{13, 7, std::vector<std::uint32_t>(91)};
  for (auto& l : map.labels) l = d(rng);
  testing::TempDir dir("labels_rt");
  write_label_map(map, dir / "rt.pgm");
  EXPECT_EQ(read_label_map(dir / "rt.pgm"), map);
}

TEST(LabelMapIo, PaletteColorsEveryPixel) {
  testing::TempDir dir("labels_pal");
  const Palette palette{{"sky", 10, 20, 30}, {"road", 200, 100, 0}};
  write_label_map(LabelMap{2, 2, {0, 1, 1, 0}}, dir / "seg.pgm", palette);
  const auto rgb = read_ppm8(dir / "seg.ppm");
  ASSERT_EQ(rgb.height, 2u);
  ASSERT_EQ(rgb.width, 2u);
  EXPECT_EQ(rgb.rgb, (std::vector<std::uint8_t>{10, 20, 30, 200, 100, 0, 200, 100, 0, 10, 20, 30}));
}

TEST(LabelMapIo, PaletteTooShort) {
  testing::TempDir dir("labels_short");
  const Palette palette{{"only", 1, 2, 3}};
  EXPECT_THROW(write_label_map(LabelMap{1, 2, {0, 1}}, dir / "x.pgm", palette), PaletteError);
}

TEST(LabelMapIo, RejectsInconsistentMaps) {
  testing::TempDir dir("labels_bad");
  EXPECT_THROW(write_label_map(LabelMap{2, 2, {0}}, dir / "x.pgm"), ShapeError);
  EXPECT_THROW(write_label_map(LabelMap{1, 1, {70000}}, dir / "x.pgm"), ShapeError);
}

TEST(Palette, ParsesEntriesAndSkipsComments) {
  testing::TempDir dir("palette");
  {
    std::ofstream out(dir / "p.txt");
    out << "# header\n\nwater 0 0 255\n  grass 0 128 0\n";
  }
  const auto p = read_palette(dir / "p.txt");
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0].name, "water");
  EXPECT_EQ(p[1].g, 128);
  {
    std::ofstream out(dir / "bad.txt");
    out << "water 0 0 256\n";
  }
  EXPECT_THROW(read_palette(dir / "bad.txt"), FormatError);
  EXPECT_THROW(read_palette(dir / "missing.txt"), IoError);
}

}  // namespace
}  // namespace ddseg
