#include <gtest/gtest.h>

#include <png.h>

#include <fstream>
#include <random>

#include "ddseg/error.hpp"
#include "ddseg/image_io.hpp"
#include "test_util.hpp"

namespace ddseg {
namespace {

void write_raw(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

TEST(GuideImage, PpmRoundTripAt8Bits) {
  std::mt19937_64 rng(61);
  std::uniform_int_distribution<int> d(0, 255);
  GuidanceImage img{5, 3, std::vector<double>(45)};
  for (double& v : img.pixels) v = d(rng) / 255.0;
  testing::TempDir dir("guide_rt");
  write_guide_ppm(img, dir / "g.ppm");
  const auto back = read_guide_image(dir / "g.ppm");
  EXPECT_EQ(back.height, 5u);
  EXPECT_EQ(back.width, 3u);
  EXPECT_EQ(back.pixels, img.pixels);
}

TEST(GuideImage, SixteenBitPpmAndComments) {
  testing::TempDir dir("guide16");
  write_raw(dir / "g.ppm", std::string("P6\n# made by hand\n1 1\n65535\n") +
                               std::string("\xff\xff\x00\x00\x80\x00", 6));
  const auto img = read_guide_image(dir / "g.ppm");
  EXPECT_EQ(img.pixels[0], 1.0);
  EXPECT_EQ(img.pixels[1], 0.0);
  EXPECT_DOUBLE_EQ(img.pixels[2], 32768.0 / 65535.0);
}

TEST(GuideImage, ReadsPng) {
  testing::TempDir dir("guide_png");
  const std::vector<png_byte> rgb{255, 0, 0, 0, 255, 0, 0, 0, 255, 51, 102, 153};
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = 2;
  image.height = 2;
  image.format = PNG_FORMAT_RGB;
  const auto path = (dir / "g.png").string();
  ASSERT_TRUE(png_image_write_to_file(&image, path.c_str(), 0, rgb.data(), 0, nullptr));
  const auto img = read_guide_image(path);
  ASSERT_EQ(img.height, 2u);
  ASSERT_EQ(img.width, 2u);
  for (std::size_t k = 0; k < rgb.size(); ++k) EXPECT_EQ(img.pixels[k], rgb[k] / 255.0);
}

TEST(GuideImage, Errors) {
  testing::TempDir dir("guide_bad");
  EXPECT_THROW(read_guide_image(dir / "missing.ppm"), IoError);
  write_raw(dir / "short.ppm", "P6\n2 2\n255\n\x01\x02");
  EXPECT_THROW(read_guide_image(dir / "short.ppm"), LengthError);
  write_raw(dir / "junk.ppm", "GIF89a....");
  EXPECT_THROW(read_guide_image(dir / "junk.ppm"), FormatError);
}

TEST(Netpbm, Gray16AndRgb8RoundTrip) {
  testing::TempDir dir("netpbm");
  const Gray16Image g{2, 3, {0, 1, 255, 256, 65534, 65535}};
  write_pgm16(g, dir / "g.pgm");
  const auto g2 = read_pgm16(dir / "g.pgm");
  EXPECT_EQ(g2.values, g.values);
  const Rgb8Image c{1, 2, {1, 2, 3, 250, 251, 252}};
  write_ppm8(c, dir / "c.ppm");
  EXPECT_EQ(read_ppm8(dir / "c.ppm").rgb, c.rgb);
}

}  // namespace
}  // namespace ddseg
