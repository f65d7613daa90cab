#include "ddseg/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "ddseg/error.hpp"

namespace ddseg {
namespace {

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& path, const std::string& header,
          const std::vector<unsigned char>& payload) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("error writing " + path.string());
}

// Netpbm header: magic, width, height, maxval, one whitespace byte.
struct PnmHeader {
  std::string magic;
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t maxval = 0;
  std::size_t payload_offset = 0;
};

PnmHeader parse_pnm_header(const std::vector<unsigned char>& bytes,
                           const std::string& expected_magic) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto token = [&] {
    skip_space();
    std::string t;
    while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') {
      t.push_back(static_cast<char>(bytes[pos++]));
    }
    if (t.empty()) throw FormatError("truncated netpbm header");
    return t;
  };
  auto number = [&] {
    const std::string t = token();
    for (char c : t) {
      if (!std::isdigit(static_cast<unsigned char>(c))) {
        throw FormatError("bad netpbm header field '" + t + "'");
      }
    }
    return static_cast<std::size_t>(std::stoull(t));
  };

  PnmHeader h;
  h.magic = token();
  if (h.magic != expected_magic) {
    throw FormatError("expected netpbm " + expected_magic + ", got " + h.magic);
  }
  h.width = number();
  h.height = number();
  h.maxval = number();
  if (h.width == 0 || h.height == 0 || h.maxval == 0 || h.maxval > 65535) {
    throw FormatError("invalid netpbm dimensions or maxval");
  }
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw FormatError("netpbm header not terminated by whitespace");
  }
  h.payload_offset = pos + 1;
  return h;
}

GuidanceImage read_ppm_guide(const std::vector<unsigned char>& bytes) {
  const PnmHeader h = parse_pnm_header(bytes, "P6");
  const std::size_t sample_bytes = h.maxval > 255 ? 2 : 1;
  const std::size_t count = h.width * h.height * 3;
  if (bytes.size() - h.payload_offset < count * sample_bytes) {
    throw LengthError("PPM payload truncated");
  }
  GuidanceImage img{h.height, h.width, std::vector<double>(count)};
  const auto maxval = static_cast<double>(h.maxval);
  const unsigned char* p = bytes.data() + h.payload_offset;
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t v = sample_bytes == 2
                        ? (static_cast<std::size_t>(p[2 * i]) << 8) | p[2 * i + 1]
                        : p[i];
    if (v > h.maxval) v = h.maxval;
    img.pixels[i] = static_cast<double>(v) / maxval;
  }
  return img;
}

GuidanceImage read_png_guide(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw FormatError("cannot decode PNG " + path.string() + ": " +
                      image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw FormatError("cannot decode PNG " + path.string() + ": " + msg);
  }
  GuidanceImage img{image.height, image.width,
                    std::vector<double>(buffer.size())};
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    img.pixels[i] = static_cast<double>(buffer[i]) / 255.0;
  }
  return img;
}

}  // namespace

GuidanceImage read_guide_image(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  static constexpr std::array<unsigned char, 8> kPngMagic{
      0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  if (bytes.size() >= kPngMagic.size() &&
      std::equal(kPngMagic.begin(), kPngMagic.end(), bytes.begin())) {
    return read_png_guide(path);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') {
    return read_ppm_guide(bytes);
  }
  throw FormatError("guide image " + path.string() + " is neither PNG nor P6");
}

void write_guide_ppm(const GuidanceImage& image,
                     const std::filesystem::path& path) {
  image.validate();
  Rgb8Image out{image.height, image.width,
                std::vector<std::uint8_t>(image.pixels.size())};
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    out.rgb[i] = static_cast<std::uint8_t>(std::lround(image.pixels[i] * 255.0));
  }
  write_ppm8(out, path);
}

void write_pgm16(const Gray16Image& image, const std::filesystem::path& path) {
  if (image.values.size() != image.height * image.width) {
    throw ShapeError("PGM buffer does not match its dimensions");
  }
  std::vector<unsigned char> payload;
  payload.reserve(image.values.size() * 2);
  for (auto v : image.values) {
    payload.push_back(static_cast<unsigned char>(v >> 8));
    payload.push_back(static_cast<unsigned char>(v & 0xFF));
  }
  dump(path,
       "P5\n" + std::to_string(image.width) + " " +
           std::to_string(image.height) + "\n65535\n",
       payload);
}

Gray16Image read_pgm16(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  const PnmHeader h = parse_pnm_header(bytes, "P5");
  if (h.maxval <= 255) throw FormatError("expected a 16-bit PGM");
  const std::size_t count = h.width * h.height;
  if (bytes.size() - h.payload_offset < count * 2) {
    throw LengthError("PGM payload truncated");
  }
  Gray16Image img{h.height, h.width, std::vector<std::uint16_t>(count)};
  const unsigned char* p = bytes.data() + h.payload_offset;
  for (std::size_t i = 0; i < count; ++i) {
    img.values[i] = static_cast<std::uint16_t>((p[2 * i] << 8) | p[2 * i + 1]);
  }
  return img;
}

void write_ppm8(const Rgb8Image& image, const std::filesystem::path& path) {
  if (image.rgb.size() != image.height * image.width * 3) {
    throw ShapeError("PPM buffer does not match its dimensions");
  }
  dump(path,
       "P6\n" + std::to_string(image.width) + " " +
           std::to_string(image.height) + "\n255\n",
       {image.rgb.begin(), image.rgb.end()});
}

Rgb8Image read_ppm8(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  const PnmHeader h = parse_pnm_header(bytes, "P6");
  if (h.maxval > 255) throw FormatError("expected an 8-bit PPM");
  const std::size_t count = h.width * h.height * 3;
  if (bytes.size() - h.payload_offset < count) {
    throw LengthError("PPM payload truncated");
  }
  Rgb8Image img{h.height, h.width, {}};
  img.rgb.assign(bytes.begin() + static_cast<std::ptrdiff_t>(h.payload_offset),
                 bytes.begin() + static_cast<std::ptrdiff_t>(h.payload_offset + count));
  return img;
}

}  // namespace ddseg
