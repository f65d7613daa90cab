#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ddseg/matrix.hpp"

namespace ddseg {

/// Full-resolution RGB guide, channel values in [0, 1], interleaved row-major.
struct GuidanceImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;  // height * width * 3

  double at(std::size_t y, std::size_t x, std::size_t ch) const noexcept {
    return pixels[(y * width + x) * 3 + ch];
  }
  void validate() const;
};

struct JbuConfig {
  double sigma_s_sq = 1.0;   // spatial variance, low-res units
  double sigma_r_sq = 0.1;   // range variance, RGB in [0, 1]
  double window_radius = 2;  // half-width of the low-res neighbourhood

  void validate() const;
};

struct JbuResult {
  std::vector<Matrix> maps;         // one H x W map per input
  std::size_t fallback_pixels = 0;  // pixels where k_p underflowed
};

/// Joint bilateral upsampling of several h x w maps sharing one guide. The
/// neighbourhood weights depend only on the guide, so they are computed once
/// per output pixel and applied to every map.
JbuResult jbu_upsample(std::span<const Matrix> low, const GuidanceImage& guide,
                       const JbuConfig& cfg = {});

Matrix jbu_upsample(const Matrix& low, const GuidanceImage& guide,
                    const JbuConfig& cfg = {});

/// Align-corners-false bilinear sample of `low` at fractional (y, x).
double bilinear_sample(const Matrix& low, double y, double x) noexcept;

Matrix bilinear_upsample(const Matrix& low, std::size_t height,
                         std::size_t width);

}  // namespace ddseg
