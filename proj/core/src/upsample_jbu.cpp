#include "ddseg/upsample_jbu.hpp"

#include <algorithm>
#include <cmath>

#include "ddseg/error.hpp"

namespace ddseg {
namespace {

constexpr double kMinKernelSum = 1e-20;

// Low-res coordinate of the centre of high-res pixel `p`.
double to_low(std::size_t p, std::size_t low, std::size_t high) noexcept {
  return (static_cast<double>(p) + 0.5) * static_cast<double>(low) /
             static_cast<double>(high) -
         0.5;
}

// High-res pixel nearest to the back-projected centre of low-res sample `q`.
std::size_t to_high(std::size_t q, std::size_t low, std::size_t high) noexcept {
  const double c = (static_cast<double>(q) + 0.5) * static_cast<double>(high) /
                       static_cast<double>(low) -
                   0.5;
  const double r = std::floor(c + 0.5);
  return static_cast<std::size_t>(
      std::clamp(r, 0.0, static_cast<double>(high - 1)));
}

}  // namespace

void GuidanceImage::validate() const {
  if (height == 0 || width == 0) throw ShapeError("guide image is empty");
  if (pixels.size() != height * width * 3) {
    throw ShapeError("guide pixel buffer does not match its dimensions");
  }
  for (double v : pixels) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ParameterError("guide channel values must lie in [0, 1]");
    }
  }
}

void JbuConfig::validate() const {
  if (!(sigma_s_sq > 0.0) || !(sigma_r_sq > 0.0)) {
    throw ParameterError("JBU variances must be > 0");
  }
  if (!(window_radius > 0.0)) {
    throw ParameterError("JBU window radius must be > 0");
  }
}

double bilinear_sample(const Matrix& low, double y, double x) noexcept {
  const double ymax = static_cast<double>(low.rows() - 1);
  const double xmax = static_cast<double>(low.cols() - 1);
  y = std::clamp(y, 0.0, ymax);
  x = std::clamp(x, 0.0, xmax);
  const auto y0 = static_cast<std::size_t>(std::floor(y));
  const auto x0 = static_cast<std::size_t>(std::floor(x));
  const std::size_t y1 = std::min(y0 + 1, low.rows() - 1);
  const std::size_t x1 = std::min(x0 + 1, low.cols() - 1);
  const double ty = y - static_cast<double>(y0);
  const double tx = x - static_cast<double>(x0);
  const double top = (1.0 - tx) * low(y0, x0) + tx * low(y0, x1);
  const double bottom = (1.0 - tx) * low(y1, x0) + tx * low(y1, x1);
  return (1.0 - ty) * top + ty * bottom;
}

Matrix bilinear_upsample(const Matrix& low, std::size_t height,
                         std::size_t width) {
  if (low.empty()) throw ShapeError("cannot upsample an empty map");
  Matrix out(height, width);
  for (std::size_t y = 0; y < height; ++y) {
    const double ly = to_low(y, low.rows(), height);
    for (std::size_t x = 0; x < width; ++x) {
      out(y, x) = bilinear_sample(low, ly, to_low(x, low.cols(), width));
    }
  }
  return out;
}

JbuResult jbu_upsample(std::span<const Matrix> low, const GuidanceImage& guide,
                       const JbuConfig& cfg) {
  cfg.validate();
  guide.validate();
  JbuResult result;
  if (low.empty()) return result;

  const std::size_t h = low.front().rows();
  const std::size_t w = low.front().cols();
  for (const auto& m : low) {
    if (m.rows() != h || m.cols() != w) {
      throw ShapeError("JBU inputs must share one low-res grid");
    }
  }
  const std::size_t H = guide.height;
  const std::size_t W = guide.width;
  if (h == 0 || w == 0 || h > H || w > W) {
    throw ShapeError("JBU low-res map must not exceed the guide resolution");
  }

  // Guide colour at each low-res sample's back-projected centre.
  std::vector<double> sample_rgb(h * w * 3);
  for (std::size_t qy = 0; qy < h; ++qy) {
    const std::size_t gy = to_high(qy, h, H);
    for (std::size_t qx = 0; qx < w; ++qx) {
      const std::size_t gx = to_high(qx, w, W);
      for (std::size_t ch = 0; ch < 3; ++ch) {
        sample_rgb[(qy * w + qx) * 3 + ch] = guide.at(gy, gx, ch);
      }
    }
  }

  result.maps.assign(low.size(), Matrix(H, W));
  const double r = cfg.window_radius;
  struct Neighbour {
    std::size_t qy, qx;
    double weight;
  };
  std::vector<Neighbour> window;

  for (std::size_t y = 0; y < H; ++y) {
    const double ly = to_low(y, h, H);
    const double y_lo = std::max(0.0, std::ceil(ly - r));
    const double y_hi = std::min(static_cast<double>(h - 1), std::floor(ly + r));
    for (std::size_t x = 0; x < W; ++x) {
      const double lx = to_low(x, w, W);
      const double x_lo = std::max(0.0, std::ceil(lx - r));
      const double x_hi =
          std::min(static_cast<double>(w - 1), std::floor(lx + r));

      const double pr = guide.at(y, x, 0);
      const double pg = guide.at(y, x, 1);
      const double pb = guide.at(y, x, 2);

      window.clear();
      double kp = 0.0;
      for (double fy = y_lo; fy <= y_hi; fy += 1.0) {
        const auto qy = static_cast<std::size_t>(fy);
        const double dy = fy - ly;
        for (double fx = x_lo; fx <= x_hi; fx += 1.0) {
          const auto qx = static_cast<std::size_t>(fx);
          const double dx = fx - lx;
          const double* rgb = &sample_rgb[(qy * w + qx) * 3];
          const double dr = pr - rgb[0];
          const double dg = pg - rgb[1];
          const double db = pb - rgb[2];
          const double weight =
              std::exp(-(dy * dy + dx * dx) / cfg.sigma_s_sq) *
              std::exp(-(dr * dr + dg * dg + db * db) / cfg.sigma_r_sq);
          kp += weight;
          window.push_back({qy, qx, weight});
        }
      }

      if (kp < kMinKernelSum) {
        ++result.fallback_pixels;
        for (std::size_t m = 0; m < low.size(); ++m) {
          result.maps[m](y, x) = bilinear_sample(low[m], ly, lx);
        }
        continue;
      }
      for (std::size_t m = 0; m < low.size(); ++m) {
        // Offsets from the first sample keep constant windows exact; the
        // clamp keeps rounding inside the convex hull of the window.
        const Matrix& src = low[m];
        const double anchor = src(window.front().qy, window.front().qx);
        double lo = anchor;
        double hi = anchor;
        double acc = 0.0;
        for (const auto& nb : window) {
          const double v = src(nb.qy, nb.qx);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
          acc += nb.weight * (v - anchor);
        }
        result.maps[m](y, x) = std::clamp(anchor + acc / kp, lo, hi);
      }
    }
  }
  return result;
}

Matrix jbu_upsample(const Matrix& low, const GuidanceImage& guide,
                    const JbuConfig& cfg) {
  auto result = jbu_upsample(std::span<const Matrix>(&low, 1), guide, cfg);
  return std::move(result.maps.front());
}

}  // namespace ddseg
