#include "ddseg/attention_fusion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "ddseg/error.hpp"

namespace ddseg {
namespace {

struct Tap {
  std::size_t index;
  double weight;
};

// Sparse 1-D linear interpolation taps from a source axis of length `src`
// onto a destination axis of length `dst`.
std::vector<std::array<Tap, 2>> linear_taps(std::size_t src, std::size_t dst) {
  std::vector<std::array<Tap, 2>> taps(dst);
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  const double last = static_cast<double>(src - 1);
  for (std::size_t d = 0; d < dst; ++d) {
    double x = (static_cast<double>(d) + 0.5) * scale - 0.5;
    x = std::clamp(x, 0.0, last);
    const auto lo = static_cast<std::size_t>(std::floor(x));
    const std::size_t hi = std::min(lo + 1, src - 1);
    const double t = x - static_cast<double>(lo);
    taps[d] = {Tap{lo, 1.0 - t}, Tap{hi, t}};
  }
  return taps;
}

// Row i of the interpolation operator mapping `from` tokens to `to` tokens.
std::vector<std::vector<Tap>> grid_taps(Grid from, Grid to) {
  const auto ty = linear_taps(from.h, to.h);
  const auto tx = linear_taps(from.w, to.w);
  std::vector<std::vector<Tap>> rows(to.size());
  for (std::size_t y = 0; y < to.h; ++y) {
    for (std::size_t x = 0; x < to.w; ++x) {
      auto& r = rows[y * to.w + x];
      for (const auto& a : ty[y]) {
        for (const auto& b : tx[x]) {
          const double w = a.weight * b.weight;
          if (w != 0.0) r.push_back({a.index * from.w + b.index, w});
        }
      }
    }
  }
  return rows;
}

}  // namespace

void AttentionStack::validate() const {
  if (blocks.empty()) throw ParameterError("attention stack is empty");
  bool any_weight = false;
  for (const auto& b : blocks) {
    if (b.heads.empty()) {
      throw ShapeError("attention block '" + b.tag + "' has no heads");
    }
    if (!(b.weight >= 0.0) || !std::isfinite(b.weight)) {
      throw ParameterError("attention block '" + b.tag +
                           "' has a negative or non-finite weight");
    }
    any_weight = any_weight || b.weight > 0.0;
    const std::size_t n = b.grid.size();
    for (const auto& h : b.heads) {
      if (n == 0 || h.rows() != n || h.cols() != n) {
        throw ShapeError("attention block '" + b.tag +
                         "' head shape does not match its token grid");
      }
      for (double v : h.data()) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
          throw NumericalError("attention block '" + b.tag +
                               "' has negative or non-finite entries");
        }
      }
    }
  }
  if (!any_weight) {
    throw ParameterError("at least one attention block needs weight > 0");
  }
}

std::optional<double> default_block_weight(std::string_view tag) {
  if (tag == "down0" || tag == "down1" || tag == "up2") return 0.0;
  if (tag == "up0" || tag == "up1") return 0.5;
  return std::nullopt;
}

Matrix resize_attention(const Matrix& map, Grid from, Grid to) {
  if (from.h == 0 || from.w == 0 || to.h == 0 || to.w == 0) {
    throw ParameterError("attention grids must have positive dimensions");
  }
  if (map.rows() != from.size() || map.cols() != from.size()) {
    throw ShapeError("attention map does not match its token grid");
  }
  if (from == to) return map;

  const auto taps = grid_taps(from, to);
  const std::size_t nb = from.size();
  const std::size_t n = to.size();

  // Resample the key axis: tmp = map * R^T  (nb x n).
  Matrix tmp(nb, n);
  for (std::size_t a = 0; a < nb; ++a) {
    const auto src = map.row(a);
    auto dst = tmp.row(a);
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (const auto& t : taps[j]) acc += t.weight * src[t.index];
      dst[j] = acc;
    }
  }
  // Resample the query axis: out = R * tmp  (n x n).
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    auto dst = out.row(i);
    for (const auto& t : taps[i]) {
      const auto src = tmp.row(t.index);
      for (std::size_t j = 0; j < n; ++j) dst[j] += t.weight * src[j];
    }
  }
  return out;
}

CostMatrix fuse_attention(const AttentionStack& stack, Grid grid) {
  stack.validate();
  double total = 0.0;
  for (const auto& b : stack.blocks) total += b.weight;

  const std::size_t n = grid.size();
  CostMatrix fused{Matrix(n, n), grid};
  for (const auto& b : stack.blocks) {
    if (b.weight == 0.0) continue;
    const std::size_t nb = b.grid.size();
    Matrix mean(nb, nb);
    for (const auto& h : b.heads) {
      auto dst = mean.data();
      const auto src = h.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
    const double inv_heads = 1.0 / static_cast<double>(b.heads.size());
    for (double& v : mean.data()) v *= inv_heads;

    const Matrix resized = resize_attention(mean, b.grid, grid);
    const double w = b.weight / total;
    auto dst = fused.c.data();
    const auto src = resized.data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += w * src[k];
  }
  return fused;
}

CostMatrix attention_to_cost(const CostMatrix& fused, CostDirection direction) {
  if (direction == CostDirection::raw) return fused;
  const auto values = fused.c.data();
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double low = *lo;
  const double range = *hi - *lo;
  CostMatrix cost{Matrix(fused.c.rows(), fused.c.cols()), fused.grid};
  auto out = cost.c.data();
  // A constant attention map carries no preference; every pair costs zero.
  if (range <= 0.0) return cost;
  for (std::size_t k = 0; k < values.size(); ++k) {
    out[k] = 1.0 - (values[k] - low) / range;
  }
  return cost;
}

}  // namespace ddseg
