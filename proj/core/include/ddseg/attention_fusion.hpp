#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ddseg/matrix.hpp"

namespace ddseg {

/// Self-attention maps of one transformer block. Every head is an
/// `N_b x N_b` matrix over a `grid.h x grid.w` token lattice.
struct AttentionBlock {
  std::string tag;
  std::vector<Matrix> heads;
  Grid grid;
  double weight = 0.0;
};

struct AttentionStack {
  std::vector<AttentionBlock> blocks;

  void validate() const;
};

/// Fused N x N patch-to-patch matrix on the working grid.
struct CostMatrix {
  Matrix c;
  Grid grid;
};

/// How fused attention becomes a transport cost.
enum class CostDirection {
  raw,   // the fused attention itself
  flip,  // 1 - min-max normalized attention
};

/// Block weights from the best-performing combination over the diffusion
/// UNet blocks (down0, down1, up0, up1, up2) = (0, 0, 0.5, 0.5, 0).
std::optional<double> default_block_weight(std::string_view tag);

/// Bilinearly resamples both token axes of an attention map from `from` to
/// `to` (align-corners false, edge clamped).
Matrix resize_attention(const Matrix& map, Grid from, Grid to);

/// Head-averaged, resized, weight-renormalized sum of all blocks.
/// Throws ParameterError when all weights are zero.
CostMatrix fuse_attention(const AttentionStack& stack, Grid grid);

CostMatrix attention_to_cost(const CostMatrix& fused, CostDirection direction);

}  // namespace ddseg
