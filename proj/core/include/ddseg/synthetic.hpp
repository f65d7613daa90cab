#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ddseg/pipeline.hpp"

namespace ddseg {

/// Two planted clusters on a patch grid: the left half of the grid is
/// cluster 0 ("class_a") and the right half cluster 1 ("class_b").
struct TwoClusterOptions {
  Grid grid{8, 8};
  std::size_t upscale = 4;  // guide pixels per patch along each axis
  double within = 0.9;      // attention between patches of one cluster
  double across = 0.1;
  double attention_noise = 1e-3;
  double ambiguous_fraction = 0.2;
};

struct TwoClusterFixture {
  SegmentationInputs inputs;
  std::vector<std::uint32_t> cluster;   // per patch, 0 or 1
  std::vector<std::uint8_t> ambiguous;  // per patch
  Palette palette;
  TwoClusterOptions options;
};

/// Logits are temperature-scaled similarities over three classes
/// (class_a, class_b, distractor). Confident patches score their cluster's
/// class near 4 and the other near 0; ambiguous patches score both near 2,
/// so suppression removes them from every class. The distractor never wins
/// a patch. Attention comes as two single-head blocks (up0, up1) and the
/// guide paints each cluster a distinct colour, quantized to 8 bits.
TwoClusterFixture make_two_cluster_fixture(std::uint64_t seed,
                                           const TwoClusterOptions& options = {});

/// Writes logits.ddt, attn_up0.ddt, attn_up1.ddt, classes.txt, guide.ppm,
/// palette.txt, truth.pgm (patch cluster ids) and ambiguous.pgm into `dir`.
void write_fixture(const TwoClusterFixture& fixture,
                   const std::filesystem::path& dir);

}  // namespace ddseg
