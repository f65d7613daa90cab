#include "ddseg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "ddseg/error.hpp"
#include "ddseg/image_io.hpp"
#include "ddseg/tensor_store.hpp"

namespace ddseg {
namespace {

constexpr double kConfidentLogit = 4.0;
constexpr double kAmbiguousLogit = 2.0;
constexpr double kDistractorLogit = -1.0;
constexpr double kConfidentNoise = 0.05;
constexpr double kAmbiguousNoise = 0.2;

constexpr double kClusterColour[2][3] = {{0.85, 0.25, 0.20},
                                         {0.20, 0.30, 0.85}};
constexpr double kGuideNoise = 0.03;

}  // namespace

TwoClusterFixture make_two_cluster_fixture(std::uint64_t seed,
                                           const TwoClusterOptions& options) {
  const Grid grid = options.grid;
  const std::size_t n = grid.size();
  if (grid.w < 2 || n == 0 || options.upscale == 0) {
    throw ParameterError("fixture grid needs at least two columns");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  TwoClusterFixture fx;
  fx.options = options;
  fx.cluster.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    fx.cluster[i] = (i % grid.w) < grid.w / 2 ? 0 : 1;
  }

  // Ambiguous patches, stratified so each cluster gets its share.
  fx.ambiguous.assign(n, 0);
  const auto total_ambiguous =
      static_cast<std::size_t>(std::lround(options.ambiguous_fraction * n));
  std::vector<std::size_t> members[2];
  for (std::size_t i = 0; i < n; ++i) members[fx.cluster[i]].push_back(i);
  const std::size_t first_share = (total_ambiguous + 1) / 2;
  const std::size_t shares[2] = {first_share, total_ambiguous - first_share};
  for (int c = 0; c < 2; ++c) {
    std::shuffle(members[c].begin(), members[c].end(), rng);
    for (std::size_t k = 0; k < std::min(shares[c], members[c].size()); ++k) {
      fx.ambiguous[members[c][k]] = 1;
    }
  }

  LogitsField& logits = fx.inputs.logits;
  logits.grid = grid;
  logits.class_names = {"class_a", "class_b", "distractor"};
  logits.raw = Matrix(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t own = fx.cluster[i];
    if (fx.ambiguous[i]) {
      logits.raw(i, 0) = kAmbiguousLogit + kAmbiguousNoise * gauss(rng);
      logits.raw(i, 1) = kAmbiguousLogit + kAmbiguousNoise * gauss(rng);
    } else {
      logits.raw(i, own) = kConfidentLogit + kConfidentNoise * gauss(rng);
      logits.raw(i, 1 - own) = kConfidentNoise * gauss(rng);
    }
    logits.raw(i, 2) = kDistractorLogit + kConfidentNoise * gauss(rng);
  }

  for (const char* tag : {"up0", "up1"}) {
    Matrix head(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double base =
            fx.cluster[i] == fx.cluster[j] ? options.within : options.across;
        head(i, j) = base + options.attention_noise * unit(rng);
      }
    }
    AttentionBlock block;
    block.tag = tag;
    block.weight = *default_block_weight(tag);
    block.grid = grid;
    block.heads.push_back(std::move(head));
    fx.inputs.attention.blocks.push_back(std::move(block));
  }

  GuidanceImage& guide = fx.inputs.guide;
  guide.height = grid.h * options.upscale;
  guide.width = grid.w * options.upscale;
  guide.pixels.resize(guide.height * guide.width * 3);
  for (std::size_t y = 0; y < guide.height; ++y) {
    for (std::size_t x = 0; x < guide.width; ++x) {
      const std::size_t patch =
          (y / options.upscale) * grid.w + x / options.upscale;
      for (std::size_t ch = 0; ch < 3; ++ch) {
        double v = kClusterColour[fx.cluster[patch]][ch] +
                   kGuideNoise * (2.0 * unit(rng) - 1.0);
        v = std::clamp(v, 0.0, 1.0);
        guide.pixels[(y * guide.width + x) * 3 + ch] =
            static_cast<double>(std::lround(v * 255.0)) / 255.0;
      }
    }
  }

  fx.palette = {{"class_a", 230, 60, 50},
                {"class_b", 40, 90, 220},
                {"distractor", 200, 200, 200}};
  return fx;
}

void write_fixture(const TwoClusterFixture& fx,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const LogitsField& logits = fx.inputs.logits;
  write_tensor(DenseTensor::from_f64({logits.raw.rows(), logits.raw.cols()},
                                     logits.raw.values()),
               dir / "logits.ddt");
  for (const auto& block : fx.inputs.attention.blocks) {
    const std::size_t nb = block.grid.size();
    std::vector<double> values;
    values.reserve(block.heads.size() * nb * nb);
    for (const auto& h : block.heads) {
      values.insert(values.end(), h.values().begin(), h.values().end());
    }
    write_tensor(DenseTensor::from_f64({block.heads.size(), nb, nb},
                                       std::move(values)),
                 dir / ("attn_" + block.tag + ".ddt"));
  }

  {
    std::ofstream classes(dir / "classes.txt");
    for (const auto& name : logits.class_names) classes << name << '\n';
    std::ofstream palette(dir / "palette.txt");
    for (const auto& e : fx.palette) {
      palette << e.name << ' ' << int{e.r} << ' ' << int{e.g} << ' ' << int{e.b}
              << '\n';
    }
    if (!classes || !palette) throw IoError("cannot write fixture text files");
  }
  write_guide_ppm(fx.inputs.guide, dir / "guide.ppm");

  const Grid grid = logits.grid;
  Gray16Image truth{grid.h, grid.w, {fx.cluster.begin(), fx.cluster.end()}};
  write_pgm16(truth, dir / "truth.pgm");
  Gray16Image ambiguous{grid.h, grid.w,
                        {fx.ambiguous.begin(), fx.ambiguous.end()}};
  write_pgm16(ambiguous, dir / "ambiguous.pgm");
}

}  // namespace ddseg
