#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "ddseg/error.hpp"
#include "ddseg/logits_prep.hpp"
#include "test_util.hpp"

namespace ddseg {
namespace {

LogitsField field_of(std::size_t n, std::size_t nc, std::vector<double> values) {
  LogitsField f;
  f.raw = Matrix(n, nc, std::move(values));
  f.grid = {1, n};
  f.class_names.resize(nc);
  for (std::size_t c = 0; c < nc; ++c) f.class_names[c] = "c" + std::to_string(c);
  return f;
}

LogitsField random_field(std::mt19937_64& rng, std::size_t n, std::size_t nc,
                         double scale) {
  return field_of(n, nc, testing::random_matrix(rng, n, nc, -scale, scale).values());
}

TEST(ClassConfidence, SymmetricLogitsSplitEvenly) {
  const auto conf = class_confidence(field_of(1, 2, {0.0, 0.0}));
  EXPECT_DOUBLE_EQ(conf(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(conf(0, 1), 0.5);
}

TEST(ClassConfidence, LogThreeGivesThreeQuarters) {
  const auto conf = class_confidence(field_of(1, 2, {std::log(3.0), 0.0}));
  EXPECT_NEAR(conf(0, 0), 0.75, 1e-15);
  EXPECT_NEAR(conf(0, 1), 0.25, 1e-15);
}

TEST(ClassConfidence, SingleClassIsCertain) {
  const auto conf = class_confidence(field_of(3, 1, {-5.0, 0.0, 7.0}));
  for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(conf(r, 0), 1.0);
}

TEST(EarlyReject, IdenticalPatchesKeepOneClass) {
  std::vector<double> v;
  for (int p = 0; p < 4; ++p) v.insert(v.end(), {0.1, 0.2, 0.0, 0.9, 0.3});
  EXPECT_EQ(category_early_reject(field_of(4, 5, v)), (std::vector<std::size_t>{3}));
}

TEST(EarlyReject, CollectsEveryWinner) {
  std::vector<double> v(12, 0.0);
  v[0] = 1.0;       // patch 0 -> class 0
  v[6 + 5] = 1.0;   // patch 1 -> class 5
  EXPECT_EQ(category_early_reject(field_of(2, 6, v)), (std::vector<std::size_t>{0, 5}));
}

TEST(EarlyReject, TieGoesToLowerIndex) {
  EXPECT_EQ(category_early_reject(field_of(1, 3, {0.0, 2.0, 2.0})),
            (std::vector<std::size_t>{1}));
  // Exhaustive two-class check over a grid of ties and near-ties.
  for (int a = -4; a <= 4; ++a) {
    for (int b = -4; b <= 4; ++b) {
      const auto winners = category_early_reject(field_of(1, 2, {a * 0.5, b * 0.5}));
      ASSERT_EQ(winners.size(), 1u);
      EXPECT_EQ(winners[0], a >= b ? 0u : 1u) << a << "," << b;
    }
  }
}

TEST(Nms, ThresholdBoundaries) {
  Matrix conf(1, 3, std::vector<double>{0.95, 0.89, 0.9});
  const auto mask = nms_mask(conf, 0.9);
  EXPECT_TRUE(mask(0, 0));
  EXPECT_FALSE(mask(0, 1));
  EXPECT_TRUE(mask(0, 2));

  const auto all = nms_mask(conf, 0.0);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_TRUE(all(0, c));
}

TEST(Nms, ThresholdOutsideUnitIntervalIsRejected) {
  const auto f = field_of(1, 2, {0.0, 1.0});
  EXPECT_THROW(nms_mask(f, -0.1), ParameterError);
  EXPECT_THROW(nms_mask(f, 1.5), ParameterError);
  EXPECT_THROW(nms_mask(f, std::nan("")), ParameterError);
}

TEST(Nms, RaisingThresholdNeverUnmasks) {
  std::mt19937_64 rng(5);
  const auto f = random_field(rng, 40, 4, 3.0);
  const auto conf = class_confidence(f);
  KeepMask prev = nms_mask(conf, 0.0);
  for (double t = 0.05; t <= 1.0; t += 0.05) {
    const KeepMask next = nms_mask(conf, t);
    for (std::size_t k = 0; k < next.keep.size(); ++k) {
      EXPECT_LE(next.keep[k], prev.keep[k]);
    }
    prev = next;
  }
}

TEST(NormalizePerClass, EqualKeptLogitsSplitEvenly) {
  const auto f = field_of(4, 1, {2.0, 2.0, 9.0, -1.0});
  KeepMask mask{4, 1, {1, 1, 0, 0}};
  const auto d = normalize_per_class(f, mask, 0);
  EXPECT_EQ(d.probs, (std::vector<double>{0.5, 0.5, 0.0, 0.0}));
}

TEST(NormalizePerClass, LogTwoGapGivesOneThirdTwoThirds) {
  const auto f = field_of(2, 1, {1.0, 1.0 + std::log(2.0)});
  KeepMask mask{2, 1, {1, 1}};
  const auto d = normalize_per_class(f, mask, 0);
  EXPECT_NEAR(d.probs[0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(d.probs[1], 2.0 / 3.0, 1e-15);
}

TEST(NormalizePerClass, SingleKeptPatchTakesAllMass) {
  const auto f = field_of(3, 1, {0.3, -2.0, 5.0});
  KeepMask mask{3, 1, {0, 1, 0}};
  const auto d = normalize_per_class(f, mask, 0);
  EXPECT_EQ(d.probs, (std::vector<double>{0.0, 1.0, 0.0}));
}

TEST(NormalizePerClass, FullySuppressedClassThrows) {
  const auto f = field_of(2, 2, {1.0, 2.0, 3.0, 4.0});
  KeepMask mask{2, 2, {1, 0, 1, 0}};
  EXPECT_THROW(normalize_per_class(f, mask, 1), EmptyClassError);
}

// Properties over random fields: distributions are nonnegative, sum to one,
// have exact zeros where masked, and ignore a constant shift of the class's
// logits; early rejection is a non-empty subset of the class range.
TEST(NormalizePerClass, RandomFieldProperties) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> shift(-50.0, 50.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 64;
    const std::size_t nc = 1 + rng() % 6;
    const auto f = random_field(rng, n, nc, 6.0);
    const auto conf = class_confidence(f);
    const auto winners = category_early_reject(conf);
    ASSERT_FALSE(winners.empty());
    for (auto c : winners) ASSERT_LT(c, nc);

    const auto mask = nms_mask(conf, 0.5);
    for (std::size_t c = 0; c < nc; ++c) {
      if (mask.kept_in_column(c) == 0) continue;
      const auto d = normalize_per_class(f, mask, c);
      const double sum = std::accumulate(d.probs.begin(), d.probs.end(), 0.0);
      EXPECT_NEAR(sum, 1.0, 1e-9);
      for (std::size_t i = 0; i < n; ++i) {
        EXPECT_GE(d.probs[i], 0.0);
        if (!mask(i, c)) EXPECT_EQ(d.probs[i], 0.0);
      }

      LogitsField shifted = f;
      const double s = shift(rng);
      for (std::size_t i = 0; i < n; ++i) shifted.raw(i, c) += s;
      const auto ds = normalize_per_class(shifted, mask, c);
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(ds.probs[i], d.probs[i], 1e-12);
    }
  }
}

TEST(LogitsField, ValidateCatchesBadInput) {
  auto f = field_of(2, 2, {0.0, 1.0, 2.0, 3.0});
  EXPECT_NO_THROW(f.validate());
  f.grid = {3, 1};
  EXPECT_THROW(f.validate(), ShapeError);
  f.grid = {2, 1};
  f.raw(1, 1) = std::nan("");
  EXPECT_THROW(f.validate(), NumericalError);
}

TEST(DegenerateTarget, IsUniform) {
  const DegenerateTarget t(8);
  EXPECT_EQ(t.value(), 0.125);
  for (double v : t.probs()) EXPECT_EQ(v, 0.125);
}

}  // namespace
}  // namespace ddseg
