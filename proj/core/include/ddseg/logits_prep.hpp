#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ddseg/matrix.hpp"

namespace ddseg {

inline constexpr double kDefaultNmsThreshold = 0.9;

/// Patch-by-class similarity scores on an `h x w` patch grid.
struct LogitsField {
  Matrix raw;  // N x N_c
  Grid grid;
  std::vector<std::string> class_names;

  std::size_t patch_count() const noexcept { return raw.rows(); }
  std::size_t class_count() const noexcept { return raw.cols(); }

  /// Throws ShapeError / NumericalError when the invariants do not hold.
  void validate() const;
};

/// Normalized distribution of one class over the N patches.
struct ClassDistribution {
  std::size_t class_index = 0;
  std::vector<double> probs;
};

/// The uniform target distribution 1/N over N patches.
struct DegenerateTarget {
  std::size_t n = 0;

  explicit DegenerateTarget(std::size_t patches) : n(patches) {}
  double value() const noexcept { return 1.0 / static_cast<double>(n); }
  std::vector<double> probs() const { return std::vector<double>(n, value()); }
};

/// N x N_c keep/suppress flags. `true` keeps the (patch, class) cell.
struct KeepMask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> keep;

  bool operator()(std::size_t r, std::size_t c) const noexcept {
    return keep[r * cols + c] != 0;
  }
  std::size_t kept_in_column(std::size_t c) const noexcept;
};

/// Row-wise softmax over classes.
Matrix class_confidence(const LogitsField& field);

/// Sorted indices of the classes that win at least one patch. Ties go to the
/// lower class index.
std::vector<std::size_t> category_early_reject(const LogitsField& field);
std::vector<std::size_t> category_early_reject(const Matrix& confidence);

KeepMask nms_mask(const LogitsField& field,
                  double threshold = kDefaultNmsThreshold);
KeepMask nms_mask(const Matrix& confidence,
                  double threshold = kDefaultNmsThreshold);

/// Softmax over patches of class `c`, with suppressed cells forced to exactly
/// zero. Throws EmptyClassError when every patch of the class is suppressed.
ClassDistribution normalize_per_class(const LogitsField& field,
                                      const KeepMask& mask, std::size_t c);

}  // namespace ddseg
