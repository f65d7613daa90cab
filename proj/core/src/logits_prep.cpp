#include "ddseg/logits_prep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "ddseg/error.hpp"

namespace ddseg {

void LogitsField::validate() const {
  if (raw.rows() == 0 || raw.cols() == 0) {
    throw ShapeError("logits must have at least one patch and one class");
  }
  if (grid.size() != raw.rows()) {
    throw ShapeError("patch grid " + std::to_string(grid.h) + "x" +
                     std::to_string(grid.w) + " does not cover " +
                     std::to_string(raw.rows()) + " patches");
  }
  if (!class_names.empty() && class_names.size() != raw.cols()) {
    throw ShapeError("class name count does not match logits columns");
  }
  for (double v : raw.data()) {
    if (std::isnan(v)) throw NumericalError("logits contain NaN");
  }
}

std::size_t KeepMask::kept_in_column(std::size_t c) const noexcept {
  std::size_t n = 0;
  for (std::size_t r = 0; r < rows; ++r) n += keep[r * cols + c];
  return n;
}

Matrix class_confidence(const LogitsField& field) {
  const Matrix& raw = field.raw;
  Matrix conf(raw.rows(), raw.cols());
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    const auto in = raw.row(r);
    auto out = conf.row(r);
    const double peak = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      out[c] = std::exp(in[c] - peak);
      sum += out[c];
    }
    for (double& v : out) v /= sum;
  }
  return conf;
}

std::vector<std::size_t> category_early_reject(const Matrix& confidence) {
  std::set<std::size_t> winners;
  for (std::size_t r = 0; r < confidence.rows(); ++r) {
    const auto row = confidence.row(r);
    // max_element returns the first maximum, i.e. the lowest class index.
    winners.insert(static_cast<std::size_t>(
        std::max_element(row.begin(), row.end()) - row.begin()));
  }
  return {winners.begin(), winners.end()};
}

std::vector<std::size_t> category_early_reject(const LogitsField& field) {
  return category_early_reject(class_confidence(field));
}

KeepMask nms_mask(const Matrix& confidence, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ParameterError("NMS threshold must lie in [0, 1]");
  }
  KeepMask mask{confidence.rows(), confidence.cols(), {}};
  mask.keep.resize(confidence.size());
  const auto values = confidence.data();
  for (std::size_t i = 0; i < values.size(); ++i) {
    mask.keep[i] = values[i] >= threshold ? 1 : 0;
  }
  return mask;
}

KeepMask nms_mask(const LogitsField& field, double threshold) {
  return nms_mask(class_confidence(field), threshold);
}

ClassDistribution normalize_per_class(const LogitsField& field,
                                      const KeepMask& mask, std::size_t c) {
  const Matrix& raw = field.raw;
  if (c >= raw.cols()) throw ParameterError("class index out of range");
  if (mask.rows != raw.rows() || mask.cols != raw.cols()) {
    throw ShapeError("NMS mask shape does not match logits");
  }
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    if (mask(i, c)) peak = std::max(peak, raw(i, c));
  }
  if (std::isinf(peak)) {
    throw EmptyClassError("every patch of class " + std::to_string(c) +
                          " is suppressed");
  }
  ClassDistribution dist{c, std::vector<double>(raw.rows(), 0.0)};
  double sum = 0.0;
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    if (mask(i, c)) {
      dist.probs[i] = std::exp(raw(i, c) - peak);
      sum += dist.probs[i];
    }
  }
  for (double& p : dist.probs) p /= sum;
  return dist;
}

}  // namespace ddseg
