#include "ddseg/discrepancy_markov.hpp"

#include <algorithm>
#include <cmath>

#include "ddseg/error.hpp"

namespace ddseg {
namespace {

void step(std::span<const double> f, const Matrix& t, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double fi = f[i];
    if (fi == 0.0) continue;
    const auto row = t.row(i);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += fi * row[j];
  }
}

}  // namespace

void VelocityConfig::validate() const {
  if (!(tau > 0.0)) throw ParameterError("tau must be > 0");
  if (max_steps < 1) throw ParameterError("max_steps must be >= 1");
  if (ipf_iterations < 1) throw ParameterError("IPF iterations must be >= 1");
}

TransitionMatrix ipf_balance(const Matrix& candidate, int iterations) {
  if (candidate.rows() != candidate.cols() || candidate.empty()) {
    throw ShapeError("IPF candidate must be a non-empty square matrix");
  }
  if (iterations < 1) throw ParameterError("IPF iterations must be >= 1");
  const std::size_t n = candidate.rows();
  TransitionMatrix out{Matrix(n, n), iterations, 0.0, 0.0};
  Matrix& t = out.t;
  {
    const auto src = candidate.data();
    auto dst = t.data();
    for (std::size_t k = 0; k < src.size(); ++k) {
      if (std::isnan(src[k])) throw NumericalError("NaN in IPF candidate");
      if (src[k] < 0.0) throw ParameterError("IPF candidate has negative entries");
      dst[k] = std::max(src[k], kTransitionFloor);
    }
  }

  std::vector<double> colsum(n);
  for (int k = 0; k < iterations; ++k) {
    std::fill(colsum.begin(), colsum.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = t.row(i);
      for (std::size_t j = 0; j < n; ++j) colsum[j] += row[j];
    }
    for (std::size_t i = 0; i < n; ++i) {
      auto row = t.row(i);
      for (std::size_t j = 0; j < n; ++j) row[j] /= colsum[j];
    }
    for (std::size_t i = 0; i < n; ++i) {
      auto row = t.row(i);
      double s = 0.0;
      for (double v : row) s += v;
      for (double& v : row) v /= s;
    }
  }

  std::fill(colsum.begin(), colsum.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = t.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      s += row[j];
      colsum[j] += row[j];
    }
    out.row_residual = std::max(out.row_residual, std::abs(s - 1.0));
  }
  for (double c : colsum) {
    out.col_residual = std::max(out.col_residual, std::abs(c - 1.0));
  }
  for (double v : t.data()) {
    if (std::isnan(v)) throw NumericalError("NaN after IPF balancing");
  }
  return out;
}

std::vector<std::vector<double>> markov_propagate(std::span<const double> f0,
                                                  const TransitionMatrix& t,
                                                  int steps) {
  if (f0.size() != t.t.rows()) {
    throw ShapeError("distribution length does not match transition matrix");
  }
  std::vector<std::vector<double>> iterates;
  iterates.reserve(static_cast<std::size_t>(std::max(steps, 0)));
  std::vector<double> prev(f0.begin(), f0.end());
  for (int l = 1; l <= steps; ++l) {
    std::vector<double> next(prev.size());
    step(prev, t.t, next);
    iterates.push_back(next);
    prev = std::move(next);
  }
  return iterates;
}

VelocityResult convergence_velocity(const ClassDistribution& f0,
                                    const TransitionMatrix& t,
                                    const VelocityConfig& cfg) {
  cfg.validate();
  const std::size_t n = f0.probs.size();
  if (n != t.t.rows()) {
    throw ShapeError("distribution length does not match transition matrix");
  }
  const double scale =
      cfg.scale == VariationScale::times_n ? static_cast<double>(n) : 1.0;

  VelocityResult result{std::vector<double>(n), std::vector<int>(n, 0)};
  std::vector<double> prev = f0.probs;
  std::vector<double> next(n);
  std::size_t pending = n;
  for (int l = 1; l <= cfg.max_steps && pending > 0; ++l) {
    step(prev, t.t, next);
    for (std::size_t i = 0; i < n; ++i) {
      if (result.steps[i] == 0 && scale * std::abs(next[i] - prev[i]) <= cfg.tau) {
        result.steps[i] = l;
        --pending;
      }
    }
    std::swap(prev, next);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (result.steps[i] == 0) result.steps[i] = cfg.max_steps;
    result.velocity[i] = 1.0 / static_cast<double>(result.steps[i]);
  }
  return result;
}

std::vector<double> velocity_discrepancy(const VelocityResult& result,
                                         VelocityMap map) {
  std::vector<double> out(result.velocity);
  if (map == VelocityMap::deficit) {
    for (double& v : out) v = 1.0 - v;
  }
  return out;
}

}  // namespace ddseg
