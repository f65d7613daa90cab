#pragma once

#include <span>
#include <vector>

#include "ddseg/logits_prep.hpp"
#include "ddseg/matrix.hpp"

namespace ddseg {

inline constexpr double kTransitionFloor = 1e-12;

struct TransitionMatrix {
  Matrix t;
  int ipf_iterations_used = 0;
  /// max |row sum - 1| and max |column sum - 1| after balancing.
  double row_residual = 0.0;
  double col_residual = 0.0;
};

/// Whether the per-step variation is compared to tau as is, or multiplied
/// by N first (probabilities over N patches are O(1/N)).
enum class VariationScale { raw, times_n };

/// Which quantity of the convergence velocity becomes the class score.
enum class VelocityMap {
  deficit,  // 1 - v: patches that take longer to settle score higher
  direct,   // v itself
};

struct VelocityConfig {
  double tau = 0.3;
  int max_steps = 1000;
  int ipf_iterations = 15;
  VariationScale scale = VariationScale::times_n;

  void validate() const;
};

/// Floors the candidate at kTransitionFloor, then alternates column and row
/// normalization `iterations` times.
TransitionMatrix ipf_balance(const Matrix& candidate, int iterations = 15);

/// f^(l) = f^(l-1) T for l = 1..steps.
std::vector<std::vector<double>> markov_propagate(std::span<const double> f0,
                                                  const TransitionMatrix& t,
                                                  int steps);

struct VelocityResult {
  std::vector<double> velocity;  // 1 / steps, in (0, 1]
  std::vector<int> steps;        // first l >= 1 with variation <= tau
};

VelocityResult convergence_velocity(const ClassDistribution& f0,
                                    const TransitionMatrix& t,
                                    const VelocityConfig& cfg = {});

std::vector<double> velocity_discrepancy(const VelocityResult& result,
                                         VelocityMap map = VelocityMap::deficit);

}  // namespace ddseg
