#pragma once

#include <memory>
#include <span>
#include <vector>

#include "ddseg/attention_fusion.hpp"
#include "ddseg/logits_prep.hpp"
#include "ddseg/matrix.hpp"

namespace ddseg {

inline constexpr double kDefaultUnderflowFloor = 1e-30;

struct SinkhornConfig {
  double epsilon = 0.1;
  int iterations = 50;
  double underflow_floor = kDefaultUnderflowFloor;
  /// Record the dual objective after every iteration in
  /// TransportPlan::dual_trace.
  bool trace_objective = false;

  void validate() const;
};

/// Entropic transport plan in scaled form, pi = diag(mu) K diag(nu).
struct TransportPlan {
  Matrix pi;
  std::vector<double> mu;
  std::vector<double> nu;
  std::shared_ptr<const Matrix> kernel;

  /// max |rowsum(pi) - source| and max |colsum(pi) - target|.
  double row_error = 0.0;
  double col_error = 0.0;
  /// Set when a scaling denominator fell below the underflow floor.
  bool numerical_warning = false;
  std::vector<double> dual_trace;

  double max_marginal_error() const noexcept {
    return row_error > col_error ? row_error : col_error;
  }
};

/// How the column cost mass is turned into the path map.
enum class PathNorm { softmax, sum };

/// K = exp(-C / epsilon), entries below `floor` clamped up to `floor`.
Matrix gibbs_kernel(const Matrix& cost, double epsilon,
                    double floor = kDefaultUnderflowFloor);

/// Alternating Sinkhorn scaling from nu = 1, for a fixed iteration count.
/// Throws NumericalError if a NaN appears.
TransportPlan sinkhorn_solve(const ClassDistribution& source,
                             const DegenerateTarget& target,
                             std::shared_ptr<const Matrix> kernel,
                             const SinkhornConfig& cfg = {});

/// Generic-marginal form used by the above.
TransportPlan sinkhorn_solve(std::span<const double> source,
                             std::span<const double> target,
                             std::shared_ptr<const Matrix> kernel,
                             const SinkhornConfig& cfg = {});

/// q_j = sum_i pi_ij C_ij, normalized over patches.
std::vector<double> path_map(const TransportPlan& plan, const CostMatrix& cost,
                             PathNorm norm = PathNorm::softmax);

/// <C, pi> + eps * sum pi (ln pi - 1), with 0 ln 0 = 0.
double entropic_primal_objective(const Matrix& pi, const Matrix& cost,
                                 double epsilon);

/// eps * (<a, ln mu> + <b, ln nu> - sum_ij mu_i K_ij nu_j). Non-decreasing
/// under Sinkhorn updates; equals the primal objective at the optimum.
double sinkhorn_dual_objective(std::span<const double> mu,
                               std::span<const double> nu, const Matrix& kernel,
                               std::span<const double> source,
                               std::span<const double> target, double epsilon);

}  // namespace ddseg
