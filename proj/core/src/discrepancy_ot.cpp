#include "ddseg/discrepancy_ot.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ddseg/error.hpp"

namespace ddseg {
namespace {

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (std::isnan(x)) {
      throw NumericalError(std::string("NaN in Sinkhorn ") + what);
    }
  }
}

}  // namespace

void SinkhornConfig::validate() const {
  if (!(epsilon > 0.0)) throw ParameterError("epsilon must be > 0");
  if (iterations < 1) throw ParameterError("Sinkhorn iterations must be >= 1");
  if (!(underflow_floor > 0.0)) {
    throw ParameterError("underflow floor must be > 0");
  }
}

Matrix gibbs_kernel(const Matrix& cost, double epsilon, double floor) {
  if (!(epsilon > 0.0)) throw ParameterError("epsilon must be > 0");
  Matrix k(cost.rows(), cost.cols());
  const auto c = cost.data();
  auto out = k.data();
  for (std::size_t i = 0; i < c.size(); ++i) {
    out[i] = std::max(std::exp(-c[i] / epsilon), floor);
  }
  return k;
}

TransportPlan sinkhorn_solve(std::span<const double> source,
                             std::span<const double> target,
                             std::shared_ptr<const Matrix> kernel,
                             const SinkhornConfig& cfg) {
  cfg.validate();
  if (!kernel) throw ParameterError("Sinkhorn kernel is null");
  const Matrix& k = *kernel;
  const std::size_t n = source.size();
  const std::size_t m = target.size();
  if (k.rows() != n || k.cols() != m) {
    throw ShapeError("kernel shape does not match the marginals");
  }

  TransportPlan plan;
  plan.kernel = kernel;
  plan.mu.assign(n, 0.0);
  plan.nu.assign(m, 1.0);
  std::vector<double> kv(n);
  std::vector<double> ktu(m);

  auto guard = [&](double d) {
    if (d < cfg.underflow_floor) {
      plan.numerical_warning = true;
      return cfg.underflow_floor;
    }
    return d;
  };

  for (int it = 0; it < cfg.iterations; ++it) {
    // mu <- a / (K nu); rows with zero source mass stay at mu = 0.
    for (std::size_t i = 0; i < n; ++i) {
      if (source[i] == 0.0) {
        plan.mu[i] = 0.0;
        continue;
      }
      const auto row = k.row(i);
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += row[j] * plan.nu[j];
      kv[i] = acc;
      plan.mu[i] = source[i] / guard(acc);
    }
    // nu <- b / (K^T mu)
    std::fill(ktu.begin(), ktu.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = plan.mu[i];
      if (u == 0.0) continue;
      const auto row = k.row(i);
      for (std::size_t j = 0; j < m; ++j) ktu[j] += row[j] * u;
    }
    for (std::size_t j = 0; j < m; ++j) {
      plan.nu[j] = target[j] / guard(ktu[j]);
    }
    check_finite(plan.mu, "mu");
    check_finite(plan.nu, "nu");
    if (cfg.trace_objective) {
      plan.dual_trace.push_back(sinkhorn_dual_objective(
          plan.mu, plan.nu, k, source, target, cfg.epsilon));
    }
  }

  plan.pi = Matrix(n, m);
  std::vector<double> colsum(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto krow = k.row(i);
    auto prow = plan.pi.row(i);
    double rowsum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      prow[j] = plan.mu[i] * krow[j] * plan.nu[j];
      rowsum += prow[j];
      colsum[j] += prow[j];
    }
    plan.row_error = std::max(plan.row_error, std::abs(rowsum - source[i]));
  }
  for (std::size_t j = 0; j < m; ++j) {
    plan.col_error = std::max(plan.col_error, std::abs(colsum[j] - target[j]));
  }
  check_finite(plan.pi.data(), "plan");
  return plan;
}

TransportPlan sinkhorn_solve(const ClassDistribution& source,
                             const DegenerateTarget& target,
                             std::shared_ptr<const Matrix> kernel,
                             const SinkhornConfig& cfg) {
  if (source.probs.size() != target.n) {
    throw ShapeError("class distribution and target differ in length");
  }
  const auto t = target.probs();
  return sinkhorn_solve(source.probs, t, std::move(kernel), cfg);
}

std::vector<double> path_map(const TransportPlan& plan, const CostMatrix& cost,
                             PathNorm norm) {
  const Matrix& pi = plan.pi;
  if (pi.rows() != cost.c.rows() || pi.cols() != cost.c.cols()) {
    throw ShapeError("transport plan and cost matrix differ in shape");
  }
  std::vector<double> q(pi.cols(), 0.0);
  for (std::size_t i = 0; i < pi.rows(); ++i) {
    const auto p = pi.row(i);
    const auto c = cost.c.row(i);
    for (std::size_t j = 0; j < q.size(); ++j) q[j] += p[j] * c[j];
  }

  if (norm == PathNorm::sum) {
    double total = 0.0;
    for (double v : q) total += v;
    if (total > 0.0) {
      for (double& v : q) v /= total;
    } else {
      std::fill(q.begin(), q.end(), 1.0 / static_cast<double>(q.size()));
    }
    return q;
  }

  const double peak = *std::max_element(q.begin(), q.end());
  double total = 0.0;
  for (double& v : q) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : q) v /= total;
  return q;
}

double entropic_primal_objective(const Matrix& pi, const Matrix& cost,
                                 double epsilon) {
  const auto p = pi.data();
  const auto c = cost.data();
  double value = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    value += c[k] * p[k];
    if (p[k] > 0.0) value += epsilon * p[k] * (std::log(p[k]) - 1.0);
  }
  return value;
}

double sinkhorn_dual_objective(std::span<const double> mu,
                               std::span<const double> nu, const Matrix& kernel,
                               std::span<const double> source,
                               std::span<const double> target, double epsilon) {
  double value = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (source[i] > 0.0) value += source[i] * std::log(mu[i]);
  }
  for (std::size_t j = 0; j < nu.size(); ++j) {
    if (target[j] > 0.0) value += target[j] * std::log(nu[j]);
  }
  double mass = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu[i] == 0.0) continue;
    const auto row = kernel.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < nu.size(); ++j) acc += row[j] * nu[j];
    mass += mu[i] * acc;
  }
  return epsilon * (value - mass);
}

}  // namespace ddseg
