#include "ddseg/discrepancy_kl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ddseg/error.hpp"

namespace ddseg {

std::vector<double> kl_pointwise_map(const ClassDistribution& dist,
                                     const DegenerateTarget& target,
                                     KlDirection direction) {
  if (dist.probs.size() != target.n) {
    throw ShapeError("class distribution and target differ in length");
  }
  const double n = static_cast<double>(target.n);
  std::vector<double> terms(dist.probs.size(), 0.0);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const double f = dist.probs[i];
    if (direction == KlDirection::q_to_s) {
      if (f > 0.0) terms[i] = f * std::log(n * f);
    } else {
      const double q = std::max(f, std::numeric_limits<double>::min());
      terms[i] = -std::log(n * q) / n;
    }
  }
  return terms;
}

}  // namespace ddseg
