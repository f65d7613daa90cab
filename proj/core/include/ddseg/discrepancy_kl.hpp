#pragma once

#include <vector>

#include "ddseg/logits_prep.hpp"

namespace ddseg {

/// Orientation of the pointwise KL map between the class distribution Q and
/// the uniform target S.
enum class KlDirection {
  q_to_s,  // f_i ln(N f_i), the summands of D(Q || S)
  s_to_q,  // (1/N) ln(1 / (N f_i)), the summands of D(S || Q)
};

/// Per-patch KL summands. Zero-probability patches contribute 0 in q_to_s;
/// in s_to_q their probability is floored at the smallest normal double so
/// the map stays finite.
std::vector<double> kl_pointwise_map(const ClassDistribution& dist,
                                     const DegenerateTarget& target,
                                     KlDirection direction = KlDirection::q_to_s);

}  // namespace ddseg
