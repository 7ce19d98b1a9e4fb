#pragma once

#include "cegmix/partition.hpp"

namespace cegmix {

struct UnitSetMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TooFewUnits : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Normalised mutual information I(pred, truth) / sqrt(H(pred) H(truth)),
// natural log. When either partition has a single block its entropy is zero
// and the ratio is 0/0; by convention the score is then 1 for identical
// partitions and 0 otherwise.
double nmi(const Partition& pred, const Partition& truth);

// Fraction of unordered unit pairs on which the two partitions agree
// (same cluster in both, or different cluster in both). Needs >= 2 units.
double rand_index(const Partition& pred, const Partition& truth);

}  // namespace cegmix
