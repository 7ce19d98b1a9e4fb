#pragma once

#include "cegmix/conjugate.hpp"

namespace cegmix {

struct TooManyUnits : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct AhcResult {
  Partition partition;
  double log_score = 0.0;
  double seconds = 0.0;
  // score_trace[m] is the partition score after m merges; it is
  // non-decreasing because only improving merges are taken.
  std::vector<double> score_trace;
};

struct ExactSearchResult {
  Partition partition;
  double log_score = 0.0;
};

// Greedy agglomeration from singletons. Each step applies the pair merge
// with the largest strictly positive score gain (ties: lowest index pair)
// and stops once no merge improves the score.
AhcResult ahc_cluster(const TransitionData& data, const BetaPrior& prior);
AhcResult ahc_cluster(const HoldingData& data, const WeibullGammaPrior& prior);

// Scores every set partition (Bell-number enumeration) and returns the
// argmax; ties prefer fewer clusters, then lexicographic labels. Capped at
// 10 units (throws TooManyUnits).
ExactSearchResult exact_partition_search(const TransitionData& data,
                                         const BetaPrior& prior);
ExactSearchResult exact_partition_search(const HoldingData& data,
                                         const WeibullGammaPrior& prior);

}  // namespace cegmix
