#pragma once

#include "cegmix/data.hpp"
#include "cegmix/partition.hpp"

#include <stdexcept>

namespace cegmix {

struct InvalidPrior : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct PartitionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct BetaPrior {
  double alpha = 1.0;
  double beta = 1.0;
};

// Gamma(shape = shape_hyper, rate = rate) prior on beta = lambda^{-k} for a
// Weibull with known shape k, so conditional densities stay conjugate.
struct WeibullGammaPrior {
  double rate = 1.0;
  double shape_hyper = 1.0;
  double known_shape = 1.0;
};

// log integral of the Binomial kernel theta^s (1-theta)^f against the Beta
// prior: log B(alpha+s, beta+f) - log B(alpha, beta). No choose(n, s) term;
// the data enter only through the (successes, failures) sufficient pair.
double log_marginal_binomial(int successes, int failures, const BetaPrior& prior);

// log integral of prod_j Weib(h_j | k, lambda) against the Gamma prior on
// lambda^{-k}:
//   n log k + (k-1) sum log h + b log a - lgamma(b)
//     + lgamma(b+n) - (b+n) log(a + sum h^k).
double log_marginal_weibull_known_shape(const Eigen::VectorXd& times,
                                        const WeibullGammaPrior& prior);

// Sum of per-cluster evidences for a hard clustering of the units. Clusters
// pool sufficient statistics; units stay independent across clusters.
double score_partition(const TransitionData& data, const Partition& part,
                       const BetaPrior& prior);
double score_partition(const HoldingData& data, const Partition& part,
                       const WeibullGammaPrior& prior);

}  // namespace cegmix
