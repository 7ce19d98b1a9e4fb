#pragma once

#include "cegmix/bridge.hpp"
#include "cegmix/conjugate.hpp"
#include "cegmix/hmc.hpp"
#include "cegmix/rhat.hpp"

#include <functional>
#include <stdexcept>
#include <vector>

namespace cegmix {

struct SearchAborted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MixturePriors {
  double dirichlet_conc = 1.0;
  BetaPrior component_beta{};    // Binomial component probabilities
  GammaPrior component_gamma{};  // Weibull component shapes
};

struct SearchConfig {
  int k_max = 10;
  SamplerConfig sampler{};  // per-k fits derive their seeds from sampler.seed
};

struct ScoreEntry {
  int k = 0;
  double log_ml = 0.0;
  bool converged = false;
  bool accepted = false;
};

struct SearchResult {
  int k_selected = 0;
  Allocation allocation;  // hard labels plus the soft allocation matrix
  MixtureParams params;
  std::vector<ScoreEntry> score_trace;            // one entry per fitted k
  std::vector<ConvergenceReport> convergence;     // aligned with score_trace
  double seconds = 0.0;
};

// Everything one k's fit produces; the search loop keeps the last accepted one.
struct KFit {
  int k = 0;
  BridgeEstimate score;
  ConvergenceReport convergence;
  MixtureParams params;
  Allocation allocation;
};

// Upward component-count search: fit k=2, keep increasing k while the bridge
// log marginal likelihood does not drop (non-strict), stop on the first
// decrease or at k_max and return the last accepted fit. A sampler failure at
// k=2 aborts; later failures end the loop with the current best.
SearchResult run_search(const std::function<KFit(int)>& fit_k, int k_max);

SearchResult select_situation_clusters(const TransitionData& data,
                                       const MixturePriors& priors,
                                       const SearchConfig& config);
SearchResult select_edge_clusters(const HoldingData& data, double scale,
                                  const MixturePriors& priors,
                                  const SearchConfig& config);

}  // namespace cegmix
