#pragma once

#include "cegmix/hmc.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace cegmix {

struct ProposalDegenerate : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BridgeEstimate {
  double log_ml = 0.0;
  int iterations = 0;
  bool converged = false;
  double relative_change = 0.0;
  double mc_error = 0.0;  // 10-fold subsample spread
  Eigen::VectorXd proposal_mean;
  Eigen::MatrixXd proposal_cov;
};

// Iterative bridge estimate of the normalizer of an unnormalized log density,
// using half the draws to moment-match a Gaussian proposal and the other half
// (plus an equal count of fresh proposal draws) for the bridge iteration.
// swap_halves exchanges the two roles; fresh draws come from a dedicated
// stream of the generator keyed by draws.seed. Needs >= 1000 total draws.
BridgeEstimate bridge_log_ml(const PosteriorDraws& draws,
                             const std::function<double(const Eigen::VectorXd&)>& log_density,
                             bool swap_halves = false);

BridgeEstimate bridge_log_ml(const PosteriorDraws& draws, const MixtureSpec& spec,
                             const TransitionData& data, bool swap_halves = false);
BridgeEstimate bridge_log_ml(const PosteriorDraws& draws, const MixtureSpec& spec,
                             const HoldingData& data, bool swap_halves = false);

struct ModelChoice {
  std::size_t best = 0;
  bool any_unconverged = false;
};

// Argmax of log_ml; exact ties resolve to the earliest (smallest) model.
ModelChoice compare_models(const std::vector<BridgeEstimate>& scores);

}  // namespace cegmix
