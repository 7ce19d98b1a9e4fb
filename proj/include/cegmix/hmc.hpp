#pragma once

#include "cegmix/mixture.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace cegmix {

struct SamplerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DivergencePersistent : SamplerError {
  using SamplerError::SamplerError;
};
struct NonFiniteDensity : SamplerError {
  using SamplerError::SamplerError;
};

struct SamplerConfig {
  int chains = 4;
  int warmup = 1000;
  int samples = 2000;
  std::uint64_t seed = 0;
  double target_accept = 0.8;
  double traj_length = 1.5;  // leapfrog path length in integration time
  int max_leapfrog = 512;
};

// Differentiable unnormalized log density. log_density_grad must be reentrant:
// chains evaluate it concurrently.
struct Target {
  Eigen::Index dim = 0;
  std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)> log_density_grad;
};

struct PosteriorDraws {
  std::vector<Eigen::MatrixXd> chains;  // per chain: samples x dim, unconstrained scale
  Eigen::VectorXd rhat;                 // per-parameter split R-hat (empty if c < 2)
  Eigen::VectorXd accept_rate;          // per-chain mean acceptance statistic
  Eigen::VectorXi divergent;            // per-chain post-warmup divergence counts
  std::uint64_t seed = 0;

  Eigen::Index chain_count() const { return static_cast<Eigen::Index>(chains.size()); }
  Eigen::Index draws_per_chain() const { return chains.empty() ? 0 : chains.front().rows(); }
  Eigen::Index dim() const { return chains.empty() ? 0 : chains.front().cols(); }
};

// Multi-chain HMC with dual-averaging step-size adaptation and windowed
// diagonal mass-matrix estimation during warmup. One initial point per chain.
// Deterministic given config.seed; chains run concurrently.
PosteriorDraws sample_hmc(const Target& target, const SamplerConfig& config,
                          const std::vector<Eigen::VectorXd>& inits);

// Fits the mixture posterior for the given data. Chains start from jittered
// moment-based estimates spread across distinct modes.
PosteriorDraws run_chains(const MixtureSpec& spec, const TransitionData& data,
                          const SamplerConfig& config);
PosteriorDraws run_chains(const MixtureSpec& spec, const HoldingData& data,
                          const SamplerConfig& config);

// Constrains every draw and averages; weights are renormalized to sum to one.
MixtureParams posterior_mean_params(const PosteriorDraws& draws, const MixtureSpec& spec);

}  // namespace cegmix
