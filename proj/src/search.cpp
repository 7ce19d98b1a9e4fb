#include "cegmix/search.hpp"

#include "cegmix/rng.hpp"

#include <chrono>
#include <limits>
#include <utility>

namespace cegmix {
namespace {

MixtureSpec make_spec(int k, Family family, double scale, const MixturePriors& priors) {
  MixtureSpec spec;
  spec.k = k;
  spec.family = family;
  spec.weibull_scale = scale;
  spec.dirichlet_conc = priors.dirichlet_conc;
  spec.component_beta = priors.component_beta;
  spec.component_gamma = priors.component_gamma;
  return spec;
}

template <class Data>
KFit fit_one_k(int k, Family family, double scale, const Data& data,
               const MixturePriors& priors, const SearchConfig& config) {
  const MixtureSpec spec = make_spec(k, family, scale, priors);
  SamplerConfig sampler = config.sampler;
  sampler.seed = substream(config.sampler.seed, static_cast<std::uint64_t>(k));

  KFit fit;
  fit.k = k;
  PosteriorDraws draws = run_chains(spec, data, sampler);
  fit.score = bridge_log_ml(draws, spec, data);
  // Thresholds count component coordinates only; weight coordinates are still
  // reported in the per-parameter vector.
  fit.convergence = split_rhat(draws.chains, k - 1);
  fit.params = posterior_mean_params(draws, spec);
  if constexpr (std::is_same_v<Data, TransitionData>)
    fit.allocation = allocate_situations(fit.params, data);
  else
    fit.allocation = allocate_edges(fit.params, data, scale);
  return fit;
}

}  // namespace

SearchResult run_search(const std::function<KFit(int)>& fit_k, int k_max) {
  if (k_max < 2) throw std::invalid_argument("run_search: k_max must be at least 2");
  const auto t0 = std::chrono::steady_clock::now();

  SearchResult result;
  double score = -std::numeric_limits<double>::infinity();
  KFit best;
  for (int k = 2; k <= k_max; ++k) {
    KFit fit;
    try {
      fit = fit_k(k);
    } catch (const SamplerError& err) {
      if (k == 2) throw SearchAborted(std::string("search: first fit failed: ") + err.what());
      break;
    }
    ScoreEntry entry{k, fit.score.log_ml, fit.score.converged, false};
    if (fit.score.log_ml >= score) {
      entry.accepted = true;
      score = fit.score.log_ml;
      best = std::move(fit);
      result.score_trace.push_back(entry);
      result.convergence.push_back(best.convergence);
    } else {
      result.score_trace.push_back(entry);
      result.convergence.push_back(fit.convergence);
      break;
    }
  }

  result.k_selected = best.k;
  result.allocation = std::move(best.allocation);
  result.params = std::move(best.params);
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

SearchResult select_situation_clusters(const TransitionData& data,
                                       const MixturePriors& priors,
                                       const SearchConfig& config) {
  validate(data);
  if (data.ids.size() < 2)
    throw std::invalid_argument("select_situation_clusters: need at least 2 situations");
  return run_search(
      [&](int k) { return fit_one_k(k, Family::Binomial, 1.0, data, priors, config); },
      config.k_max);
}

SearchResult select_edge_clusters(const HoldingData& data, double scale,
                                  const MixturePriors& priors,
                                  const SearchConfig& config) {
  validate(data);
  if (data.ids.size() < 2)
    throw std::invalid_argument("select_edge_clusters: need at least 2 edges");
  if (!(scale > 0.0)) throw std::invalid_argument("select_edge_clusters: scale must be > 0");
  return run_search(
      [&](int k) { return fit_one_k(k, Family::Weibull, scale, data, priors, config); },
      config.k_max);
}

}  // namespace cegmix
