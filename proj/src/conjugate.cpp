#include "cegmix/conjugate.hpp"

#include <cmath>

namespace cegmix {

namespace {

void check(const BetaPrior& prior) {
  if (!(prior.alpha > 0.0) || !(prior.beta > 0.0))
    throw InvalidPrior("Beta prior needs alpha > 0 and beta > 0");
}

void check(const WeibullGammaPrior& prior) {
  if (!(prior.rate > 0.0) || !(prior.shape_hyper > 0.0) ||
      !(prior.known_shape > 0.0))
    throw InvalidPrior("Weibull-Gamma prior needs a, b, k all > 0");
}

void check_partition(Eigen::Index units, const Partition& part) {
  validate_partition(part);
  if (static_cast<Eigen::Index>(part.labels.size()) != units)
    throw PartitionMismatch("partition covers " +
                            std::to_string(part.labels.size()) +
                            " units, data has " + std::to_string(units));
}

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

}  // namespace

double log_marginal_binomial(int successes, int failures,
                             const BetaPrior& prior) {
  check(prior);
  if (successes < 0 || failures < 0)
    throw std::invalid_argument("counts must be non-negative");
  return log_beta(prior.alpha + successes, prior.beta + failures) -
         log_beta(prior.alpha, prior.beta);
}

double log_marginal_weibull_known_shape(const Eigen::VectorXd& times,
                                        const WeibullGammaPrior& prior) {
  check(prior);
  if (!(times.array() > 0.0).all())
    throw NonPositiveTime("holding times must be positive");
  const double k = prior.known_shape;
  const double a = prior.rate;
  const double b = prior.shape_hyper;
  const double n = static_cast<double>(times.size());
  const double sum_log = times.array().log().sum();
  const double sum_pow = times.array().pow(k).sum();
  return n * std::log(k) + (k - 1.0) * sum_log + b * std::log(a) -
         std::lgamma(b) + std::lgamma(b + n) - (b + n) * std::log(a + sum_pow);
}

double score_partition(const TransitionData& data, const Partition& part,
                       const BetaPrior& prior) {
  validate(data);
  check_partition(data.size(), part);
  std::vector<long long> succ(static_cast<std::size_t>(part.k), 0);
  std::vector<long long> fail(static_cast<std::size_t>(part.k), 0);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    auto c = static_cast<std::size_t>(part.labels[static_cast<std::size_t>(i)]);
    succ[c] += data.successes[i];
    fail[c] += data.totals[i] - data.successes[i];
  }
  double score = 0.0;
  for (int c = 0; c < part.k; ++c)
    score += log_marginal_binomial(static_cast<int>(succ[static_cast<std::size_t>(c)]),
                                   static_cast<int>(fail[static_cast<std::size_t>(c)]),
                                   prior);
  return score;
}

double score_partition(const HoldingData& data, const Partition& part,
                       const WeibullGammaPrior& prior) {
  validate(data);
  check_partition(data.size(), part);
  std::vector<std::vector<Eigen::Index>> members(
      static_cast<std::size_t>(part.k));
  for (Eigen::Index i = 0; i < data.size(); ++i)
    members[static_cast<std::size_t>(part.labels[static_cast<std::size_t>(i)])]
        .push_back(i);
  double score = 0.0;
  for (const auto& block : members) {
    Eigen::Index total = 0;
    for (auto i : block) total += data.times[static_cast<std::size_t>(i)].size();
    Eigen::VectorXd pooled(total);
    Eigen::Index at = 0;
    for (auto i : block) {
      const auto& t = data.times[static_cast<std::size_t>(i)];
      pooled.segment(at, t.size()) = t;
      at += t.size();
    }
    score += log_marginal_weibull_known_shape(pooled, prior);
  }
  return score;
}

}  // namespace cegmix
