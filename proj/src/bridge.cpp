#include "cegmix/bridge.hpp"

#include "cegmix/rng.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace cegmix {
namespace {

constexpr double kTolerance = 1e-10;
constexpr int kMaxIterations = 1000;
constexpr int kFolds = 10;

double logsumexp(const Eigen::ArrayXd& x) {
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf (or a stray +inf) dominates
  return m + std::log((x - m).exp().sum());
}

// Elementwise log(s1 * e^x + s2 * r) with ls1 = log s1, lr = log r.
Eigen::ArrayXd log_mix(const Eigen::ArrayXd& x, double ls1, double ls2, double lr) {
  const Eigen::ArrayXd a = ls1 + x;
  const double b = ls2 + lr;
  const Eigen::ArrayXd m = a.max(b);
  return m + ((a - m).exp() + (b - m).exp()).log();
}

struct IterationOut {
  double log_r = 0.0;
  int iterations = 0;
  bool converged = false;
  double relative_change = 0.0;
};

// Optimal-bridge fixed point: r is the ratio of the unnormalized posterior
// mass to the proposal's, so log r is the log marginal likelihood.
// l1: log q - log g at posterior draws; l2: the same at proposal draws.
IterationOut iterate_bridge(const Eigen::ArrayXd& l1, const Eigen::ArrayXd& l2) {
  const double n1 = static_cast<double>(l1.size());
  const double n2 = static_cast<double>(l2.size());
  const double ls1 = std::log(n1 / (n1 + n2));
  const double ls2 = std::log(n2 / (n1 + n2));

  IterationOut out;
  out.log_r = logsumexp(l2) - std::log(n2);  // importance-sampling start
  for (int it = 1; it <= kMaxIterations; ++it) {
    const double num = logsumexp(l2 - log_mix(l2, ls1, ls2, out.log_r)) - std::log(n2);
    const double den = logsumexp(-log_mix(l1, ls1, ls2, out.log_r)) - std::log(n1);
    const double next = num - den;
    out.relative_change = std::abs(next - out.log_r) / std::max(1.0, std::abs(next));
    out.log_r = next;
    out.iterations = it;
    if (out.relative_change < kTolerance) {
      out.converged = true;
      break;
    }
  }
  return out;
}

struct Proposal {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::LLT<Eigen::MatrixXd> llt;
  double log_norm = 0.0;  // -d/2 log(2pi) - 1/2 log|cov|

  double logpdf(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd c = x - mean;
    return log_norm - 0.5 * c.dot(llt.solve(c));
  }
};

Proposal fit_proposal(const Eigen::MatrixXd& half) {
  Proposal p;
  p.mean = half.colwise().mean();
  const Eigen::MatrixXd centered = half.rowwise() - p.mean.transpose();
  p.cov = centered.transpose() * centered / (static_cast<double>(half.rows()) - 1.0);
  if (!p.cov.allFinite()) throw ProposalDegenerate("bridge: non-finite draw covariance");

  p.llt.compute(p.cov);
  if (p.llt.info() != Eigen::Success) {
    const double ridge = 1e-8 * p.cov.diagonal().mean();
    if (!(ridge > 0.0)) throw ProposalDegenerate("bridge: draw covariance is singular");
    p.cov.diagonal().array() += ridge;
    p.llt.compute(p.cov);
    if (p.llt.info() != Eigen::Success)
      throw ProposalDegenerate("bridge: draw covariance is singular");
  }
  const double log_det =
      2.0 * p.llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  if (!std::isfinite(log_det)) throw ProposalDegenerate("bridge: draw covariance is singular");
  p.log_norm = -0.5 * static_cast<double>(p.cov.rows()) * std::log(2.0 * M_PI) -
               0.5 * log_det;
  return p;
}

}  // namespace

BridgeEstimate bridge_log_ml(const PosteriorDraws& draws,
                             const std::function<double(const Eigen::VectorXd&)>& log_density,
                             bool swap_halves) {
  const Eigen::Index m = draws.draws_per_chain();
  const Eigen::Index d = draws.dim();
  const Eigen::Index c = draws.chain_count();
  if (c * m < 1000)
    throw std::invalid_argument("bridge_log_ml: need at least 1000 total draws");

  // Per-chain split keeps both halves representative of every chain.
  const Eigen::Index ha = m / 2, hb = m - ha;
  Eigen::MatrixXd fit_half(c * ha, d), eval_half(c * hb, d);
  for (Eigen::Index i = 0; i < c; ++i) {
    const auto& chain = draws.chains[static_cast<std::size_t>(i)];
    fit_half.middleRows(i * ha, ha) = chain.topRows(ha);
    eval_half.middleRows(i * hb, hb) = chain.bottomRows(hb);
  }
  if (swap_halves) fit_half.swap(eval_half);

  const Proposal prop = fit_proposal(fit_half);

  const Eigen::Index n1 = eval_half.rows();
  const Eigen::Index n2 = n1;
  Rng rng(draws.seed, 0x62726467);  // proposal-draw stream
  Eigen::MatrixXd fresh(n2, d);
  const Eigen::MatrixXd chol = prop.llt.matrixL();
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < n2; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) z[j] = rng.normal();
    fresh.row(i) = (prop.mean + chol * z).transpose();
  }

  Eigen::ArrayXd l1(n1), l2(n2);
  for (Eigen::Index j = 0; j < n1; ++j) {
    const Eigen::VectorXd x = eval_half.row(j).transpose();
    l1[j] = log_density(x) - prop.logpdf(x);
  }
  for (Eigen::Index i = 0; i < n2; ++i) {
    const Eigen::VectorXd x = fresh.row(i).transpose();
    l2[i] = log_density(x) - prop.logpdf(x);
  }

  const IterationOut main = iterate_bridge(l1, l2);

  // Spread of fold-wise estimates scales like sqrt(folds) times the SE of the
  // full estimator.
  Eigen::ArrayXd fold_vals(kFolds);
  for (int f = 0; f < kFolds; ++f) {
    std::vector<double> s1, s2;
    for (Eigen::Index j = f; j < n1; j += kFolds) s1.push_back(l1[j]);
    for (Eigen::Index i = f; i < n2; i += kFolds) s2.push_back(l2[i]);
    const Eigen::ArrayXd f1 = Eigen::Map<const Eigen::ArrayXd>(
        s1.data(), static_cast<Eigen::Index>(s1.size()));
    const Eigen::ArrayXd f2 = Eigen::Map<const Eigen::ArrayXd>(
        s2.data(), static_cast<Eigen::Index>(s2.size()));
    fold_vals[f] = iterate_bridge(f1, f2).log_r;
  }
  const double fold_mean = fold_vals.mean();
  const double fold_sd = std::sqrt((fold_vals - fold_mean).square().sum() /
                                   static_cast<double>(kFolds - 1));

  BridgeEstimate est;
  est.log_ml = main.log_r;
  est.iterations = main.iterations;
  est.converged = main.converged;
  est.relative_change = main.relative_change;
  est.mc_error = fold_sd / std::sqrt(static_cast<double>(kFolds));
  est.proposal_mean = prop.mean;
  est.proposal_cov = prop.cov;
  return est;
}

BridgeEstimate bridge_log_ml(const PosteriorDraws& draws, const MixtureSpec& spec,
                             const TransitionData& data, bool swap_halves) {
  return bridge_log_ml(
      draws, [&](const Eigen::VectorXd& u) { return log_density_u(u, data, spec); },
      swap_halves);
}

BridgeEstimate bridge_log_ml(const PosteriorDraws& draws, const MixtureSpec& spec,
                             const HoldingData& data, bool swap_halves) {
  return bridge_log_ml(
      draws, [&](const Eigen::VectorXd& u) { return log_density_u(u, data, spec); },
      swap_halves);
}

ModelChoice compare_models(const std::vector<BridgeEstimate>& scores) {
  if (scores.empty()) throw std::invalid_argument("compare_models: no scores");
  ModelChoice choice;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!scores[i].converged) choice.any_unconverged = true;
    if (scores[i].log_ml > scores[choice.best].log_ml) choice.best = i;
  }
  return choice;
}

}  // namespace cegmix
