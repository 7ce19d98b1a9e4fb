#include "cegmix/hmc.hpp"

#include "cegmix/rhat.hpp"
#include "cegmix/rng.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>
#include <vector>

namespace cegmix {
namespace {

constexpr double kDivergenceGap = 1000.0;  // energy error treated as divergent

struct Transition {
  double alpha = 0.0;  // acceptance statistic
  bool divergent = false;
};

double kinetic(const Eigen::VectorXd& p, const Eigen::VectorXd& inv_mass) {
  return 0.5 * (p.array().square() * inv_mass.array()).sum();
}

// One momentum refresh plus a leapfrog trajectory; q/lp/grad are updated in
// place on acceptance.
Transition hmc_step(const Target& target, Eigen::VectorXd& q, double& lp,
                    Eigen::VectorXd& grad, const Eigen::VectorXd& inv_mass, double eps,
                    int n_steps, Rng& rng) {
  const Eigen::Index d = q.size();
  Eigen::VectorXd p(d);
  for (Eigen::Index i = 0; i < d; ++i) p[i] = rng.normal() / std::sqrt(inv_mass[i]);
  const double h0 = -lp + kinetic(p, inv_mass);

  Eigen::VectorXd q1 = q, g1 = grad;
  double lp1 = lp;
  bool bad = false;
  p += 0.5 * eps * g1;
  for (int s = 0; s < n_steps; ++s) {
    q1.array() += eps * inv_mass.array() * p.array();
    lp1 = target.log_density_grad(q1, g1);
    if (!std::isfinite(lp1) || !g1.allFinite()) {
      bad = true;
      break;
    }
    p += (s + 1 < n_steps ? eps : 0.5 * eps) * g1;
  }

  double dh = std::numeric_limits<double>::infinity();
  if (!bad) dh = -lp1 + kinetic(p, inv_mass) - h0;

  Transition tr;
  tr.divergent = !(dh < kDivergenceGap);
  tr.alpha = std::isfinite(dh) ? std::min(1.0, std::exp(-dh)) : 0.0;
  if (rng.uniform() < tr.alpha) {
    q.swap(q1);
    grad.swap(g1);
    lp = lp1;
  }
  return tr;
}

// Nesterov dual averaging of log step size toward the target acceptance rate.
struct DualAveraging {
  double delta;
  double mu = 0.0, log_eps = 0.0, log_eps_bar = 0.0, h_bar = 0.0;
  int t = 0;

  void restart(double eps0) {
    mu = std::log(10.0 * eps0);
    log_eps = std::log(eps0);
    log_eps_bar = 0.0;
    h_bar = 0.0;
    t = 0;
  }
  void update(double alpha) {
    ++t;
    const double w = 1.0 / (static_cast<double>(t) + 10.0);
    h_bar = (1.0 - w) * h_bar + w * (delta - alpha);
    log_eps = mu - std::sqrt(static_cast<double>(t)) / 0.05 * h_bar;
    const double eta = std::pow(static_cast<double>(t), -0.75);
    log_eps_bar = eta * log_eps + (1.0 - eta) * log_eps_bar;
  }
};

// Doubles or halves from eps=1 until a single leapfrog step crosses 50%
// acceptance, reusing one sampled momentum.
double find_epsilon(const Target& target, const Eigen::VectorXd& q, double lp,
                    const Eigen::VectorXd& grad, const Eigen::VectorXd& inv_mass,
                    Rng& rng) {
  const Eigen::Index d = q.size();
  Eigen::VectorXd p0(d);
  for (Eigen::Index i = 0; i < d; ++i) p0[i] = rng.normal() / std::sqrt(inv_mass[i]);
  const double h0 = -lp + kinetic(p0, inv_mass);

  const auto step_dh = [&](double e) {
    Eigen::VectorXd p = p0 + 0.5 * e * grad;
    const Eigen::VectorXd q1 = (q.array() + e * inv_mass.array() * p.array()).matrix();
    Eigen::VectorXd g1(d);
    const double lp1 = target.log_density_grad(q1, g1);
    if (!std::isfinite(lp1) || !g1.allFinite())
      return std::numeric_limits<double>::infinity();
    p += 0.5 * e * g1;
    return -lp1 + kinetic(p, inv_mass) - h0;
  };

  double eps = 1.0;
  double dh = step_dh(eps);
  while (!std::isfinite(dh) && eps > 1e-10) {
    eps *= 0.5;
    dh = step_dh(eps);
  }
  const int dir = std::exp(-dh) > 0.5 ? 1 : -1;
  for (int it = 0; it < 60; ++it) {
    const double next = dir > 0 ? 2.0 * eps : 0.5 * eps;
    const double dh2 = step_dh(next);
    const double a = std::isfinite(dh2) ? std::exp(-dh2) : 0.0;
    if (dir > 0 ? a <= 0.5 : a >= 0.5) break;
    eps = next;
    if (eps < 1e-10 || eps > 1e7) break;
  }
  return eps;
}

// Warmup layout: a fast step-size-only opening, doubling mass-estimation
// windows, and a fast closing stretch.
struct Schedule {
  int init_end = 0;
  std::vector<int> window_ends;  // exclusive end iteration of each slow window
};

Schedule make_schedule(int warmup) {
  Schedule s;
  if (warmup < 20) {
    s.init_end = warmup;
    return s;
  }
  int init = 75, term = 50, base = 25;
  if (warmup < init + term + base) {
    init = static_cast<int>(std::lround(0.15 * warmup));
    term = static_cast<int>(std::lround(0.10 * warmup));
    base = warmup - init - term;
  }
  s.init_end = init;
  const int slow_end = warmup - term;
  int pos = init, w = base;
  while (pos < slow_end) {
    int next = pos + w;
    if (next + 2 * w > slow_end) next = slow_end;  // final window absorbs the remainder
    s.window_ends.push_back(std::min(next, slow_end));
    pos = next;
    w *= 2;
  }
  return s;
}

struct ChainResult {
  Eigen::MatrixXd draws;
  double accept = 0.0;
  int divergent = 0;
};

int jittered_steps(double traj_length, double eps, int max_leapfrog, Rng& rng) {
  const double base = traj_length / eps;
  const double scaled = base * (0.5 + rng.uniform());
  const int steps = static_cast<int>(std::lround(scaled));
  return std::clamp(steps, 1, max_leapfrog);
}

ChainResult run_chain(const Target& target, const SamplerConfig& cfg,
                      Eigen::VectorXd q, Rng rng) {
  const Eigen::Index d = target.dim;
  Eigen::VectorXd grad(d);
  double lp = target.log_density_grad(q, grad);
  if (!std::isfinite(lp) || !grad.allFinite())
    throw NonFiniteDensity("run_chain: non-finite density at initial point");

  Eigen::VectorXd inv_mass = Eigen::VectorXd::Ones(d);
  double eps = find_epsilon(target, q, lp, grad, inv_mass, rng);
  DualAveraging da{cfg.target_accept};
  da.restart(eps);

  const Schedule sched = make_schedule(cfg.warmup);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d), m2 = Eigen::VectorXd::Zero(d);
  long cnt = 0;
  std::size_t widx = 0;

  for (int it = 0; it < cfg.warmup; ++it) {
    eps = std::exp(da.log_eps);
    const int steps = jittered_steps(cfg.traj_length, eps, cfg.max_leapfrog, rng);
    const Transition tr = hmc_step(target, q, lp, grad, inv_mass, eps, steps, rng);
    da.update(tr.alpha);

    if (widx < sched.window_ends.size() && it >= sched.init_end) {
      ++cnt;
      const Eigen::VectorXd delta = q - mean;
      mean += delta / static_cast<double>(cnt);
      m2 += delta.cwiseProduct(q - mean);
      if (it + 1 == sched.window_ends[widx]) {
        if (cnt >= 2) {
          const double n = static_cast<double>(cnt);
          const Eigen::VectorXd emp = m2 / (n - 1.0);
          inv_mass = ((n / (n + 5.0)) * emp.array() + 1e-3 * (5.0 / (n + 5.0))).matrix();
        }
        mean.setZero();
        m2.setZero();
        cnt = 0;
        ++widx;
        eps = find_epsilon(target, q, lp, grad, inv_mass, rng);
        da.restart(eps);
      }
    }
  }

  const double eps_final = cfg.warmup > 0 ? std::exp(da.log_eps_bar) : eps;

  ChainResult out;
  out.draws.resize(cfg.samples, d);
  double alpha_sum = 0.0;
  for (int it = 0; it < cfg.samples; ++it) {
    const int steps = jittered_steps(cfg.traj_length, eps_final, cfg.max_leapfrog, rng);
    const Transition tr = hmc_step(target, q, lp, grad, inv_mass, eps_final, steps, rng);
    alpha_sum += tr.alpha;
    out.divergent += tr.divergent ? 1 : 0;
    out.draws.row(it) = q;
  }
  out.accept = alpha_sum / cfg.samples;
  return out;
}

void validate_config(const SamplerConfig& cfg) {
  if (cfg.chains < 1) throw std::invalid_argument("sampler: chains must be >= 1");
  if (cfg.warmup < 0) throw std::invalid_argument("sampler: warmup must be >= 0");
  if (cfg.samples < 1) throw std::invalid_argument("sampler: samples must be >= 1");
  if (!(cfg.target_accept > 0.0 && cfg.target_accept < 1.0))
    throw std::invalid_argument("sampler: target_accept must lie in (0,1)");
  if (!(cfg.traj_length > 0.0)) throw std::invalid_argument("sampler: traj_length must be > 0");
  if (cfg.max_leapfrog < 1) throw std::invalid_argument("sampler: max_leapfrog must be >= 1");
}

}  // namespace

PosteriorDraws sample_hmc(const Target& target, const SamplerConfig& config,
                          const std::vector<Eigen::VectorXd>& inits) {
  validate_config(config);
  if (target.dim <= 0 || !target.log_density_grad)
    throw std::invalid_argument("sample_hmc: target is not set up");
  if (static_cast<int>(inits.size()) != config.chains)
    throw std::invalid_argument("sample_hmc: need one initial point per chain");
  for (const auto& q0 : inits)
    if (q0.size() != target.dim)
      throw std::invalid_argument("sample_hmc: initial point dimension mismatch");

  std::vector<std::future<ChainResult>> futures;
  futures.reserve(inits.size());
  for (int c = 0; c < config.chains; ++c)
    futures.push_back(std::async(std::launch::async, [&target, &config, &inits, c] {
      return run_chain(target, config, inits[static_cast<std::size_t>(c)],
                       Rng(config.seed, static_cast<std::uint64_t>(c)));
    }));

  PosteriorDraws out;
  out.seed = config.seed;
  out.accept_rate.resize(config.chains);
  out.divergent.resize(config.chains);
  int divergent_total = 0;
  for (int c = 0; c < config.chains; ++c) {
    ChainResult r = futures[static_cast<std::size_t>(c)].get();
    out.accept_rate[c] = r.accept;
    out.divergent[c] = r.divergent;
    divergent_total += r.divergent;
    out.chains.push_back(std::move(r.draws));
  }

  const long total = static_cast<long>(config.chains) * config.samples;
  if (divergent_total > 0.2 * static_cast<double>(total))
    throw DivergencePersistent("sample_hmc: more than 20% of post-warmup transitions diverged");

  if (config.chains >= 2 && config.samples >= 4)
    out.rhat = split_rhat(out.chains).rhat;
  return out;
}

namespace {

// Spread k component targets over the quantiles of per-unit point estimates
// (already on the unconstrained component scale).
std::vector<double> component_targets(std::vector<double> est, int k, double lo,
                                      double hi) {
  std::vector<double> targets(static_cast<std::size_t>(k));
  if (est.empty()) {
    for (int j = 0; j < k; ++j)
      targets[static_cast<std::size_t>(j)] =
          k == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * j / (k - 1.0);
    return targets;
  }
  std::sort(est.begin(), est.end());
  for (int j = 0; j < k; ++j) {
    const double pos = (j + 0.5) / k * static_cast<double>(est.size());
    const auto idx = std::min(est.size() - 1, static_cast<std::size_t>(pos));
    targets[static_cast<std::size_t>(j)] = est[idx];
  }
  return targets;
}

// Jitter the component targets, enforce a minimal gap, and encode as the
// unconstrained coordinate block.
Eigen::VectorXd build_init(const std::vector<double>& targets, const MixtureSpec& spec,
                           double comp_scale, double scale_mult, Rng& rng) {
  const int k = spec.k;
  Eigen::VectorXd u(spec.dim());
  for (int j = 0; j + 1 < k; ++j) u[j] = 0.25 * scale_mult * rng.normal();

  std::vector<double> v(targets);
  for (auto& x : v) x += comp_scale * scale_mult * rng.normal();
  if (spec.ordered) {
    std::sort(v.begin(), v.end());
    constexpr double kMinGap = 0.05;
    for (std::size_t j = 1; j < v.size(); ++j)
      v[j] = std::max(v[j], v[j - 1] + kMinGap);
    u[k - 1] = v[0];
    for (int j = 1; j < k; ++j)
      u[k - 1 + j] = std::log(v[static_cast<std::size_t>(j)] -
                              v[static_cast<std::size_t>(j - 1)]);
  } else {
    for (int j = 0; j < k; ++j) u[k - 1 + j] = v[static_cast<std::size_t>(j)];
  }
  return u;
}

template <class Data>
PosteriorDraws run_chains_impl(const MixtureSpec& spec, const Data& data,
                               const SamplerConfig& config,
                               const std::vector<double>& estimates, double lo,
                               double hi, double comp_scale) {
  validate_spec(spec);
  validate_config(config);

  const auto targets = component_targets(estimates, spec.k, lo, hi);
  Rng init_rng(config.seed, 0x696e6974);  // distinct stream from the chains
  std::vector<Eigen::VectorXd> inits;
  inits.reserve(static_cast<std::size_t>(config.chains));
  for (int c = 0; c < config.chains; ++c) {
    double mult = 1.0;
    Eigen::VectorXd u;
    bool ok = false;
    for (int attempt = 0; attempt < 30 && !ok; ++attempt) {
      u = build_init(targets, spec, comp_scale, mult, init_rng);
      ok = std::isfinite(log_density_u(u, data, spec));
      mult *= 0.5;
    }
    if (!ok) throw NonFiniteDensity("run_chains: could not find a finite starting point");
    inits.push_back(std::move(u));
  }

  Target target;
  target.dim = spec.dim();
  target.log_density_grad = [&spec, &data](const Eigen::VectorXd& u, Eigen::VectorXd& g) {
    return log_density_grad_u(u, data, spec, g);
  };
  return sample_hmc(target, config, inits);
}

}  // namespace

PosteriorDraws run_chains(const MixtureSpec& spec, const TransitionData& data,
                          const SamplerConfig& config) {
  if (spec.family != Family::Binomial)
    throw DimensionMismatch("run_chains: transition data requires a Binomial mixture");
  validate(data);
  std::vector<double> est;
  est.reserve(data.ids.size());
  for (Eigen::Index i = 0; i < data.successes.size(); ++i) {
    const double p = std::clamp(
        (data.successes[i] + 0.5) / (data.totals[i] + 1.0), 0.01, 0.99);
    est.push_back(std::log(p / (1.0 - p)));
  }
  const double lo = std::log(0.2 / 0.8), hi = std::log(0.8 / 0.2);
  return run_chains_impl(spec, data, config, est, lo, hi, 0.5);
}

PosteriorDraws run_chains(const MixtureSpec& spec, const HoldingData& data,
                          const SamplerConfig& config) {
  if (spec.family != Family::Weibull)
    throw DimensionMismatch("run_chains: holding data requires a Weibull mixture");
  validate(data);
  constexpr double kEulerGamma = 0.57721566490153286;
  std::vector<double> est;
  est.reserve(data.times.size());
  for (const auto& t : data.times) {
    const Eigen::ArrayXd l = (t.array() / spec.weibull_scale).log();
    double shape = 1.0;
    if (l.size() >= 2) {
      const double sd = std::sqrt((l - l.mean()).square().sum() /
                                  (static_cast<double>(l.size()) - 1.0));
      if (sd > 1e-8) shape = (M_PI / std::sqrt(6.0)) / sd;
    } else if (l.size() == 1 && l.mean() < -1e-8) {
      shape = kEulerGamma / -l.mean();
    }
    est.push_back(std::log(std::clamp(shape, 0.05, 60.0)));
  }
  return run_chains_impl(spec, data, config, est, std::log(0.5), std::log(4.0), 0.3);
}

MixtureParams posterior_mean_params(const PosteriorDraws& draws, const MixtureSpec& spec) {
  if (draws.chains.empty() || draws.draws_per_chain() == 0)
    throw std::invalid_argument("posterior_mean_params: empty draws");
  const int k = spec.k;
  Eigen::VectorXd wsum = Eigen::VectorXd::Zero(k), csum = Eigen::VectorXd::Zero(k);
  long n = 0;
  for (const auto& chain : draws.chains)
    for (Eigen::Index r = 0; r < chain.rows(); ++r) {
      const MixtureParams p = constrain(chain.row(r).transpose(), spec);
      wsum += p.weights;
      csum += p.components;
      ++n;
    }
  MixtureParams out;
  out.weights = wsum / static_cast<double>(n);
  out.weights /= out.weights.sum();
  out.components = csum / static_cast<double>(n);
  return out;
}

}  // namespace cegmix
