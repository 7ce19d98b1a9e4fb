#include "cegmix/mixture.hpp"

#include "cegmix/dual.hpp"

#include <cmath>
#include <functional>
#include <limits>

namespace cegmix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_beta_fn(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double lchoose(double n, double y) {
  return std::lgamma(n + 1.0) - std::lgamma(y + 1.0) - std::lgamma(n - y + 1.0);
}

double make_const(double, double c) { return c; }
Dual make_const(const Dual& like, double c) { return Dual(c, like.t.size()); }

// Stick-breaking weights, component transform, log priors, and the log
// Jacobian, generic over plain doubles and forward-mode duals. Everything is
// kept on the log scale so extreme coordinates stay finite.
template <class S>
struct TransformOut {
  std::vector<S> w, log_w;
  std::vector<S> comp, log_comp, log_1m_comp;
  S extra;  // log prior + log |Jacobian|
};

template <class S>
TransformOut<S> transform_u(const std::vector<S>& u, const MixtureSpec& spec) {
  using std::exp;
  const int k = spec.k;
  const int kw = k - 1;
  TransformOut<S> out;
  out.extra = make_const(u[0], 0.0);
  out.w.resize(static_cast<std::size_t>(k));
  out.log_w.resize(static_cast<std::size_t>(k));
  out.comp.resize(static_cast<std::size_t>(k));
  out.log_comp.resize(static_cast<std::size_t>(k));
  if (spec.family == Family::Binomial)
    out.log_1m_comp.resize(static_cast<std::size_t>(k));

  S log_stick = make_const(u[0], 0.0);
  for (int j = 0; j < kw; ++j) {
    const S arg = u[static_cast<std::size_t>(j)] - std::log(static_cast<double>(k - 1 - j));
    const S log_z = -softplus(-arg);
    const S log_1mz = -softplus(arg);
    out.log_w[static_cast<std::size_t>(j)] = log_stick + log_z;
    out.w[static_cast<std::size_t>(j)] = exp(out.log_w[static_cast<std::size_t>(j)]);
    out.extra = out.extra + log_stick + log_z + log_1mz;
    log_stick = log_stick + log_1mz;
  }
  out.log_w[static_cast<std::size_t>(kw)] = log_stick;
  out.w[static_cast<std::size_t>(kw)] = exp(log_stick);

  const double a = spec.dirichlet_conc;
  out.extra = out.extra + (std::lgamma(k * a) - k * std::lgamma(a));
  if (a != 1.0)
    for (int j = 0; j < k; ++j)
      out.extra = out.extra + (a - 1.0) * out.log_w[static_cast<std::size_t>(j)];

  S v = make_const(u[0], 0.0);
  for (int j = 0; j < k; ++j) {
    const S& c = u[static_cast<std::size_t>(kw + j)];
    if (j == 0) {
      v = c;
    } else if (spec.ordered) {
      v = v + exp(c);
      out.extra = out.extra + c;  // gap-coordinate Jacobian
    } else {
      v = c;
    }
    if (spec.family == Family::Binomial) {
      const S lt = -softplus(-v);
      const S lo = -softplus(v);
      out.log_comp[static_cast<std::size_t>(j)] = lt;
      out.log_1m_comp[static_cast<std::size_t>(j)] = lo;
      out.comp[static_cast<std::size_t>(j)] = exp(lt);
      out.extra = out.extra + lt + lo;  // logit Jacobian
      out.extra = out.extra + (spec.component_beta.alpha - 1.0) * lt +
                  (spec.component_beta.beta - 1.0) * lo -
                  log_beta_fn(spec.component_beta.alpha, spec.component_beta.beta);
    } else {
      out.log_comp[static_cast<std::size_t>(j)] = v;
      out.comp[static_cast<std::size_t>(j)] = exp(v);
      out.extra = out.extra + v;  // exp Jacobian
      out.extra = out.extra + (spec.component_gamma.shape - 1.0) * v -
                  spec.component_gamma.rate * out.comp[static_cast<std::size_t>(j)] +
                  spec.component_gamma.shape * std::log(spec.component_gamma.rate) -
                  std::lgamma(spec.component_gamma.shape);
    }
  }
  // Ordering keeps one of k! symmetric modes; the k! factor restores the
  // exchangeable model's normalizer, which is what the bridge integrates.
  if (spec.ordered) out.extra = out.extra + std::lgamma(static_cast<double>(k) + 1.0);
  return out;
}

std::vector<double> to_scalar_vec(const Eigen::VectorXd& u) {
  return {u.data(), u.data() + u.size()};
}

std::vector<Dual> to_dual_vec(const Eigen::VectorXd& u) {
  std::vector<Dual> out;
  out.reserve(static_cast<std::size_t>(u.size()));
  for (Eigen::Index i = 0; i < u.size(); ++i)
    out.push_back(Dual::seed(u[i], u.size(), i));
  return out;
}

Eigen::VectorXd values(const std::vector<double>& xs) {
  return Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}
Eigen::VectorXd values(const std::vector<Dual>& xs) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) out[static_cast<Eigen::Index>(i)] = xs[i].v;
  return out;
}

// Marginalized Binomial mixture log likelihood. Optional analytic gradients
// with respect to weights and success probabilities accumulate through the
// per-unit responsibilities, all in shifted log space.
double binom_mix_ll(const TransitionData& data, const Eigen::VectorXd& log_w,
                    const Eigen::VectorXd& lt, const Eigen::VectorXd& lo,
                    Eigen::VectorXd* gw, Eigen::VectorXd* gtheta) {
  const Eigen::Index n = data.size();
  const Eigen::Index k = log_w.size();
  if (gw) {
    gw->setZero(k);
    gtheta->setZero(k);
  }
  double ll = 0.0;
  Eigen::VectorXd cell(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = data.successes[i];
    const double ny = data.totals[i] - data.successes[i];
    for (Eigen::Index j = 0; j < k; ++j) {
      double c = log_w[j];
      if (y > 0) c += y * lt[j];
      if (ny > 0) c += ny * lo[j];
      cell[j] = c;
    }
    const double m = cell.maxCoeff();
    if (m == kNegInf) return kNegInf;
    const double lse = m + std::log((cell.array() - m).exp().sum());
    ll += lse + lchoose(data.totals[i], y);
    if (gw) {
      for (Eigen::Index j = 0; j < k; ++j) {
        (*gw)[j] += std::exp(cell[j] - log_w[j] - lse);
        if (y > 0) (*gtheta)[j] += y * std::exp(cell[j] - lse - lt[j]);
        if (ny > 0) (*gtheta)[j] -= ny * std::exp(cell[j] - lse - lo[j]);
      }
    }
  }
  return ll;
}

struct EdgeCache {
  std::vector<Eigen::VectorXd> l;  // log(y_ij / lambda)
  Eigen::VectorXd count, sum_l;
};

EdgeCache edge_cache(const HoldingData& data, double scale) {
  EdgeCache c;
  const auto n = static_cast<Eigen::Index>(data.times.size());
  c.count.resize(n);
  c.sum_l.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& t = data.times[static_cast<std::size_t>(i)];
    c.l.push_back((t.array() / scale).log().matrix());
    c.count[i] = static_cast<double>(t.size());
    c.sum_l[i] = c.l.back().sum();
  }
  return c;
}

// Hierarchical Weibull mixture: an edge's whole observation vector sits in
// one component, so each cell is a product over that edge's observations.
double weib_mix_ll(const EdgeCache& cache, double scale, const Eigen::VectorXd& log_w,
                   const Eigen::VectorXd& log_pi, const Eigen::VectorXd& pi,
                   Eigen::VectorXd* gw, Eigen::VectorXd* gpi) {
  const auto n = static_cast<Eigen::Index>(cache.l.size());
  const Eigen::Index k = log_w.size();
  const double log_scale = std::log(scale);
  if (gw) {
    gw->setZero(k);
    gpi->setZero(k);
  }
  double ll = 0.0;
  Eigen::VectorXd cell(k), dcell(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& l = cache.l[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < k; ++j) {
      double sum_e = 0.0, sum_le = 0.0;
      for (Eigen::Index o = 0; o < l.size(); ++o) {
        const double e = std::exp(pi[j] * l[o]);
        sum_e += e;
        sum_le += l[o] * e;
      }
      cell[j] = log_w[j] + cache.count[i] * (log_pi[j] - log_scale) +
                (pi[j] - 1.0) * cache.sum_l[i] - sum_e;
      dcell[j] = cache.count[i] / pi[j] + cache.sum_l[i] - sum_le;
    }
    const double m = cell.maxCoeff();
    if (m == kNegInf) return kNegInf;
    const double lse = m + std::log((cell.array() - m).exp().sum());
    ll += lse;
    if (gw) {
      for (Eigen::Index j = 0; j < k; ++j) {
        const double lr = cell[j] - lse;
        (*gw)[j] += std::exp(lr - log_w[j]);
        if (lr > -700.0) (*gpi)[j] += std::exp(lr) * dcell[j];
      }
    }
  }
  return ll;
}

void check_spec_dim(const Eigen::VectorXd& u, const MixtureSpec& spec) {
  validate_spec(spec);
  if (u.size() != spec.dim())
    throw DimensionMismatch("unconstrained point has " + std::to_string(u.size()) +
                            " coordinates, spec needs " + std::to_string(spec.dim()));
}

void check_params_shape(const MixtureParams& p) {
  if (p.weights.size() == 0 || p.weights.size() != p.components.size())
    throw DimensionMismatch("weights and components must share a positive length");
}

Eigen::MatrixXd allocation_cells(const Eigen::VectorXd& log_w,
                                 std::function<double(Eigen::Index, Eigen::Index)> loglik,
                                 Eigen::Index n) {
  Eigen::MatrixXd cells(n, log_w.size());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < log_w.size(); ++j) cells(i, j) = log_w[j] + loglik(i, j);
  return cells;
}

Allocation normalize_cells(Eigen::MatrixXd cells) {
  Allocation out;
  out.prob.resize(cells.rows(), cells.cols());
  out.labels.resize(static_cast<std::size_t>(cells.rows()));
  for (Eigen::Index i = 0; i < cells.rows(); ++i) {
    const double m = cells.row(i).maxCoeff();
    const Eigen::ArrayXd shifted = (cells.row(i).array() - m).exp();
    out.prob.row(i) = shifted / shifted.sum();
    int best = 0;
    for (Eigen::Index j = 1; j < cells.cols(); ++j)
      if (out.prob(i, j) > out.prob(i, best)) best = static_cast<int>(j);
    out.labels[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

}  // namespace

void validate_spec(const MixtureSpec& spec) {
  if (spec.k < 1) throw ConstraintViolation("component count must be >= 1");
  if (!(spec.dirichlet_conc > 0.0) || !(spec.component_beta.alpha > 0.0) ||
      !(spec.component_beta.beta > 0.0) || !(spec.component_gamma.shape > 0.0) ||
      !(spec.component_gamma.rate > 0.0))
    throw InvalidPrior("mixture hyperparameters must be positive");
  if (spec.family == Family::Weibull && !(spec.weibull_scale > 0.0))
    throw InvalidPrior("Weibull scale must be positive");
}

void validate_params(const MixtureParams& params, const MixtureSpec& spec) {
  validate_spec(spec);
  if (params.weights.size() != spec.k || params.components.size() != spec.k)
    throw ConstraintViolation("params sized for a different component count");
  if (!(params.weights.array() > 0.0).all())
    throw ConstraintViolation("weights must be strictly positive");
  if (std::abs(params.weights.sum() - 1.0) > 1e-12)
    throw ConstraintViolation("weights must sum to one");
  if (spec.family == Family::Binomial) {
    if (!((params.components.array() > 0.0) && (params.components.array() < 1.0)).all())
      throw ConstraintViolation("success probabilities must lie in (0,1)");
  } else if (!(params.components.array() > 0.0).all()) {
    throw ConstraintViolation("shapes must be positive");
  }
  if (spec.ordered)
    for (int j = 1; j < spec.k; ++j)
      if (!(params.components[j] > params.components[j - 1]))
        throw ConstraintViolation("components must be strictly increasing");
}

Eigen::VectorXd unconstrain(const MixtureParams& params, const MixtureSpec& spec) {
  validate_params(params, spec);
  const int k = spec.k;
  const int kw = k - 1;
  Eigen::VectorXd u(spec.dim());
  double stick = 1.0;
  for (int j = 0; j < kw; ++j) {
    const double z = params.weights[j] / stick;
    u[j] = std::log(z / (1.0 - z)) + std::log(static_cast<double>(k - 1 - j));
    stick -= params.weights[j];
  }
  Eigen::VectorXd v(k);
  for (int j = 0; j < k; ++j) {
    const double c = params.components[j];
    v[j] = spec.family == Family::Binomial ? std::log(c / (1.0 - c)) : std::log(c);
  }
  u[kw] = v[0];
  for (int j = 1; j < k; ++j)
    u[kw + j] = spec.ordered ? std::log(v[j] - v[j - 1]) : v[j];
  return u;
}

MixtureParams constrain(const Eigen::VectorXd& u, const MixtureSpec& spec) {
  check_spec_dim(u, spec);
  const auto out = transform_u<double>(to_scalar_vec(u), spec);
  return {values(out.w), values(out.comp)};
}

double log_likelihood_situations(const MixtureParams& params, const TransitionData& data) {
  check_params_shape(params);
  validate(data);
  const Eigen::VectorXd log_w = params.weights.array().log();
  const Eigen::VectorXd lt = params.components.array().log();
  const Eigen::VectorXd lo = (1.0 - params.components.array()).log();
  return binom_mix_ll(data, log_w, lt, lo, nullptr, nullptr);
}

double log_likelihood_edges(const MixtureParams& params, const HoldingData& data,
                            double scale) {
  check_params_shape(params);
  validate(data);
  if (!(scale > 0.0)) throw InvalidPrior("Weibull scale must be positive");
  const auto cache = edge_cache(data, scale);
  const Eigen::VectorXd log_w = params.weights.array().log();
  const Eigen::VectorXd log_pi = params.components.array().log();
  return weib_mix_ll(cache, scale, log_w, log_pi, params.components, nullptr, nullptr);
}

double log_posterior(const MixtureParams& params, const TransitionData& data,
                     const MixtureSpec& spec) {
  return log_density_u(unconstrain(params, spec), data, spec);
}

double log_posterior(const MixtureParams& params, const HoldingData& data,
                     const MixtureSpec& spec) {
  return log_density_u(unconstrain(params, spec), data, spec);
}

double log_density_u(const Eigen::VectorXd& u, const TransitionData& data,
                     const MixtureSpec& spec) {
  check_spec_dim(u, spec);
  if (spec.family != Family::Binomial)
    throw DimensionMismatch("transition data needs the Binomial family");
  validate(data);
  const auto t = transform_u<double>(to_scalar_vec(u), spec);
  const double ll = binom_mix_ll(data, values(t.log_w), values(t.log_comp),
                                 values(t.log_1m_comp), nullptr, nullptr);
  return ll + t.extra;
}

double log_density_u(const Eigen::VectorXd& u, const HoldingData& data,
                     const MixtureSpec& spec) {
  check_spec_dim(u, spec);
  if (spec.family != Family::Weibull)
    throw DimensionMismatch("holding data needs the Weibull family");
  validate(data);
  const auto t = transform_u<double>(to_scalar_vec(u), spec);
  const auto cache = edge_cache(data, spec.weibull_scale);
  const double ll = weib_mix_ll(cache, spec.weibull_scale, values(t.log_w),
                                values(t.log_comp), values(t.comp), nullptr, nullptr);
  return ll + t.extra;
}

namespace {

// Shared tail of the gradient paths: dual transform tangents carry the
// chain rule from (weights, components) back to the unconstrained point.
double combine_gradient(const TransformOut<Dual>& t, double ll, const Eigen::VectorXd& gw,
                        const Eigen::VectorXd& gc, Eigen::VectorXd& grad) {
  grad = t.extra.t;
  for (std::size_t j = 0; j < t.w.size(); ++j) {
    grad += gw[static_cast<Eigen::Index>(j)] * t.w[j].t;
    grad += gc[static_cast<Eigen::Index>(j)] * t.comp[j].t;
  }
  return ll + t.extra.v;
}

}  // namespace

double log_density_grad_u(const Eigen::VectorXd& u, const TransitionData& data,
                          const MixtureSpec& spec, Eigen::VectorXd& grad) {
  check_spec_dim(u, spec);
  if (spec.family != Family::Binomial)
    throw DimensionMismatch("transition data needs the Binomial family");
  validate(data);
  const auto t = transform_u<Dual>(to_dual_vec(u), spec);
  Eigen::VectorXd gw, gtheta;
  const double ll = binom_mix_ll(data, values(t.log_w), values(t.log_comp),
                                 values(t.log_1m_comp), &gw, &gtheta);
  if (ll == kNegInf) {
    grad.setZero(u.size());
    return kNegInf;
  }
  return combine_gradient(t, ll, gw, gtheta, grad);
}

double log_density_grad_u(const Eigen::VectorXd& u, const HoldingData& data,
                          const MixtureSpec& spec, Eigen::VectorXd& grad) {
  check_spec_dim(u, spec);
  if (spec.family != Family::Weibull)
    throw DimensionMismatch("holding data needs the Weibull family");
  validate(data);
  const auto t = transform_u<Dual>(to_dual_vec(u), spec);
  const auto cache = edge_cache(data, spec.weibull_scale);
  Eigen::VectorXd gw, gpi;
  const double ll = weib_mix_ll(cache, spec.weibull_scale, values(t.log_w),
                                values(t.log_comp), values(t.comp), &gw, &gpi);
  if (ll == kNegInf) {
    grad.setZero(u.size());
    return kNegInf;
  }
  return combine_gradient(t, ll, gw, gpi, grad);
}

Allocation allocate_situations(const MixtureParams& params, const TransitionData& data) {
  check_params_shape(params);
  validate(data);
  const Eigen::VectorXd log_w = params.weights.array().log();
  const Eigen::VectorXd lt = params.components.array().log();
  const Eigen::VectorXd lo = (1.0 - params.components.array()).log();
  auto cells = allocation_cells(
      log_w,
      [&](Eigen::Index i, Eigen::Index j) {
        const double y = data.successes[i];
        const double ny = data.totals[i] - data.successes[i];
        double c = lchoose(data.totals[i], y);
        if (y > 0) c += y * lt[j];
        if (ny > 0) c += ny * lo[j];
        return c;
      },
      data.size());
  return normalize_cells(std::move(cells));
}

Allocation allocate_edges(const MixtureParams& params, const HoldingData& data,
                          double scale) {
  check_params_shape(params);
  validate(data);
  if (!(scale > 0.0)) throw InvalidPrior("Weibull scale must be positive");
  const auto cache = edge_cache(data, scale);
  const Eigen::VectorXd log_w = params.weights.array().log();
  const Eigen::VectorXd log_pi = params.components.array().log();
  const double log_scale = std::log(scale);
  auto cells = allocation_cells(
      log_w,
      [&](Eigen::Index i, Eigen::Index j) {
        const auto& l = cache.l[static_cast<std::size_t>(i)];
        double sum_e = 0.0;
        for (Eigen::Index o = 0; o < l.size(); ++o)
          sum_e += std::exp(params.components[j] * l[o]);
        return cache.count[i] * (log_pi[j] - log_scale) +
               (params.components[j] - 1.0) * cache.sum_l[i] - sum_e;
      },
      static_cast<Eigen::Index>(data.times.size()));
  return normalize_cells(std::move(cells));
}

}  // namespace cegmix
