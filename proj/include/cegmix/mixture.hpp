#pragma once

#include "cegmix/conjugate.hpp"
#include "cegmix/data.hpp"

#include <Eigen/Core>

namespace cegmix {

struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ConstraintViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class Family { Binomial, Weibull };

struct GammaPrior {
  double shape = 2.0;
  double rate = 0.5;
};

// A marginalized finite mixture: K weighted components over either per-unit
// Binomial counts (success probabilities theta) or per-edge vectors of
// Weibull holding times with known scale (unknown shapes pi). Membership
// indicators are summed out, so the model is purely continuous.
struct MixtureSpec {
  int k = 1;
  Family family = Family::Binomial;
  double weibull_scale = 1.0;        // lambda, Weibull family only
  double dirichlet_conc = 1.0;       // symmetric Dirichlet weight prior
  BetaPrior component_beta{1, 1};    // prior per success probability
  GammaPrior component_gamma{2, 0.5};  // prior per Weibull shape, mean 4
  bool ordered = true;               // strictly increasing components

  // Unconstrained dimension: k-1 stick-breaking + k component coordinates.
  Eigen::Index dim() const { return 2 * static_cast<Eigen::Index>(k) - 1; }
};

void validate_spec(const MixtureSpec& spec);

struct MixtureParams {
  Eigen::VectorXd weights;     // simplex, length k
  Eigen::VectorXd components;  // probabilities in (0,1) or shapes > 0
};

// Throws ConstraintViolation unless params fit the spec (simplex within
// 1e-12, components in range, strictly increasing when ordered).
void validate_params(const MixtureParams& params, const MixtureSpec& spec);

// Bijection between valid params and R^dim: stick-breaking for weights,
// logit (probabilities) or log (shapes) for components, with a
// cumulative-log-gap encoding when ordered. Round-trips within 1e-10.
Eigen::VectorXd unconstrain(const MixtureParams& params, const MixtureSpec& spec);
MixtureParams constrain(const Eigen::VectorXd& u, const MixtureSpec& spec);

// sum_i log sum_k w_k Binomial(y_i | n_i, theta_k), binomial coefficients
// included, evaluated with log-sum-exp.
double log_likelihood_situations(const MixtureParams& params, const TransitionData& data);

// sum_i log sum_k w_k prod_j Weibull(y_ij | shape_k, scale): one edge's whole
// observation vector belongs to a single component.
double log_likelihood_edges(const MixtureParams& params, const HoldingData& data,
                            double scale);

// Unnormalized log posterior over constrained params: likelihood, Dirichlet
// and component priors, plus the log Jacobian of the unconstrained
// transform. Equal to log_density_u(unconstrain(params)).
double log_posterior(const MixtureParams& params, const TransitionData& data,
                     const MixtureSpec& spec);
double log_posterior(const MixtureParams& params, const HoldingData& data,
                     const MixtureSpec& spec);

// The density the sampler and bridge estimator work on, as a function of the
// unconstrained point. All prior normalizing constants are included (plus a
// log k! term when ordered, so the normalizer equals the exchangeable
// model's marginal likelihood).
double log_density_u(const Eigen::VectorXd& u, const TransitionData& data,
                     const MixtureSpec& spec);
double log_density_u(const Eigen::VectorXd& u, const HoldingData& data,
                     const MixtureSpec& spec);

// Value plus gradient; the transform slice is forward-mode, the likelihood
// slice analytic through component responsibilities.
double log_density_grad_u(const Eigen::VectorXd& u, const TransitionData& data,
                          const MixtureSpec& spec, Eigen::VectorXd& grad);
double log_density_grad_u(const Eigen::VectorXd& u, const HoldingData& data,
                          const MixtureSpec& spec, Eigen::VectorXd& grad);

struct Allocation {
  Eigen::MatrixXd prob;     // units x k, each row a simplex
  std::vector<int> labels;  // row argmax, lowest index on ties
};

// p(z_i = k | y_i) = w_k p(y_i | comp_k) / sum_j w_j p(y_i | comp_j).
Allocation allocate_situations(const MixtureParams& params, const TransitionData& data);
Allocation allocate_edges(const MixtureParams& params, const HoldingData& data,
                          double scale);

}  // namespace cegmix
