#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <vector>

namespace cegmix {

struct InsufficientDraws : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConvergenceReport {
  Eigen::VectorXd rhat;  // one entry per parameter column
  double prop_below_101 = 0.0;
  double prop_below_110 = 0.0;
};

// Rank-normalized split-R-hat per parameter (max of bulk and folded-tail
// variants). `chains` holds one m x d draw matrix per chain. Proportions are
// taken over columns count_from..d-1 only; earlier columns are still reported.
// Requires at least 2 chains and 4 draws per chain.
ConvergenceReport split_rhat(const std::vector<Eigen::MatrixXd>& chains,
                             Eigen::Index count_from = 0);

}  // namespace cegmix
