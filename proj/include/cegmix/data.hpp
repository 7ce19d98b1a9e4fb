#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

namespace cegmix {

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonPositiveTime : DataError {
  using DataError::DataError;
};

// Per-situation Binomial summaries. A situation's raw per-edge counts reduce
// to (successes, totals) because only two outcomes are in scope.
struct TransitionData {
  std::vector<std::string> ids;
  Eigen::VectorXi successes;
  Eigen::VectorXi totals;

  Eigen::Index size() const { return successes.size(); }
};

// Per-edge conditional holding time observations, all strictly positive.
struct HoldingData {
  std::vector<std::string> ids;
  std::vector<Eigen::VectorXd> times;

  Eigen::Index size() const { return static_cast<Eigen::Index>(times.size()); }
};

// Throws DataError on malformed counts (totals < successes, negatives, ...).
void validate(const TransitionData& data);
// Throws NonPositiveTime when any observation is <= 0.
void validate(const HoldingData& data);

// CSV with header `situation_id,successes,totals`, one row per situation.
TransitionData read_transition_csv(const std::string& path);
void write_transition_csv(const TransitionData& data, const std::string& path);

// CSV with header `edge_id,obs_index,holding_time`, one row per observation.
// Edges keep their first-appearance order; obs_index orders within an edge.
HoldingData read_holding_csv(const std::string& path);
void write_holding_csv(const HoldingData& data, const std::string& path);

}  // namespace cegmix
