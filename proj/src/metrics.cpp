#include "cegmix/metrics.hpp"

#include <cmath>
#include <vector>

namespace cegmix {

namespace {

// Joint label counts: cell (i,j) = #units with pred label i and truth label j.
std::vector<std::vector<long>> contingency(const Partition& pred, const Partition& truth) {
  std::vector<std::vector<long>> table(pred.k, std::vector<long>(truth.k, 0));
  for (std::size_t u = 0; u < pred.size(); ++u) ++table[pred.labels[u]][truth.labels[u]];
  return table;
}

double pairs2(long n) { return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1); }

}  // namespace

double nmi(const Partition& pred, const Partition& truth) {
  validate_partition(pred);
  validate_partition(truth);
  if (pred.size() != truth.size()) throw UnitSetMismatch("nmi: partitions cover different unit sets");
  const double n = static_cast<double>(pred.size());
  if (pred.size() == 0) throw UnitSetMismatch("nmi: empty partitions");

  if (pred.k <= 1 || truth.k <= 1) return pred == truth ? 1.0 : 0.0;

  const auto table = contingency(pred, truth);
  std::vector<long> row(pred.k, 0), col(truth.k, 0);
  for (int i = 0; i < pred.k; ++i)
    for (int j = 0; j < truth.k; ++j) {
      row[i] += table[i][j];
      col[j] += table[i][j];
    }

  double mi = 0.0;
  for (int i = 0; i < pred.k; ++i)
    for (int j = 0; j < truth.k; ++j)
      if (table[i][j] > 0) {
        const double nij = static_cast<double>(table[i][j]);
        mi += (nij / n) * std::log(nij * n / (static_cast<double>(row[i]) * col[j]));
      }
  double h_pred = 0.0, h_truth = 0.0;
  for (long a : row)
    if (a > 0) h_pred -= (a / n) * std::log(a / n);
  for (long b : col)
    if (b > 0) h_truth -= (b / n) * std::log(b / n);

  if (h_pred <= 0.0 || h_truth <= 0.0) return pred == truth ? 1.0 : 0.0;
  const double v = mi / std::sqrt(h_pred * h_truth);
  return std::min(1.0, std::max(0.0, v));
}

double rand_index(const Partition& pred, const Partition& truth) {
  validate_partition(pred);
  validate_partition(truth);
  if (pred.size() != truth.size())
    throw UnitSetMismatch("rand_index: partitions cover different unit sets");
  if (pred.size() < 2) throw TooFewUnits("rand_index: need at least 2 units");

  const auto table = contingency(pred, truth);
  std::vector<long> row(pred.k, 0), col(truth.k, 0);
  for (int i = 0; i < pred.k; ++i)
    for (int j = 0; j < truth.k; ++j) {
      row[i] += table[i][j];
      col[j] += table[i][j];
    }

  // Pair counts from the contingency table: agreements are pairs joined in
  // both partitions plus pairs separated in both.
  double same_both = 0.0;
  for (int i = 0; i < pred.k; ++i)
    for (int j = 0; j < truth.k; ++j) same_both += pairs2(table[i][j]);
  double same_pred = 0.0, same_truth = 0.0;
  for (long a : row) same_pred += pairs2(a);
  for (long b : col) same_truth += pairs2(b);

  const double total = pairs2(static_cast<long>(pred.size()));
  const double tp = same_both;
  const double fp = same_pred - same_both;
  const double fn = same_truth - same_both;
  const double tn = total - tp - fp - fn;
  return (tp + tn) / total;
}

}  // namespace cegmix
