#include "cegmix/ahc.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace cegmix {

namespace {

// Block sufficient statistics. Merging blocks is additive in these, which
// keeps every candidate-merge evaluation O(1) after the initial pass.
struct BinomStats {
  long long s = 0;
  long long f = 0;
};
BinomStats operator+(BinomStats a, BinomStats b) {
  return {a.s + b.s, a.f + b.f};
}

struct WeibStats {
  double n = 0.0;
  double sum_log = 0.0;
  double sum_pow = 0.0;
};
WeibStats operator+(WeibStats a, WeibStats b) {
  return {a.n + b.n, a.sum_log + b.sum_log, a.sum_pow + b.sum_pow};
}

struct BinomEvidence {
  BetaPrior prior;
  double operator()(const BinomStats& st) const {
    return log_marginal_binomial(static_cast<int>(st.s),
                                 static_cast<int>(st.f), prior);
  }
};

struct WeibEvidence {
  WeibullGammaPrior prior;
  double operator()(const WeibStats& st) const {
    const double k = prior.known_shape;
    const double a = prior.rate;
    const double b = prior.shape_hyper;
    return st.n * std::log(k) + (k - 1.0) * st.sum_log + b * std::log(a) -
           std::lgamma(b) + std::lgamma(b + st.n) -
           (b + st.n) * std::log(a + st.sum_pow);
  }
};

std::vector<BinomStats> unit_stats(const TransitionData& data) {
  std::vector<BinomStats> st(static_cast<std::size_t>(data.size()));
  for (Eigen::Index i = 0; i < data.size(); ++i)
    st[static_cast<std::size_t>(i)] = {data.successes[i],
                                       static_cast<long long>(data.totals[i] - data.successes[i])};
  return st;
}

std::vector<WeibStats> unit_stats(const HoldingData& data,
                                  const WeibullGammaPrior& prior) {
  std::vector<WeibStats> st(static_cast<std::size_t>(data.size()));
  for (std::size_t i = 0; i < st.size(); ++i) {
    const auto& t = data.times[i];
    st[i] = {static_cast<double>(t.size()), t.array().log().sum(),
             t.array().pow(prior.known_shape).sum()};
  }
  return st;
}

template <class Stats, class Ev>
AhcResult greedy_merge(std::vector<Stats> block, const Ev& ev) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = block.size();

  std::vector<double> block_ev(n);
  std::vector<char> active(n, 1);
  for (std::size_t i = 0; i < n; ++i) block_ev[i] = ev(block[i]);

  double score = 0.0;
  for (double e : block_ev) score += e;

  AhcResult out;
  out.score_trace.push_back(score);

  // delta[i*n+j] (i < j) is the score change from merging slots i and j.
  std::vector<double> delta(n * n, -std::numeric_limits<double>::infinity());
  auto refresh = [&](std::size_t i, std::size_t j) {
    delta[i * n + j] = ev(block[i] + block[j]) - block_ev[i] - block_ev[j];
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) refresh(i, j);

  std::vector<std::size_t> slot_of_unit(n);
  for (std::size_t i = 0; i < n; ++i) slot_of_unit[i] = i;

  while (true) {
    double best = 0.0;
    std::size_t bi = n, bj = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        if (delta[i * n + j] > best) {
          best = delta[i * n + j];
          bi = i;
          bj = j;
        }
      }
    }
    if (bi == n) break;  // no strictly improving merge left

    block[bi] = block[bi] + block[bj];
    block_ev[bi] = ev(block[bi]);
    active[bj] = 0;
    score += best;
    out.score_trace.push_back(score);
    for (std::size_t u = 0; u < n; ++u)
      if (slot_of_unit[u] == bj) slot_of_unit[u] = bi;

    for (std::size_t j = 0; j < n; ++j) {
      if (!active[j] || j == bi) continue;
      if (j < bi)
        refresh(j, bi);
      else
        refresh(bi, j);
    }
  }

  std::vector<int> labels(n);
  for (std::size_t u = 0; u < n; ++u)
    labels[u] = static_cast<int>(slot_of_unit[u]);
  out.partition = Partition::from_labels(labels);
  out.log_score = score;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();
  return out;
}

// Lexicographic restricted-growth-string enumeration of set partitions.
template <class Stats, class Ev>
ExactSearchResult exact_search(const std::vector<Stats>& unit, const Ev& ev) {
  const std::size_t n = unit.size();
  if (n > 10)
    throw TooManyUnits("exact search capped at 10 units, got " +
                       std::to_string(n));

  std::vector<int> rgs(n, 0);
  std::vector<int> maxp(n, 0);  // maxp[i] = max(rgs[0..i-1]), maxp[0] = 0

  ExactSearchResult best;
  best.log_score = -std::numeric_limits<double>::infinity();
  int best_k = std::numeric_limits<int>::max();

  std::vector<Stats> block(n);
  auto score_current = [&](int k) {
    for (int c = 0; c < k; ++c) block[static_cast<std::size_t>(c)] = Stats{};
    for (std::size_t i = 0; i < n; ++i) {
      auto c = static_cast<std::size_t>(rgs[i]);
      block[c] = block[c] + unit[i];
    }
    double s = 0.0;
    for (int c = 0; c < k; ++c) s += ev(block[static_cast<std::size_t>(c)]);
    return s;
  };

  while (true) {
    int k = 1;
    for (std::size_t i = 0; i < n; ++i) k = std::max(k, rgs[i] + 1);
    const double s = score_current(k);
    if (s > best.log_score ||
        (s == best.log_score &&
         (k < best_k || (k == best_k && rgs < best.partition.labels)))) {
      best.log_score = s;
      best_k = k;
      best.partition.labels = rgs;
      best.partition.k = k;
    }

    // advance to the next restricted growth string
    std::size_t i = n;
    while (i-- > 1) {
      if (rgs[i] <= maxp[i]) {
        ++rgs[i];
        int m = std::max(maxp[i], rgs[i]);
        for (std::size_t j = i + 1; j < n; ++j) {
          rgs[j] = 0;
          maxp[j] = m;
        }
        break;
      }
      if (i == 1) return best;
    }
    if (n == 1) return best;
  }
}

}  // namespace

AhcResult ahc_cluster(const TransitionData& data, const BetaPrior& prior) {
  validate(data);
  if (data.size() < 1) throw DataError("need at least one unit");
  return greedy_merge(unit_stats(data), BinomEvidence{prior});
}

AhcResult ahc_cluster(const HoldingData& data, const WeibullGammaPrior& prior) {
  validate(data);
  if (data.size() < 1) throw DataError("need at least one unit");
  return greedy_merge(unit_stats(data, prior), WeibEvidence{prior});
}

ExactSearchResult exact_partition_search(const TransitionData& data,
                                         const BetaPrior& prior) {
  validate(data);
  if (data.size() < 1) throw DataError("need at least one unit");
  return exact_search(unit_stats(data), BinomEvidence{prior});
}

ExactSearchResult exact_partition_search(const HoldingData& data,
                                         const WeibullGammaPrior& prior) {
  validate(data);
  if (data.size() < 1) throw DataError("need at least one unit");
  return exact_search(unit_stats(data, prior), WeibEvidence{prior});
}

}  // namespace cegmix
