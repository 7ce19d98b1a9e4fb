#include "cegmix/rhat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cegmix {
namespace {

// Wichura's PPND16 rational approximation of the standard normal quantile,
// accurate to ~1e-16 over (0,1).
double normal_quantile(double p) {
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
              6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
            1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
          1.3314166789178437745e2) * r + 3.3871328727963666080e0);
    const double den =
        (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
              3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
            5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
          4.2313330701600911252e1) * r + 1.0);
    return q * num / den;
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
            3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
          4.63033784615654529590e0) * r + 1.42343711074968357734e0);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
          2.05319162663775882187e0) * r + 1.0);
    val = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
          5.46378491116411436990e0) * r + 6.65790464350110377720e0);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
    val = num / den;
  }
  return q < 0.0 ? -val : val;
}

// Average ranks (1-based, ties share the mean rank), then map through the
// normal quantile with the (r - 3/8)/(S + 1/4) offset.
Eigen::VectorXd rank_normalize(const Eigen::VectorXd& x) {
  const Eigen::Index s = x.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(s));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return x[a] < x[b]; });
  Eigen::VectorXd z(s);
  Eigen::Index i = 0;
  while (i < s) {
    Eigen::Index j = i;
    while (j + 1 < s && x[order[static_cast<std::size_t>(j + 1)]] ==
                            x[order[static_cast<std::size_t>(i)]])
      ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;  // mean of i..j, 1-based
    const double u = (rank - 0.375) / (static_cast<double>(s) + 0.25);
    const double q = normal_quantile(u);
    for (Eigen::Index t = i; t <= j; ++t) z[order[static_cast<std::size_t>(t)]] = q;
    i = j + 1;
  }
  return z;
}

// Classic potential scale reduction on already-transformed sequences laid out
// as an n x 2c matrix (one column per split half).
double basic_rhat(const Eigen::MatrixXd& seq) {
  const double n = static_cast<double>(seq.rows());
  const Eigen::Index c = seq.cols();
  Eigen::VectorXd means(c), vars(c);
  for (Eigen::Index j = 0; j < c; ++j) {
    means[j] = seq.col(j).mean();
    vars[j] = (seq.col(j).array() - means[j]).square().sum() / (n - 1.0);
  }
  const double w = vars.mean();
  const double grand = means.mean();
  const double b =
      n * (means.array() - grand).square().sum() / (static_cast<double>(c) - 1.0);
  if (w <= 0.0 && b <= 0.0) return 1.0;
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

}  // namespace

ConvergenceReport split_rhat(const std::vector<Eigen::MatrixXd>& chains,
                             Eigen::Index count_from) {
  if (chains.size() < 2) throw InsufficientDraws("split_rhat: need at least 2 chains");
  const Eigen::Index m = chains.front().rows();
  const Eigen::Index d = chains.front().cols();
  if (m < 4) throw InsufficientDraws("split_rhat: need at least 4 draws per chain");
  for (const auto& c : chains)
    if (c.rows() != m || c.cols() != d)
      throw InsufficientDraws("split_rhat: ragged chain array");

  const Eigen::Index half = m / 2;
  const Eigen::Index nseq = 2 * static_cast<Eigen::Index>(chains.size());

  ConvergenceReport report;
  report.rhat.resize(d);
  for (Eigen::Index p = 0; p < d; ++p) {
    Eigen::MatrixXd seq(half, nseq);
    for (std::size_t c = 0; c < chains.size(); ++c) {
      seq.col(static_cast<Eigen::Index>(2 * c)) = chains[c].col(p).head(half);
      seq.col(static_cast<Eigen::Index>(2 * c + 1)) = chains[c].col(p).tail(half);
    }
    const Eigen::Map<const Eigen::VectorXd> flat(seq.data(), seq.size());
    if ((flat.array() == flat[0]).all()) {
      report.rhat[p] = 1.0;  // zero-variance guard
      continue;
    }
    Eigen::VectorXd z = rank_normalize(flat);
    const Eigen::Map<const Eigen::MatrixXd> zseq(z.data(), half, nseq);
    const double bulk = basic_rhat(zseq);

    Eigen::VectorXd sorted = flat;
    std::sort(sorted.data(), sorted.data() + sorted.size());
    const double med = half * nseq % 2 == 1
                           ? sorted[sorted.size() / 2]
                           : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
    Eigen::VectorXd folded_z = rank_normalize((flat.array() - med).abs().matrix());
    const Eigen::Map<const Eigen::MatrixXd> fseq(folded_z.data(), half, nseq);
    const double tail = basic_rhat(fseq);

    report.rhat[p] = std::max(bulk, tail);
  }

  count_from = std::clamp<Eigen::Index>(count_from, 0, d);
  const Eigen::Index counted = d - count_from;
  if (counted > 0) {
    const auto tail = report.rhat.tail(counted).array();
    report.prop_below_101 =
        static_cast<double>((tail < 1.01).count()) / static_cast<double>(counted);
    report.prop_below_110 =
        static_cast<double>((tail < 1.10).count()) / static_cast<double>(counted);
  }
  return report;
}

}  // namespace cegmix
