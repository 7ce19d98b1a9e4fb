#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace cegmix {

// Splitmix64 finalizer; used to derive stream ids from composite keys.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t substream(std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(a) ^ (0x9E3779B97F4A7C15ull * (b + 1)));
}

inline std::uint64_t substream(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return substream(substream(a, b), c);
}

// Philox4x32-10 counter-based generator (Salmon et al. 2011).
// A stream is fully determined by (seed, stream); draws are independent of
// any other stream, so parallel chains can share a seed without coordination.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_{static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~0ull; }

  result_type operator()() {
    const std::uint32_t lo = next32();
    const std::uint32_t hi = next32();
    return (static_cast<std::uint64_t>(hi) << 32) | lo;
  }

  // Uniform on the open interval (0,1).
  double uniform() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  // Gamma(shape, rate) via Marsaglia-Tsang squeeze.
  double gamma(double shape, double rate) {
    if (shape <= 0.0 || rate <= 0.0) throw std::invalid_argument("gamma: nonpositive parameter");
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v / rate;
    }
  }

  // Weibull(shape k, scale lambda) by inverse transform; always > 0.
  double weibull(double shape, double scale) {
    return scale * std::pow(-std::log(uniform()), 1.0 / shape);
  }

  // Exact Binomial(n, p) as a Bernoulli sum; n stays small in this codebase.
  long binomial(long n, double p) {
    long s = 0;
    for (long i = 0; i < n; ++i) s += uniform() < p ? 1 : 0;
    return s;
  }

  // Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("below: empty range");
    const std::uint64_t t = (-n) % n;
    std::uint64_t x;
    do {
      x = (*this)();
    } while (x < t);
    return x % n;
  }

 private:
  static std::uint32_t mulhi(std::uint32_t a, std::uint32_t b) {
    return static_cast<std::uint32_t>((static_cast<std::uint64_t>(a) * b) >> 32);
  }

  void refill() {
    std::array<std::uint32_t, 4> c = {static_cast<std::uint32_t>(counter_),
                                      static_cast<std::uint32_t>(counter_ >> 32), stream_[0],
                                      stream_[1]};
    std::array<std::uint32_t, 2> k = key_;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        k[0] += 0x9E3779B9u;
        k[1] += 0xBB67AE85u;
      }
      const std::uint32_t hi0 = mulhi(c[0], 0xD2511F53u);
      const std::uint32_t lo0 = c[0] * 0xD2511F53u;
      const std::uint32_t hi1 = mulhi(c[2], 0xCD9E8D57u);
      const std::uint32_t lo1 = c[2] * 0xCD9E8D57u;
      c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
    buf_ = c;
    buf_pos_ = 0;
    ++counter_;
  }

  std::uint32_t next32() {
    if (buf_pos_ == 4) refill();
    return buf_[buf_pos_++];
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 2> stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int buf_pos_ = 4;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace cegmix
