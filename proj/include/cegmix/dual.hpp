#pragma once

#include <Eigen/Core>

#include <cmath>

namespace cegmix {

// Minimal forward-mode scalar carrying a full tangent vector. Used for the
// transform/prior/Jacobian slice of the posterior, whose dimension is tiny;
// likelihood gradients are analytic.
struct Dual {
  double v = 0.0;
  Eigen::VectorXd t;

  Dual() = default;
  Dual(double value, Eigen::Index dim) : v(value), t(Eigen::VectorXd::Zero(dim)) {}
  Dual(double value, Eigen::VectorXd tangent) : v(value), t(std::move(tangent)) {}

  static Dual seed(double value, Eigen::Index dim, Eigen::Index slot) {
    Dual d(value, dim);
    d.t[slot] = 1.0;
    return d;
  }
};

inline Dual operator+(const Dual& a, const Dual& b) { return Dual(a.v + b.v, a.t + b.t); }
inline Dual operator+(const Dual& a, double b) { return Dual(a.v + b, a.t); }
inline Dual operator+(double a, const Dual& b) { return Dual(a + b.v, b.t); }
inline Dual operator-(const Dual& a) { return Dual(-a.v, -a.t); }
inline Dual operator-(const Dual& a, const Dual& b) { return Dual(a.v - b.v, a.t - b.t); }
inline Dual operator-(const Dual& a, double b) { return Dual(a.v - b, a.t); }
inline Dual operator-(double a, const Dual& b) { return Dual(a - b.v, -b.t); }
inline Dual operator*(const Dual& a, const Dual& b) {
  return Dual(a.v * b.v, a.v * b.t + b.v * a.t);
}
inline Dual operator*(const Dual& a, double b) { return Dual(a.v * b, b * a.t); }
inline Dual operator*(double a, const Dual& b) { return b * a; }
inline Dual operator/(const Dual& a, const Dual& b) {
  return Dual(a.v / b.v, (a.t * b.v - a.v * b.t) / (b.v * b.v));
}
inline Dual operator/(const Dual& a, double b) { return Dual(a.v / b, a.t / b); }
inline Dual operator/(double a, const Dual& b) {
  return Dual(a / b.v, (-a / (b.v * b.v)) * b.t);
}

inline Dual exp(const Dual& a) {
  const double e = std::exp(a.v);
  return Dual(e, e * a.t);
}
inline Dual log(const Dual& a) { return Dual(std::log(a.v), a.t / a.v); }
inline Dual log1p(const Dual& a) { return Dual(std::log1p(a.v), a.t / (1.0 + a.v)); }

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}
inline double logistic(double x) {
  return x > 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}
inline Dual softplus(const Dual& a) { return Dual(softplus(a.v), logistic(a.v) * a.t); }

}  // namespace cegmix
