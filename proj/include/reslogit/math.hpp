#pragma once

// Scalar and vector numeric kernels shared by every model family.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace reslogit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// ln(1 + exp(z)) without overflow. For z > 0 computed as
/// z + log1p(exp(-z)) so the result stays exact up to the asymptote
/// softplus(z) -> z.
inline double softplus(double z) {
  if (!std::isfinite(z)) {
    throw Error("softplus: non-finite input " + std::to_string(z));
  }
  if (z > 0.0) {
    return z + std::log1p(std::exp(-z));
  }
  return std::log1p(std::exp(z));
}

/// Logistic function, derived from the softplus kernel:
/// sigma(z) = exp(z - softplus(z)) = exp(-softplus(-z)).
inline double sigmoid(double z) { return std::exp(-softplus(-z)); }

/// log sigma(z) = -softplus(-z), used by log-space probability paths.
inline double log_sigmoid(double z) { return -softplus(-z); }

/// Numerically stable softmax (max subtraction). Output is strictly
/// positive and sums to 1.
inline Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  if (!z.allFinite()) {
    throw Error("softmax: non-finite input");
  }
  const double shift = z.maxCoeff();
  Eigen::VectorXd w = (z.array() - shift).exp();
  return w / w.sum();
}

/// log softmax(z)[i] for a single index, via log-sum-exp. Never takes
/// the log of an already-exponentiated probability.
inline double log_softmax_at(const Eigen::VectorXd& z, Eigen::Index i) {
  const double shift = z.maxCoeff();
  const double lse = std::log((z.array() - shift).exp().sum());
  return z(i) - shift - lse;
}

inline bool nearly_equal(double a, double b, double rel, double abs_floor) {
  const double diff = std::abs(a - b);
  return diff <= abs_floor || diff <= rel * std::max(std::abs(a), std::abs(b));
}

}  // namespace reslogit
