#pragma once

#include <cmath>

namespace bayescount {

/// Compensated (Neumaier) summation. Accumulation order is whatever the
/// caller feeds in, so a fixed iteration order gives bit-reproducible sums.
template <class Scalar>
class KahanSum {
 public:
  void add(Scalar x) {
    const Scalar t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  Scalar value() const { return sum_ + comp_; }

 private:
  Scalar sum_{};
  Scalar comp_{};
};

/// sign with sign(0) = 0; the subgradient convention used by the l1 losses.
template <class Scalar>
constexpr Scalar sign0(Scalar x) {
  return x > Scalar(0) ? Scalar(1) : (x < Scalar(0) ? Scalar(-1) : Scalar(0));
}

/// Overflow-safe softplus log(1 + e^x).
template <class Scalar>
Scalar softplus(Scalar x) {
  return x > Scalar(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// Logistic sigmoid, the derivative of softplus.
template <class Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= Scalar(0)) {
    return Scalar(1) / (Scalar(1) + std::exp(-x));
  }
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

}  // namespace bayescount
