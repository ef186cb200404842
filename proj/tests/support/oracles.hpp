#pragma once

// Test-only oracles: central finite differences and small hand-rolled
// reference computations, kept independent of the library's backward pass.

#include <cmath>
#include <functional>
#include <vector>

#include "symgn/tensor.hpp"

namespace symgn::test {

/// d f / d x by central differences, restoring x afterwards.
inline double central_diff(const std::function<double()>& f, double& x,
                           double h = 1e-5) {
  const double x0 = x;
  x = x0 + h;
  const double fp = f();
  x = x0 - h;
  const double fm = f();
  x = x0;
  return (fp - fm) / (2.0 * h);
}

inline double rel_err(double got, double want) {
  const double denom = std::max({std::abs(got), std::abs(want), 1e-10});
  return std::abs(got - want) / denom;
}

/// Reference x*w + b, written as plain loops.
inline Tensor affine_by_hand(const Tensor& x, const Tensor& w, const Tensor& b) {
  Tensor y(x.rows, w.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = 0; j < w.cols; ++j) {
      double s = b(0, j);
      for (std::size_t k = 0; k < x.cols; ++k) s += x(i, k) * w(k, j);
      y(i, j) = s;
    }
  }
  return y;
}

inline double l1_by_hand(const Tensor& pred, const Tensor& target) {
  double s = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    s += std::abs(pred.data[i] - target.data[i]);
  }
  return s / static_cast<double>(pred.data.size());
}

}  // namespace symgn::test
