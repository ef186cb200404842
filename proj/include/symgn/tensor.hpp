#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace symgn {

/// Dense row-major matrix of doubles. A 1xN tensor doubles as a row vector
/// and a 1x1 tensor as a scalar.
struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  Tensor(std::size_t r, std::size_t c, std::vector<double> values);

  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> values);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Tensor& other) const {
    return rows == other.rows && cols == other.cols;
  }
  bool all_finite() const;
};

// Dense kernels shared by the tape and the inference path. The GEMMs are
// delegated to Eigen via maps over the row-major storage.
Tensor matmul(const Tensor& a, const Tensor& b);     // a(n,p) * b(p,q)
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // a' * b
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a * b'

/// x(n,p) * w(p,q) + b(1,q) broadcast over rows.
Tensor affine_forward(const Tensor& x, const Tensor& w, const Tensor& b);

Tensor relu_forward(const Tensor& x);

/// Row i of the result is the sum of message rows with receiver id i.
Tensor scatter_sum_forward(const Tensor& messages,
                           std::span<const std::uint32_t> receivers,
                           std::size_t n_nodes);

Tensor concat_cols_forward(const Tensor& a, const Tensor& b);

void check_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace symgn
