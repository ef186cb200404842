#include "symgn/tensor.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>

namespace symgn {

namespace {

using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajorMatrix>;
using Map = Eigen::Map<RowMajorMatrix>;

ConstMap map_of(const Tensor& t) {
  return ConstMap(t.data.data(), static_cast<Eigen::Index>(t.rows),
                  static_cast<Eigen::Index>(t.cols));
}

Map map_of(Tensor& t) {
  return Map(t.data.data(), static_cast<Eigen::Index>(t.rows),
             static_cast<Eigen::Index>(t.cols));
}

[[noreturn]] void shape_error(const char* what, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(what) + ": shapes " +
                              std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                              " and " + std::to_string(b.rows) + "x" +
                              std::to_string(b.cols) + " are incompatible");
}

}  // namespace

Tensor::Tensor(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != rows * cols) {
    throw std::invalid_argument("Tensor: data length " + std::to_string(data.size()) +
                                " does not match " + std::to_string(rows) + "x" +
                                std::to_string(cols));
  }
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> values) {
  Tensor t(values.size(), values.size() ? values.begin()->size() : 0);
  std::size_t r = 0;
  for (const auto& row : values) {
    if (row.size() != t.cols) {
      throw std::invalid_argument("Tensor::from_rows: ragged rows");
    }
    std::size_t c = 0;
    for (double v : row) t(r, c++) = v;
    ++r;
  }
  return t;
}

bool Tensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) shape_error(what, a, b);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols != b.rows) shape_error("matmul", a, b);
  Tensor out(a.rows, b.cols);
  map_of(out).noalias() = map_of(a) * map_of(b);
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rows != b.rows) shape_error("matmul_tn", a, b);
  Tensor out(a.cols, b.cols);
  map_of(out).noalias() = map_of(a).transpose() * map_of(b);
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols != b.cols) shape_error("matmul_nt", a, b);
  Tensor out(a.rows, b.rows);
  map_of(out).noalias() = map_of(a) * map_of(b).transpose();
  return out;
}

Tensor affine_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.cols != w.rows) shape_error("affine", x, w);
  if (b.rows != 1 || b.cols != w.cols) shape_error("affine bias", b, w);
  Tensor out(x.rows, w.cols);
  auto m = map_of(out);
  m.noalias() = map_of(x) * map_of(w);
  m.rowwise() += ConstMap(b.data.data(), 1, static_cast<Eigen::Index>(b.cols)).row(0);
  return out;
}

Tensor relu_forward(const Tensor& x) {
  Tensor out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    out.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
  }
  return out;
}

Tensor scatter_sum_forward(const Tensor& messages,
                           std::span<const std::uint32_t> receivers,
                           std::size_t n_nodes) {
  if (messages.rows != receivers.size()) {
    throw std::invalid_argument("scatter_sum: " + std::to_string(messages.rows) +
                                " message rows vs " + std::to_string(receivers.size()) +
                                " receiver ids");
  }
  Tensor out(n_nodes, messages.cols);
  for (std::size_t k = 0; k < receivers.size(); ++k) {
    const std::uint32_t r = receivers[k];
    if (r >= n_nodes) {
      throw std::out_of_range("scatter_sum: receiver id " + std::to_string(r) +
                              " out of range [0, " + std::to_string(n_nodes) + ")");
    }
    double* dst = out.data.data() + r * out.cols;
    const double* src = messages.data.data() + k * messages.cols;
    for (std::size_t c = 0; c < messages.cols; ++c) dst[c] += src[c];
  }
  return out;
}

Tensor concat_cols_forward(const Tensor& a, const Tensor& b) {
  if (a.rows != b.rows) shape_error("concat_cols", a, b);
  Tensor out(a.rows, a.cols + b.cols);
  for (std::size_t r = 0; r < a.rows; ++r) {
    double* dst = out.data.data() + r * out.cols;
    const double* sa = a.data.data() + r * a.cols;
    const double* sb = b.data.data() + r * b.cols;
    for (std::size_t c = 0; c < a.cols; ++c) dst[c] = sa[c];
    for (std::size_t c = 0; c < b.cols; ++c) dst[a.cols + c] = sb[c];
  }
  return out;
}

}  // namespace symgn
