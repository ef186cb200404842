#include "symgn/tape.hpp"

#include <stdexcept>

namespace symgn {

Val Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Val{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Val Tape::leaf(Tensor value) {
  return push({Op::kLeaf, 0, 0, 0, std::move(value), {}});
}

Val Tape::affine(Val w, Val b, Val x) {
  Tensor out = affine_forward(val(x.id), val(w.id), val(b.id));
  return push({Op::kAffine, w.id, b.id, x.id, std::move(out), {}});
}

Val Tape::relu(Val x) {
  return push({Op::kRelu, x.id, 0, 0, relu_forward(val(x.id)), {}});
}

Val Tape::add(Val a, Val b) {
  check_same_shape(val(a.id), val(b.id), "add");
  Tensor out = val(a.id);
  const Tensor& rhs = val(b.id);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += rhs.data[i];
  return push({Op::kAdd, a.id, b.id, 0, std::move(out), {}});
}

Val Tape::concat_cols(Val a, Val b) {
  Tensor out = concat_cols_forward(val(a.id), val(b.id));
  return push({Op::kConcatCols, a.id, b.id, 0, std::move(out), {}});
}

Val Tape::scatter_sum(Val messages, std::vector<std::uint32_t> receivers,
                      std::size_t n_nodes) {
  Tensor out = scatter_sum_forward(val(messages.id), receivers, n_nodes);
  return push({Op::kScatterSum, messages.id, 0, 0, std::move(out), std::move(receivers)});
}

Val Tape::l1_loss(Val pred, Val target) {
  const Tensor& p = val(pred.id);
  const Tensor& t = val(target.id);
  check_same_shape(p, t, "l1_loss");
  if (p.data.empty()) throw std::invalid_argument("l1_loss: empty tensors");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.data.size(); ++i) {
    const double d = p.data[i] - t.data[i];
    sum += d < 0.0 ? -d : d;
  }
  Tensor out(1, 1);
  out.data[0] = sum / static_cast<double>(p.data.size());
  return push({Op::kL1Loss, pred.id, target.id, 0, std::move(out), {}});
}

void Tape::backward(Val loss) {
  const Tensor& seed = val(loss.id);
  if (seed.rows != 1 || seed.cols != 1) {
    throw std::invalid_argument("backward: loss must be 1x1");
  }

  grads_.assign(nodes_.size(), Tensor{});
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    grads_[i] = Tensor(nodes_[i].value.rows, nodes_[i].value.cols);
  }
  grads_[loss.id].data[0] = 1.0;

  for (std::size_t i = nodes_.size(); i-- > 0;) {
    const Node& n = nodes_[i];
    const Tensor& gy = grads_[i];
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kAffine: {
        // y = x*w + b
        const Tensor& w = val(n.in0);
        const Tensor& x = val(n.in2);
        Tensor gw = matmul_tn(x, gy);
        Tensor gx = matmul_nt(gy, w);
        Tensor& gw_acc = grads_[n.in0];
        for (std::size_t j = 0; j < gw.data.size(); ++j) gw_acc.data[j] += gw.data[j];
        Tensor& gb = grads_[n.in1];
        for (std::size_t r = 0; r < gy.rows; ++r) {
          const double* src = gy.data.data() + r * gy.cols;
          for (std::size_t c = 0; c < gy.cols; ++c) gb.data[c] += src[c];
        }
        Tensor& gx_acc = grads_[n.in2];
        for (std::size_t j = 0; j < gx.data.size(); ++j) gx_acc.data[j] += gx.data[j];
        break;
      }
      case Op::kRelu: {
        const Tensor& x = val(n.in0);
        Tensor& gx = grads_[n.in0];
        for (std::size_t j = 0; j < x.data.size(); ++j) {
          if (x.data[j] > 0.0) gx.data[j] += gy.data[j];
        }
        break;
      }
      case Op::kAdd: {
        Tensor& ga = grads_[n.in0];
        Tensor& gb = grads_[n.in1];
        for (std::size_t j = 0; j < gy.data.size(); ++j) {
          ga.data[j] += gy.data[j];
          gb.data[j] += gy.data[j];
        }
        break;
      }
      case Op::kConcatCols: {
        Tensor& ga = grads_[n.in0];
        Tensor& gb = grads_[n.in1];
        for (std::size_t r = 0; r < gy.rows; ++r) {
          const double* src = gy.data.data() + r * gy.cols;
          double* da = ga.data.data() + r * ga.cols;
          double* db = gb.data.data() + r * gb.cols;
          for (std::size_t c = 0; c < ga.cols; ++c) da[c] += src[c];
          for (std::size_t c = 0; c < gb.cols; ++c) db[c] += src[ga.cols + c];
        }
        break;
      }
      case Op::kScatterSum: {
        // Adjoint copies each receiver's output gradient row back to every
        // message that contributed to it.
        Tensor& gm = grads_[n.in0];
        for (std::size_t k = 0; k < n.receivers.size(); ++k) {
          const double* src = gy.data.data() + n.receivers[k] * gy.cols;
          double* dst = gm.data.data() + k * gm.cols;
          for (std::size_t c = 0; c < gm.cols; ++c) dst[c] += src[c];
        }
        break;
      }
      case Op::kL1Loss: {
        const Tensor& p = val(n.in0);
        const Tensor& t = val(n.in1);
        const double scale = gy.data[0] / static_cast<double>(p.data.size());
        Tensor& gp = grads_[n.in0];
        for (std::size_t j = 0; j < p.data.size(); ++j) {
          const double d = p.data[j] - t.data[j];
          gp.data[j] += d > 0.0 ? scale : (d < 0.0 ? -scale : 0.0);
        }
        break;
      }
    }
  }
}

}  // namespace symgn
