#pragma once

#include <cstdint>
#include <vector>

#include "symgn/tensor.hpp"

namespace symgn {

/// Handle to a value recorded on a Tape.
struct Val {
  std::uint32_t id = 0;
};

/// Reverse-mode tape over the fixed op set the graph network needs: affine,
/// relu, elementwise add, column concat, scatter-sum and mean-L1 loss.
/// Ops execute eagerly in recording order, so the record list is already a
/// topological order and backward() just walks it in reverse.
class Tape {
 public:
  Val leaf(Tensor value);
  Val affine(Val w, Val b, Val x);  // x*w + b, bias row broadcast
  Val relu(Val x);
  Val add(Val a, Val b);
  Val concat_cols(Val a, Val b);
  Val scatter_sum(Val messages, std::vector<std::uint32_t> receivers,
                  std::size_t n_nodes);
  /// Mean absolute difference over all entries; 1x1 result.
  /// Backward uses sign(pred - target)/count with sign(0) = 0.
  Val l1_loss(Val pred, Val target);

  /// Seeds d(loss)/d(loss) = 1 and accumulates gradients for every node.
  /// `loss` must be 1x1.
  void backward(Val loss);

  const Tensor& value(Val v) const { return nodes_[v.id].value; }
  /// Valid after backward(); zero-shaped before.
  const Tensor& grad(Val v) const { return grads_[v.id]; }
  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t { kLeaf, kAffine, kRelu, kAdd, kConcatCols, kScatterSum, kL1Loss };

  struct Node {
    Op op;
    std::uint32_t in0 = 0, in1 = 0, in2 = 0;
    Tensor value;
    std::vector<std::uint32_t> receivers;  // scatter_sum only
  };

  Val push(Node node);
  const Tensor& val(std::uint32_t id) const { return nodes_[id].value; }

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
};

}  // namespace symgn
