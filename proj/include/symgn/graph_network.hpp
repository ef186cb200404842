#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "symgn/dataset.hpp"
#include "symgn/tape.hpp"

namespace symgn {

/// Directed edges as parallel (receiver, sender) index arrays.
struct GraphTopology {
  std::size_t n_nodes = 0;
  std::vector<std::uint32_t> receivers;
  std::vector<std::uint32_t> senders;

  std::size_t n_edges() const { return receivers.size(); }
};

struct ModelConfig {
  int dim = 2;           // space dimension D
  int message_dim = 2;   // message vector length
  int hidden_width = 128;
  int hidden_layers = 3;

  /// Node attribute layout is [position | velocity | mass].
  int node_attr_size() const { return 2 * dim + 1; }
  void validate() const;
};

/// One MLP: affine layers with ReLU between them and a linear output.
struct MlpParams {
  std::vector<Tensor> weights;  // weights[i]: in_i x out_i
  std::vector<Tensor> biases;   // 1 x out_i
};

struct GNParams {
  ModelConfig config;
  MlpParams edge_mlp;  // 2*(2D+1) -> message_dim
  MlpParams node_mlp;  // (2D+1) + message_dim -> D
};

/// All parameter tensors in a fixed order: edge MLP then node MLP, each
/// layer's weight before its bias. Gradients, optimizer moments and tape
/// leaves all share this order.
std::vector<Tensor*> param_tensors(GNParams& params);
std::vector<const Tensor*> param_tensors(const GNParams& params);

/// Complete directed graph for the n-body laws, both directions of the chain
/// for the string.
GraphTopology build_graph(const SystemState& state, const EnvConfig& env);

/// n x (2D+1) matrix of [position | velocity | mass] rows.
Tensor node_attributes(const SystemState& state);

/// He-scaled weights (std sqrt(2/fan_in)), zero biases, deterministic per seed.
GNParams init_params(const ModelConfig& config, std::uint64_t seed);

struct ForwardResult {
  Tensor dv;        // n x dim predicted velocity update
  Tensor messages;  // n_edges x message_dim
};

/// Inference path, no gradients. Messages are returned for analysis; the
/// model's velocity prediction is v + dv.
ForwardResult forward(const GNParams& params, const GraphTopology& graph,
                      const Tensor& attrs);

/// Message for a single (receiver, sender) attribute pair; equals the
/// corresponding row of forward().messages.
std::vector<double> message_forward(const GNParams& params,
                                    std::span<const double> receiver_attr,
                                    std::span<const double> sender_attr);

/// Parameter tensors registered as tape leaves, in the same fixed order as
/// param_tensors(): edge MLP layers then node MLP layers, weight before bias.
struct TapeParams {
  std::vector<Val> values;
};

TapeParams register_params(Tape& tape, const GNParams& params);

struct TapeForward {
  Val dv;
  Val messages;
};

/// Training path; identical numbers to forward() but recorded on the tape.
TapeForward forward_on_tape(Tape& tape, const TapeParams& params,
                            const ModelConfig& config, const GraphTopology& graph,
                            const Tensor& attrs);

// Checkpoints: a JSON object holding the model config, flat per-layer weight
// arrays at 17 significant digits, the training seed and the step count.
struct Checkpoint {
  GNParams params;
  std::uint64_t seed = 0;
  std::uint64_t train_steps = 0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace symgn
