#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "symgn/graph_network.hpp"

namespace symgn {

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 32;   // whole graphs per batch
  std::size_t total_steps = 2000;
  std::size_t eval_interval = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Adam moments; tensor shapes mirror param_tensors() order.
struct OptimizerState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t t = 0;
};

OptimizerState init_optimizer(const GNParams& params);

/// One Adam update with bias correction, in place.
void adam_step(GNParams& params, const std::vector<Tensor>& grads,
               OptimizerState& state, const TrainConfig& config);

struct LossPoint {
  std::size_t step;
  double train_loss;  // mean batch loss since the previous eval point
  double eval_loss;
};

struct TrainResult {
  GNParams params;
  std::vector<LossPoint> curve;
};

/// Supervised training with L1 loss. The held-out split is the last tenth of
/// simulations (by sim index, never by timestep); with a single simulation the
/// curve falls back to evaluating on the training split. Deterministic per
/// config seed; a non-finite loss aborts with DivergenceError.
TrainResult train(const TrajectoryDataset& data, const ModelConfig& model_config,
                  const TrainConfig& config);

/// Mean L1 per node-component over every record. Fixed nodes are included
/// (their targets are zero). Throws std::invalid_argument on empty datasets.
double evaluate(const GNParams& params, const TrajectoryDataset& data);

/// CSV with a "step,train_loss,eval_loss" header.
void save_loss_curve(const std::vector<LossPoint>& curve, const std::string& path);

}  // namespace symgn
