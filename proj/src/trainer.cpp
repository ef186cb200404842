#include "symgn/trainer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "io_util.hpp"
#include "symgn/errors.hpp"
#include "symgn/random.hpp"

namespace symgn {

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974;
constexpr std::uint64_t kBatchStream = 0x62617463;
constexpr std::size_t kEvalChunk = 64;

GraphTopology tile_topology(const GraphTopology& graph, std::size_t copies) {
  GraphTopology tiled;
  tiled.n_nodes = graph.n_nodes * copies;
  tiled.receivers.reserve(graph.n_edges() * copies);
  tiled.senders.reserve(graph.n_edges() * copies);
  for (std::size_t b = 0; b < copies; ++b) {
    const auto offset = static_cast<std::uint32_t>(b * graph.n_nodes);
    for (std::size_t k = 0; k < graph.n_edges(); ++k) {
      tiled.receivers.push_back(graph.receivers[k] + offset);
      tiled.senders.push_back(graph.senders[k] + offset);
    }
  }
  return tiled;
}

void stack_record(const TrajectoryRecord& rec, std::size_t slot, Tensor& attrs,
                  Tensor& targets) {
  const Tensor a = node_attributes(rec.state);
  const std::size_t n = a.rows;
  std::copy(a.data.begin(), a.data.end(), attrs.data.begin() + slot * n * a.cols);
  std::copy(rec.dv.data.begin(), rec.dv.data.end(),
            targets.data.begin() + slot * n * rec.dv.cols);
}

double evaluate_records(const GNParams& params, const TrajectoryDataset& data,
                        std::span<const std::size_t> indices) {
  if (indices.empty()) {
    throw std::invalid_argument("evaluate: no records to evaluate");
  }
  if (params.config.dim != data.env.dim) {
    throw std::invalid_argument("evaluate: model dim does not match dataset");
  }
  const GraphTopology graph = build_graph(data.records[indices[0]].state, data.env);
  const std::size_t n = graph.n_nodes;
  const auto dim = static_cast<std::size_t>(data.env.dim);

  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t start = 0; start < indices.size(); start += kEvalChunk) {
    const std::size_t chunk = std::min(kEvalChunk, indices.size() - start);
    const GraphTopology tiled = tile_topology(graph, chunk);
    Tensor attrs(chunk * n, 2 * dim + 1);
    Tensor targets(chunk * n, dim);
    for (std::size_t b = 0; b < chunk; ++b) {
      stack_record(data.records[indices[start + b]], b, attrs, targets);
    }
    const ForwardResult out = forward(params, tiled, attrs);
    for (std::size_t i = 0; i < targets.data.size(); ++i) {
      sum += std::abs(out.dv.data[i] - targets.data[i]);
    }
    count += targets.data.size();
  }
  return sum / static_cast<double>(count);
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) {
    throw std::invalid_argument("TrainConfig: learning_rate must be >= 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("TrainConfig: betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("TrainConfig: epsilon must be > 0");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (total_steps < 1) throw std::invalid_argument("TrainConfig: total_steps must be >= 1");
  if (eval_interval < 1) {
    throw std::invalid_argument("TrainConfig: eval_interval must be >= 1");
  }
}

OptimizerState init_optimizer(const GNParams& params) {
  OptimizerState state;
  for (const Tensor* t : param_tensors(params)) {
    state.m.emplace_back(t->rows, t->cols);
    state.v.emplace_back(t->rows, t->cols);
  }
  state.t = 0;
  return state;
}

void adam_step(GNParams& params, const std::vector<Tensor>& grads,
               OptimizerState& state, const TrainConfig& config) {
  std::vector<Tensor*> tensors = param_tensors(params);
  if (grads.size() != tensors.size() || state.m.size() != tensors.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient count mismatch");
  }
  state.t += 1;
  const double bias1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double bias2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));

  for (std::size_t p = 0; p < tensors.size(); ++p) {
    Tensor& theta = *tensors[p];
    const Tensor& g = grads[p];
    check_same_shape(theta, g, "adam_step");
    Tensor& m = state.m[p];
    Tensor& v = state.v[p];
    for (std::size_t i = 0; i < theta.data.size(); ++i) {
      m.data[i] = config.beta1 * m.data[i] + (1.0 - config.beta1) * g.data[i];
      v.data[i] = config.beta2 * v.data[i] + (1.0 - config.beta2) * g.data[i] * g.data[i];
      const double m_hat = m.data[i] / bias1;
      const double v_hat = v.data[i] / bias2;
      theta.data[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

TrainResult train(const TrajectoryDataset& data, const ModelConfig& model_config,
                  const TrainConfig& config) {
  config.validate();
  model_config.validate();
  if (data.records.empty()) throw std::invalid_argument("train: dataset has no records");
  if (model_config.dim != data.env.dim) {
    throw std::invalid_argument("train: model dim " + std::to_string(model_config.dim) +
                                " does not match dataset dim " +
                                std::to_string(data.env.dim));
  }

  // Held-out split by simulation index: the last tenth of simulations.
  // Splitting by timestep would leak near-identical adjacent snapshots.
  const std::size_t n_eval_sims = data.n_sims / 10;
  const std::size_t first_eval_sim =
      data.n_sims == 0 ? std::numeric_limits<std::size_t>::max()
                       : data.n_sims - n_eval_sims;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> eval_indices;
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    if (data.records[i].sim >= first_eval_sim) {
      eval_indices.push_back(i);
    } else {
      train_indices.push_back(i);
    }
  }
  if (train_indices.empty()) throw std::invalid_argument("train: empty training split");
  const std::span<const std::size_t> eval_split =
      eval_indices.empty() ? std::span<const std::size_t>(train_indices)
                           : std::span<const std::size_t>(eval_indices);

  TrainResult result;
  result.params = init_params(model_config, derive_seed(config.seed, kInitStream));
  OptimizerState opt = init_optimizer(result.params);
  Rng batch_rng(derive_seed(config.seed, kBatchStream));

  const GraphTopology graph = build_graph(data.records[0].state, data.env);
  const GraphTopology batch_graph = tile_topology(graph, config.batch_size);
  const std::size_t n = graph.n_nodes;
  const auto dim = static_cast<std::size_t>(data.env.dim);

  double loss_accum = 0.0;
  std::size_t loss_count = 0;
  for (std::size_t step = 1; step <= config.total_steps; ++step) {
    Tensor attrs(config.batch_size * n, 2 * dim + 1);
    Tensor targets(config.batch_size * n, dim);
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      const std::size_t pick = train_indices[batch_rng.index(train_indices.size())];
      stack_record(data.records[pick], b, attrs, targets);
    }

    Tape tape;
    const TapeParams leaves = register_params(tape, result.params);
    const TapeForward fwd =
        forward_on_tape(tape, leaves, model_config, batch_graph, attrs);
    const Val loss = tape.l1_loss(fwd.dv, tape.leaf(std::move(targets)));
    const double loss_value = tape.value(loss)(0, 0);
    if (!std::isfinite(loss_value)) {
      throw DivergenceError("train: non-finite loss at step " + std::to_string(step));
    }
    tape.backward(loss);

    std::vector<Tensor> grads;
    grads.reserve(leaves.values.size());
    for (const Val v : leaves.values) grads.push_back(tape.grad(v));
    adam_step(result.params, grads, opt, config);

    loss_accum += loss_value;
    ++loss_count;
    if (step % config.eval_interval == 0 || step == config.total_steps) {
      LossPoint point;
      point.step = step;
      point.train_loss = loss_accum / static_cast<double>(loss_count);
      point.eval_loss = evaluate_records(result.params, data, eval_split);
      result.curve.push_back(point);
      loss_accum = 0.0;
      loss_count = 0;
    }
  }
  return result;
}

double evaluate(const GNParams& params, const TrajectoryDataset& data) {
  if (data.records.empty()) {
    throw std::invalid_argument("evaluate: dataset has no records");
  }
  std::vector<std::size_t> all(data.records.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return evaluate_records(params, data, all);
}

void save_loss_curve(const std::vector<LossPoint>& curve, const std::string& path) {
  auto out = detail::open_out(path);
  out << "step,train_loss,eval_loss\n";
  for (const auto& p : curve) {
    out << p.step << ',' << detail::g17(p.train_loss) << ','
        << detail::g17(p.eval_loss) << '\n';
  }
  if (!out) throw IoError("failed writing loss curve '" + path + "'");
}

}  // namespace symgn
