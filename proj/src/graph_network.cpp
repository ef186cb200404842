#include "symgn/graph_network.hpp"

#include <nlohmann/json.hpp>

#include <stdexcept>

#include "io_util.hpp"
#include "symgn/errors.hpp"
#include "symgn/random.hpp"

namespace symgn {

using nlohmann::json;
using detail::append_array;

void ModelConfig::validate() const {
  if (dim != 2 && dim != 3) throw std::invalid_argument("ModelConfig: dim must be 2 or 3");
  if (message_dim < 1) throw std::invalid_argument("ModelConfig: message_dim must be >= 1");
  if (hidden_width < 1) throw std::invalid_argument("ModelConfig: hidden_width must be >= 1");
  if (hidden_layers < 1) throw std::invalid_argument("ModelConfig: hidden_layers must be >= 1");
}

GraphTopology build_graph(const SystemState& state, const EnvConfig& env) {
  GraphTopology g;
  g.n_nodes = state.size();
  if (env.is_spring()) {
    // Both directions of the chain.
    g.receivers.reserve(2 * (g.n_nodes - 1));
    g.senders.reserve(2 * (g.n_nodes - 1));
    for (std::uint32_t i = 0; i + 1 < g.n_nodes; ++i) {
      g.receivers.push_back(i);
      g.senders.push_back(i + 1);
      g.receivers.push_back(i + 1);
      g.senders.push_back(i);
    }
    return g;
  }
  // All ordered pairs.
  g.receivers.reserve(g.n_nodes * (g.n_nodes - 1));
  g.senders.reserve(g.n_nodes * (g.n_nodes - 1));
  for (std::uint32_t r = 0; r < g.n_nodes; ++r) {
    for (std::uint32_t s = 0; s < g.n_nodes; ++s) {
      if (r == s) continue;
      g.receivers.push_back(r);
      g.senders.push_back(s);
    }
  }
  return g;
}

Tensor node_attributes(const SystemState& state) {
  const std::size_t n = state.size();
  const std::size_t dim = state.positions.cols;
  Tensor attrs(n, 2 * dim + 1);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = attrs.data.data() + i * attrs.cols;
    const double* x = state.positions.data.data() + i * dim;
    const double* v = state.velocities.data.data() + i * dim;
    for (std::size_t c = 0; c < dim; ++c) row[c] = x[c];
    for (std::size_t c = 0; c < dim; ++c) row[dim + c] = v[c];
    row[2 * dim] = state.masses[i];
  }
  return attrs;
}

namespace {

// Layer sizes for one MLP: input, hidden ... hidden, output.
std::vector<int> layer_sizes(int in, int hidden, int n_hidden, int out) {
  std::vector<int> sizes;
  sizes.push_back(in);
  for (int i = 0; i < n_hidden; ++i) sizes.push_back(hidden);
  sizes.push_back(out);
  return sizes;
}

MlpParams init_mlp(const std::vector<int>& sizes, Rng& rng) {
  MlpParams mlp;
  for (std::size_t layer = 0; layer + 1 < sizes.size(); ++layer) {
    const auto fan_in = static_cast<std::size_t>(sizes[layer]);
    const auto fan_out = static_cast<std::size_t>(sizes[layer + 1]);
    Tensor w(fan_in, fan_out);
    const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : w.data) v = std_dev * rng.normal();
    mlp.weights.push_back(std::move(w));
    mlp.biases.emplace_back(1, fan_out);
  }
  return mlp;
}

Tensor mlp_forward(const MlpParams& mlp, const Tensor& input) {
  Tensor x = affine_forward(input, mlp.weights[0], mlp.biases[0]);
  for (std::size_t layer = 1; layer < mlp.weights.size(); ++layer) {
    x = relu_forward(x);
    x = affine_forward(x, mlp.weights[layer], mlp.biases[layer]);
  }
  return x;
}

Tensor edge_inputs(const GraphTopology& graph, const Tensor& attrs) {
  Tensor in(graph.n_edges(), 2 * attrs.cols);
  for (std::size_t k = 0; k < graph.n_edges(); ++k) {
    double* row = in.data.data() + k * in.cols;
    const double* recv = attrs.data.data() + graph.receivers[k] * attrs.cols;
    const double* send = attrs.data.data() + graph.senders[k] * attrs.cols;
    for (std::size_t c = 0; c < attrs.cols; ++c) row[c] = recv[c];
    for (std::size_t c = 0; c < attrs.cols; ++c) row[attrs.cols + c] = send[c];
  }
  return in;
}

void check_forward_shapes(const GNParams& params, const GraphTopology& graph,
                          const Tensor& attrs) {
  const auto expected = static_cast<std::size_t>(params.config.node_attr_size());
  if (attrs.cols != expected) {
    throw std::invalid_argument("forward: attribute width " + std::to_string(attrs.cols) +
                                " does not match model (" + std::to_string(expected) + ")");
  }
  if (attrs.rows != graph.n_nodes) {
    throw std::invalid_argument("forward: attribute rows do not match graph nodes");
  }
}

}  // namespace

GNParams init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  GNParams params;
  params.config = config;
  const int attr = config.node_attr_size();
  Rng rng(derive_seed(seed, 0x6d6c70));
  params.edge_mlp = init_mlp(
      layer_sizes(2 * attr, config.hidden_width, config.hidden_layers, config.message_dim),
      rng);
  params.node_mlp = init_mlp(
      layer_sizes(attr + config.message_dim, config.hidden_width, config.hidden_layers,
                  config.dim),
      rng);
  return params;
}

ForwardResult forward(const GNParams& params, const GraphTopology& graph,
                      const Tensor& attrs) {
  check_forward_shapes(params, graph, attrs);
  ForwardResult result;
  result.messages = mlp_forward(params.edge_mlp, edge_inputs(graph, attrs));
  const Tensor pooled =
      scatter_sum_forward(result.messages, graph.receivers, graph.n_nodes);
  result.dv = mlp_forward(params.node_mlp, concat_cols_forward(attrs, pooled));
  return result;
}

std::vector<double> message_forward(const GNParams& params,
                                    std::span<const double> receiver_attr,
                                    std::span<const double> sender_attr) {
  const auto attr = static_cast<std::size_t>(params.config.node_attr_size());
  if (receiver_attr.size() != attr || sender_attr.size() != attr) {
    throw std::invalid_argument("message_forward: attribute width does not match model");
  }
  Tensor in(1, 2 * attr);
  for (std::size_t c = 0; c < attr; ++c) in.data[c] = receiver_attr[c];
  for (std::size_t c = 0; c < attr; ++c) in.data[attr + c] = sender_attr[c];
  return mlp_forward(params.edge_mlp, in).data;
}

std::vector<Tensor*> param_tensors(GNParams& params) {
  std::vector<Tensor*> out;
  for (MlpParams* mlp : {&params.edge_mlp, &params.node_mlp}) {
    for (std::size_t i = 0; i < mlp->weights.size(); ++i) {
      out.push_back(&mlp->weights[i]);
      out.push_back(&mlp->biases[i]);
    }
  }
  return out;
}

std::vector<const Tensor*> param_tensors(const GNParams& params) {
  std::vector<const Tensor*> out;
  for (const MlpParams* mlp : {&params.edge_mlp, &params.node_mlp}) {
    for (std::size_t i = 0; i < mlp->weights.size(); ++i) {
      out.push_back(&mlp->weights[i]);
      out.push_back(&mlp->biases[i]);
    }
  }
  return out;
}

TapeParams register_params(Tape& tape, const GNParams& params) {
  TapeParams leaves;
  for (const Tensor* t : param_tensors(params)) {
    leaves.values.push_back(tape.leaf(*t));
  }
  return leaves;
}

namespace {

Val mlp_on_tape(Tape& tape, std::span<const Val> leaves, std::size_t n_layers, Val x) {
  // leaves holds [w0, b0, w1, b1, ...] for this MLP.
  for (std::size_t layer = 0; layer < n_layers; ++layer) {
    if (layer > 0) x = tape.relu(x);
    x = tape.affine(leaves[2 * layer], leaves[2 * layer + 1], x);
  }
  return x;
}

}  // namespace

TapeForward forward_on_tape(Tape& tape, const TapeParams& params,
                            const ModelConfig& config, const GraphTopology& graph,
                            const Tensor& attrs) {
  const std::size_t edge_layers = static_cast<std::size_t>(config.hidden_layers) + 1;
  const std::size_t node_layers = edge_layers;
  if (params.values.size() != 2 * (edge_layers + node_layers)) {
    throw std::invalid_argument("forward_on_tape: parameter leaf count mismatch");
  }
  std::span<const Val> leaves(params.values);

  const Val edge_in = tape.leaf(edge_inputs(graph, attrs));
  TapeForward out;
  out.messages = mlp_on_tape(tape, leaves.subspan(0, 2 * edge_layers), edge_layers, edge_in);

  std::vector<std::uint32_t> receivers(graph.receivers);
  const Val pooled = tape.scatter_sum(out.messages, std::move(receivers), graph.n_nodes);
  const Val node_in = tape.concat_cols(tape.leaf(attrs), pooled);
  out.dv = mlp_on_tape(tape, leaves.subspan(2 * edge_layers), node_layers, node_in);
  return out;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const ModelConfig& c = ckpt.params.config;
  std::string out = "{\n  \"format_version\": 1,\n";
  out += "  \"config\": {\"dim\": " + std::to_string(c.dim);
  out += ", \"message_dim\": " + std::to_string(c.message_dim);
  out += ", \"hidden_width\": " + std::to_string(c.hidden_width);
  out += ", \"hidden_layers\": " + std::to_string(c.hidden_layers) + "},\n";
  out += "  \"seed\": " + std::to_string(ckpt.seed) + ",\n";
  out += "  \"train_steps\": " + std::to_string(ckpt.train_steps) + ",\n";

  auto dump_mlp = [&out](const char* name, const MlpParams& mlp) {
    out += std::string("  \"") + name + "\": [\n";
    for (std::size_t i = 0; i < mlp.weights.size(); ++i) {
      out += "    {\"rows\": " + std::to_string(mlp.weights[i].rows);
      out += ", \"cols\": " + std::to_string(mlp.weights[i].cols);
      out += ", \"weight\": ";
      append_array(out, mlp.weights[i].data);
      out += ", \"bias\": ";
      append_array(out, mlp.biases[i].data);
      out += i + 1 < mlp.weights.size() ? "},\n" : "}\n";
    }
    out += "  ]";
  };
  dump_mlp("edge_mlp", ckpt.params.edge_mlp);
  out += ",\n";
  dump_mlp("node_mlp", ckpt.params.node_mlp);
  out += "\n}\n";

  auto file = detail::open_out(path);
  file << out;
  if (!file) throw IoError("failed writing checkpoint '" + path + "'");
}

namespace {

MlpParams mlp_from_json(const json& layers) {
  MlpParams mlp;
  for (const auto& layer : layers) {
    const auto rows = layer.at("rows").get<std::size_t>();
    const auto cols = layer.at("cols").get<std::size_t>();
    std::vector<double> w = layer.at("weight").get<std::vector<double>>();
    std::vector<double> b = layer.at("bias").get<std::vector<double>>();
    if (b.size() != cols) throw IoError("checkpoint: bias length mismatch");
    mlp.weights.emplace_back(rows, cols, std::move(w));
    mlp.biases.emplace_back(1, cols, std::move(b));
  }
  return mlp;
}

}  // namespace

Checkpoint load_checkpoint(const std::string& path) {
  auto in = detail::open_in(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("checkpoint '" + path + "' is not valid JSON: " + e.what());
  }

  try {
    Checkpoint ckpt;
    const auto& c = j.at("config");
    ckpt.params.config.dim = c.at("dim").get<int>();
    ckpt.params.config.message_dim = c.at("message_dim").get<int>();
    ckpt.params.config.hidden_width = c.at("hidden_width").get<int>();
    ckpt.params.config.hidden_layers = c.at("hidden_layers").get<int>();
    ckpt.params.config.validate();
    ckpt.seed = j.at("seed").get<std::uint64_t>();
    ckpt.train_steps = j.at("train_steps").get<std::uint64_t>();
    ckpt.params.edge_mlp = mlp_from_json(j.at("edge_mlp"));
    ckpt.params.node_mlp = mlp_from_json(j.at("node_mlp"));

    // Layer shapes must line up with the config.
    const auto check = [](const MlpParams& mlp, int in, int hidden, int n_hidden, int out) {
      if (mlp.weights.size() != static_cast<std::size_t>(n_hidden) + 1) {
        throw IoError("checkpoint: layer count mismatch");
      }
      int prev = in;
      for (std::size_t i = 0; i < mlp.weights.size(); ++i) {
        const int next = i + 1 == mlp.weights.size() ? out : hidden;
        if (mlp.weights[i].rows != static_cast<std::size_t>(prev) ||
            mlp.weights[i].cols != static_cast<std::size_t>(next)) {
          throw IoError("checkpoint: layer shape mismatch");
        }
        prev = next;
      }
    };
    const ModelConfig& mc = ckpt.params.config;
    check(ckpt.params.edge_mlp, 2 * mc.node_attr_size(), mc.hidden_width,
          mc.hidden_layers, mc.message_dim);
    check(ckpt.params.node_mlp, mc.node_attr_size() + mc.message_dim, mc.hidden_width,
          mc.hidden_layers, mc.dim);
    return ckpt;
  } catch (const json::exception& e) {
    throw IoError("checkpoint '" + path + "': " + e.what());
  }
}

}  // namespace symgn
