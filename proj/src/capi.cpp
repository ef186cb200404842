// extern "C" bridge: opaque handles over the core types, exceptions mapped to
// status codes with a thread-local message.

#include "symgn.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <string>
#include <vector>

#include "symgn/analysis.hpp"
#include "symgn/dataset.hpp"
#include "symgn/errors.hpp"
#include "symgn/graph_network.hpp"
#include "symgn/symreg.hpp"
#include "symgn/trainer.hpp"

struct symgn_dataset {
  symgn::TrajectoryDataset data;
};

struct symgn_model {
  symgn::Checkpoint ckpt;
};

namespace {

thread_local std::string g_last_error;

symgn_status fail(symgn_status code, const char* what) {
  g_last_error = what;
  return code;
}

/// Runs the body and converts exceptions into status codes.
template <typename Fn>
symgn_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SYMGN_OK;
  } catch (const symgn::SingularityError& e) {
    return fail(SYMGN_ERROR_SINGULARITY, e.what());
  } catch (const symgn::TopologyError& e) {
    return fail(SYMGN_ERROR_TOPOLOGY, e.what());
  } catch (const symgn::DegenerateFitError& e) {
    return fail(SYMGN_ERROR_NUMERIC, e.what());
  } catch (const symgn::DivergenceError& e) {
    return fail(SYMGN_ERROR_NUMERIC, e.what());
  } catch (const symgn::IoError& e) {
    return fail(SYMGN_ERROR_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(SYMGN_ERROR_INVALID_ARGUMENT, e.what());
  } catch (const std::out_of_range& e) {
    return fail(SYMGN_ERROR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(SYMGN_ERROR_INTERNAL, e.what());
  } catch (...) {
    return fail(SYMGN_ERROR_INTERNAL, "unknown error");
  }
}

symgn_status require(bool ok, const char* what) {
  return ok ? SYMGN_OK : fail(SYMGN_ERROR_INVALID_ARGUMENT, what);
}

}  // namespace

extern "C" {

const char* symgn_last_error(void) { return g_last_error.c_str(); }

/* ------------------------------------------------------------------ */

void symgn_sim_options_init(symgn_sim_options* opts) {
  if (!opts) return;
  opts->experiment = "r2-2d";
  opts->n_bodies = 0;
  opts->n_sims = 100;
  opts->n_steps = 100;
  opts->seed = 1;
}

symgn_status symgn_dataset_generate(const symgn_sim_options* opts,
                                    symgn_dataset** out) {
  if (auto s = require(opts && out && opts->experiment, "null argument"); s != SYMGN_OK)
    return s;
  return guarded([&] {
    symgn::EnvConfig env = symgn::experiment_env(opts->experiment);
    if (opts->n_bodies > 0) env.n_bodies = opts->n_bodies;
    if (opts->n_sims < 1 || opts->n_steps < 1) {
      throw std::invalid_argument("n_sims and n_steps must be >= 1");
    }
    auto handle = new symgn_dataset{symgn::generate_dataset(
        env, static_cast<std::size_t>(opts->n_sims),
        static_cast<std::size_t>(opts->n_steps), opts->seed)};
    *out = handle;
  });
}

symgn_status symgn_dataset_load(const char* path, symgn_dataset** out) {
  if (auto s = require(path && out, "null argument"); s != SYMGN_OK) return s;
  return guarded([&] { *out = new symgn_dataset{symgn::load_dataset(path)}; });
}

symgn_status symgn_dataset_save(const symgn_dataset* dataset, const char* path) {
  if (auto s = require(dataset && path, "null argument"); s != SYMGN_OK) return s;
  return guarded([&] { symgn::save_dataset(dataset->data, path); });
}

int64_t symgn_dataset_record_count(const symgn_dataset* dataset) {
  return dataset ? static_cast<int64_t>(dataset->data.records.size()) : -1;
}

int32_t symgn_dataset_dim(const symgn_dataset* dataset) {
  return dataset ? dataset->data.env.dim : -1;
}

symgn_status symgn_dataset_mean_abs_target(const symgn_dataset* dataset, double* out) {
  if (auto s = require(dataset && out, "null argument"); s != SYMGN_OK) return s;
  return guarded([&] { *out = dataset->data.mean_abs_target(); });
}

void symgn_dataset_free(symgn_dataset* dataset) { delete dataset; }

/* ------------------------------------------------------------------ */

void symgn_train_options_init(symgn_train_options* opts) {
  if (!opts) return;
  opts->message_dim = 2;
  opts->hidden_width = 128;
  opts->hidden_layers = 3;
  opts->learning_rate = 1e-3;
  opts->adam_beta1 = 0.9;
  opts->adam_beta2 = 0.999;
  opts->adam_epsilon = 1e-8;
  opts->batch_size = 32;
  opts->total_steps = 2000;
  opts->eval_interval = 200;
  opts->seed = 1;
}

symgn_status symgn_train(const symgn_dataset* dataset,
                         const symgn_train_options* opts,
                         const char* loss_csv_path_or_null, symgn_model** out) {
  if (auto s = require(dataset && opts && out, "null argument"); s != SYMGN_OK) return s;
  return guarded([&] {
    symgn::ModelConfig model;
    model.dim = dataset->data.env.dim;
    model.message_dim = opts->message_dim;
    model.hidden_width = opts->hidden_width;
    model.hidden_layers = opts->hidden_layers;

    symgn::TrainConfig config;
    config.learning_rate = opts->learning_rate;
    config.beta1 = opts->adam_beta1;
    config.beta2 = opts->adam_beta2;
    config.epsilon = opts->adam_epsilon;
    config.batch_size = static_cast<std::size_t>(opts->batch_size);
    config.total_steps = static_cast<std::size_t>(opts->total_steps);
    config.eval_interval = static_cast<std::size_t>(opts->eval_interval);
    config.seed = opts->seed;

    symgn::TrainResult result = symgn::train(dataset->data, model, config);
    if (loss_csv_path_or_null) {
      symgn::save_loss_curve(result.curve, loss_csv_path_or_null);
    }
    *out = new symgn_model{
        {std::move(result.params), opts->seed, config.total_steps}};
  });
}

symgn_status symgn_model_load(const char* path, symgn_model** out) {
  if (auto s = require(path && out, "null argument"); s != SYMGN_OK) return s;
  return guarded([&] { *out = new symgn_model{symgn::load_checkpoint(path)}; });
}

symgn_status symgn_model_save(const symgn_model* model, const char* path) {
  if (auto s = require(model && path, "null argument"); s != SYMGN_OK) return s;
  return guarded([&] { symgn::save_checkpoint(model->ckpt, path); });
}

int32_t symgn_model_dim(const symgn_model* model) {
  return model ? model->ckpt.params.config.dim : -1;
}

int32_t symgn_model_message_dim(const symgn_model* model) {
  return model ? model->ckpt.params.config.message_dim : -1;
}

symgn_status symgn_evaluate(const symgn_model* model, const symgn_dataset* dataset,
                            double* out) {
  if (auto s = require(model && dataset && out, "null argument"); s != SYMGN_OK)
    return s;
  return guarded([&] { *out = symgn::evaluate(model->ckpt.params, dataset->data); });
}

void symgn_model_free(symgn_model* model) { delete model; }

/* ------------------------------------------------------------------ */

symgn_status symgn_record_messages(const symgn_model* model,
                                   const symgn_dataset* dataset, int64_t max_rows,
                                   const char* messages_csv_path) {
  if (auto s = require(model && dataset && messages_csv_path, "null argument");
      s != SYMGN_OK)
    return s;
  return guarded([&] {
    if (max_rows < 1) throw std::invalid_argument("max_rows must be >= 1");
    const symgn::MessageTable table = symgn::record_messages(
        model->ckpt.params, dataset->data, static_cast<std::size_t>(max_rows));
    symgn::save_message_table(table, messages_csv_path);
  });
}

symgn_status symgn_linear_fit(const char* messages_csv_path,
                              const char* report_csv_path_or_null,
                              double* out_min_r2) {
  if (auto s = require(messages_csv_path != nullptr, "null argument"); s != SYMGN_OK)
    return s;
  return guarded([&] {
    const symgn::MessageTable table = symgn::load_message_table(messages_csv_path);
    const symgn::LinearFitReport report = symgn::linear_fit(table);
    if (report_csv_path_or_null) symgn::save_fit_report(report, report_csv_path_or_null);
    if (out_min_r2) {
      double min_r2 = 1.0;
      for (const auto& fit : report.components) min_r2 = std::min(min_r2, fit.r_squared);
      *out_min_r2 = min_r2;
    }
  });
}

symgn_status symgn_generalize(const char* const* checkpoint_paths,
                              int32_t n_checkpoints, const char* experiment,
                              const int32_t* body_counts, int32_t n_counts,
                              int64_t eval_sims, int64_t eval_steps, uint64_t seed,
                              const char* out_csv_path) {
  if (auto s = require(checkpoint_paths && experiment && body_counts && out_csv_path &&
                           n_checkpoints > 0 && n_counts > 0,
                       "null or empty argument");
      s != SYMGN_OK)
    return s;
  return guarded([&] {
    if (eval_sims < 1 || eval_steps < 1) {
      throw std::invalid_argument("eval_sims and eval_steps must be >= 1");
    }
    std::vector<symgn::GNParams> models;
    std::vector<std::string> names;
    for (int32_t i = 0; i < n_checkpoints; ++i) {
      if (!checkpoint_paths[i]) throw std::invalid_argument("null checkpoint path");
      models.push_back(symgn::load_checkpoint(checkpoint_paths[i]).params);
      names.emplace_back(checkpoint_paths[i]);
    }
    const symgn::EnvConfig env = symgn::experiment_env(experiment);
    const std::vector<int> counts(body_counts, body_counts + n_counts);
    const symgn::SweepResult sweep = symgn::generalization_sweep(
        models, names, env, counts, static_cast<std::size_t>(eval_sims),
        static_cast<std::size_t>(eval_steps), seed);
    symgn::save_sweep(sweep, out_csv_path);
  });
}

/* ------------------------------------------------------------------ */

void symgn_gp_options_init(symgn_gp_options* opts) {
  if (!opts) return;
  opts->population = 1024;
  opts->generations = 160;
  opts->tournament = 6;
  opts->crossover_prob = 0.65;
  opts->mutation_prob = 0.4;
  opts->max_depth = 7;
  opts->const_opt_iters = 1;
  opts->parsimony = 0.0;
  opts->seed = 1;
}

symgn_status symgn_symreg(const char* messages_csv_path, int32_t component,
                          const symgn_gp_options* opts,
                          const char* front_csv_path_or_null, char* selected_buf,
                          size_t selected_buf_size, double* out_mse,
                          int32_t* out_complexity) {
  if (auto s = require(messages_csv_path && opts && selected_buf &&
                           selected_buf_size > 0,
                       "null argument");
      s != SYMGN_OK)
    return s;
  return guarded([&] {
    symgn::GpConfig config;
    config.population = static_cast<std::size_t>(opts->population);
    config.generations = static_cast<std::size_t>(opts->generations);
    config.tournament = opts->tournament;
    config.crossover_prob = opts->crossover_prob;
    config.mutation_prob = opts->mutation_prob;
    config.max_depth = opts->max_depth;
    config.const_opt_iters = opts->const_opt_iters;
    config.parsimony = opts->parsimony;
    config.seed = opts->seed;

    const symgn::RegressionData data =
        symgn::regression_from_csv(messages_csv_path, component);
    const symgn::ParetoFront front = symgn::search(data, config);
    if (front_csv_path_or_null) symgn::save_front_csv(front, front_csv_path_or_null);

    const symgn::Selection best = symgn::select_best(front);
    const std::string text = symgn::to_infix(best.expr);
    if (text.size() + 1 > selected_buf_size) {
      throw std::invalid_argument("selected expression does not fit the buffer (" +
                                  std::to_string(text.size() + 1) + " bytes needed)");
    }
    std::memcpy(selected_buf, text.c_str(), text.size() + 1);
    if (out_mse) *out_mse = best.mse;
    if (out_complexity) *out_complexity = best.complexity;
  });
}

}  // extern "C"
