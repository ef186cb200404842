// Experiment driver: simulate -> train -> analyze -> symreg -> generalize.
// Links the public C API only. Exit codes: 0 success, 1 runtime failure,
// 2 usage or config error.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "symgn.h"

namespace fs = std::filesystem;

namespace {

// Per-stage seeds are the master seed plus a fixed offset, so one integer
// reproduces a whole pipeline run.
constexpr std::uint64_t kSeedOffsetSimulate = 1;
constexpr std::uint64_t kSeedOffsetTrain = 2;
constexpr std::uint64_t kSeedOffsetSymreg = 3;
constexpr std::uint64_t kSeedOffsetGeneralize = 4;

int exit_code_for(symgn_status status) {
  return status == SYMGN_ERROR_INVALID_ARGUMENT ? 2 : 1;
}

int fail(symgn_status status) {
  std::cerr << "error: " << symgn_last_error() << "\n";
  return exit_code_for(status);
}

std::string ensure_out_dir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {
    std::cerr << "error: cannot create output directory '" << out
              << "': " << ec.message() << "\n";
    std::exit(2);
  }
  return (fs::path(out) / "").string();
}

void echo_file(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) std::cout << "  " << line << "\n";
}

struct CommonOpts {
  std::string out = ".";
  std::uint64_t seed = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--out", opts.out, "Output directory")->capture_default_str();
  cmd->add_option("--seed", opts.seed, "Master seed; stage seeds derive from it")
      ->capture_default_str();
  cmd->fallthrough();  // lets `symgn <cmd> --config FILE` reach the app option
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "symgn: train bottlenecked graph networks on simulated n-body and spring\n"
      "systems, verify that learned messages are linear in the true forces, and\n"
      "recover symbolic force laws from the message function."};
  app.require_subcommand(1);
  app.set_config("--config", "", "Config file (INI; sections per subcommand)");
  app.get_config_formatter_base()->comment('#');

  // ---------------- simulate ----------------
  auto* sim = app.add_subcommand("simulate", "Generate a trajectory dataset");
  CommonOpts sim_common;
  std::string sim_experiment = "r2-2d";
  int sim_bodies = 0;
  std::int64_t sim_sims = 100, sim_steps = 100;
  sim->add_option("--experiment", sim_experiment,
                  "One of r1-2d, r2-2d, r2-3d, string-2d")
      ->capture_default_str();
  sim->add_option("--bodies", sim_bodies, "Override the experiment body count");
  sim->add_option("--sims", sim_sims, "Number of simulations")->capture_default_str();
  sim->add_option("--steps", sim_steps, "Steps per simulation")->capture_default_str();
  add_common(sim, sim_common);

  // ---------------- train ----------------
  auto* train = app.add_subcommand("train", "Train a graph network on a dataset");
  CommonOpts train_common;
  std::string train_dataset;
  std::string train_name = "model";
  symgn_train_options train_opts;
  symgn_train_options_init(&train_opts);
  train->add_option("--dataset", train_dataset, "Dataset file")->required();
  train->add_option("--name", train_name, "Basename for checkpoint and loss CSV")
      ->capture_default_str();
  train->add_option("--message-dim", train_opts.message_dim, "Message vector length")
      ->capture_default_str();
  train->add_option("--width", train_opts.hidden_width, "Hidden layer width")
      ->capture_default_str();
  train->add_option("--layers", train_opts.hidden_layers, "Hidden layer count")
      ->capture_default_str();
  train->add_option("--lr", train_opts.learning_rate, "Adam learning rate")
      ->capture_default_str();
  train->add_option("--batch", train_opts.batch_size, "Graphs per batch")
      ->capture_default_str();
  train->add_option("--steps", train_opts.total_steps, "Optimizer steps")
      ->capture_default_str();
  train->add_option("--eval-interval", train_opts.eval_interval,
                    "Steps between loss-curve points")
      ->capture_default_str();
  add_common(train, train_common);

  // ---------------- analyze ----------------
  auto* analyze = app.add_subcommand(
      "analyze", "Record messages and fit them linearly to the true forces");
  CommonOpts analyze_common;
  std::string analyze_checkpoint, analyze_dataset;
  std::int64_t analyze_max_rows = 100000;
  analyze->add_option("--checkpoint", analyze_checkpoint, "Model checkpoint")->required();
  analyze->add_option("--dataset", analyze_dataset, "Dataset file")->required();
  analyze->add_option("--max-rows", analyze_max_rows, "Edge rows to record")
      ->capture_default_str();
  add_common(analyze, analyze_common);

  // ---------------- symreg ----------------
  auto* symreg = app.add_subcommand(
      "symreg", "Fit algebraic expressions to one message component");
  CommonOpts symreg_common;
  std::string symreg_messages;
  std::int32_t symreg_component = 0;
  symgn_gp_options gp_opts;
  symgn_gp_options_init(&gp_opts);
  symreg->add_option("--messages", symreg_messages, "Message CSV from analyze")
      ->required();
  symreg->add_option("--component", symreg_component, "Message component index")
      ->capture_default_str();
  symreg->add_option("--population", gp_opts.population, "GP population")
      ->capture_default_str();
  symreg->add_option("--generations", gp_opts.generations, "GP generations")
      ->capture_default_str();
  symreg->add_option("--tournament", gp_opts.tournament, "Tournament size")
      ->capture_default_str();
  symreg->add_option("--crossover-prob", gp_opts.crossover_prob, "Crossover probability")
      ->capture_default_str();
  symreg->add_option("--mutation-prob", gp_opts.mutation_prob, "Mutation probability")
      ->capture_default_str();
  symreg->add_option("--max-depth", gp_opts.max_depth, "Expression depth cap")
      ->capture_default_str();
  symreg->add_option("--const-opt-iters", gp_opts.const_opt_iters,
                     "Constant-optimization passes per offspring")
      ->capture_default_str();
  symreg->add_option("--parsimony", gp_opts.parsimony, "Complexity penalty in fitness")
      ->capture_default_str();
  add_common(symreg, symreg_common);

  // ---------------- generalize ----------------
  auto* gen = app.add_subcommand(
      "generalize", "Evaluate checkpoints across body counts with shared seeds");
  CommonOpts gen_common;
  std::vector<std::string> gen_checkpoints;
  std::vector<std::int32_t> gen_bodies = {4, 6, 8, 12};
  std::string gen_experiment = "r2-3d";
  std::int64_t gen_sims = 20, gen_steps = 50;
  gen->add_option("--checkpoint", gen_checkpoints, "Checkpoint file (repeatable)")
      ->required();
  gen->add_option("--bodies", gen_bodies, "Body counts to evaluate at")
      ->capture_default_str();
  gen->add_option("--experiment", gen_experiment, "Environment preset")
      ->capture_default_str();
  gen->add_option("--sims", gen_sims, "Evaluation simulations per body count")
      ->capture_default_str();
  gen->add_option("--steps", gen_steps, "Steps per evaluation simulation")
      ->capture_default_str();
  add_common(gen, gen_common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (sim->parsed()) {
    const std::string dir = ensure_out_dir(sim_common.out);
    symgn_sim_options opts;
    symgn_sim_options_init(&opts);
    opts.experiment = sim_experiment.c_str();
    opts.n_bodies = sim_bodies;
    opts.n_sims = sim_sims;
    opts.n_steps = sim_steps;
    opts.seed = sim_common.seed + kSeedOffsetSimulate;

    symgn_dataset* dataset = nullptr;
    if (auto s = symgn_dataset_generate(&opts, &dataset); s != SYMGN_OK) return fail(s);
    const std::string path = dir + sim_experiment + ".dataset.jsonl";
    if (auto s = symgn_dataset_save(dataset, path.c_str()); s != SYMGN_OK) {
      symgn_dataset_free(dataset);
      return fail(s);
    }
    double baseline = 0.0;
    if (auto s = symgn_dataset_mean_abs_target(dataset, &baseline); s != SYMGN_OK) {
      symgn_dataset_free(dataset);
      return fail(s);
    }
    std::cout << "dataset: " << path << "\n"
              << "records: " << symgn_dataset_record_count(dataset) << "\n"
              << "baseline mean |dv|: " << baseline << "\n";
    symgn_dataset_free(dataset);
    return 0;
  }

  if (train->parsed()) {
    const std::string dir = ensure_out_dir(train_common.out);
    symgn_dataset* dataset = nullptr;
    if (auto s = symgn_dataset_load(train_dataset.c_str(), &dataset); s != SYMGN_OK) {
      return fail(s);
    }
    train_opts.seed = train_common.seed + kSeedOffsetTrain;
    const std::string loss_path = dir + train_name + ".loss.csv";
    const std::string ckpt_path = dir + train_name + ".checkpoint.json";

    symgn_model* model = nullptr;
    auto s = symgn_train(dataset, &train_opts, loss_path.c_str(), &model);
    if (s != SYMGN_OK) {
      symgn_dataset_free(dataset);
      return fail(s);
    }
    s = symgn_model_save(model, ckpt_path.c_str());
    if (s != SYMGN_OK) {
      symgn_model_free(model);
      symgn_dataset_free(dataset);
      return fail(s);
    }
    double full_l1 = 0.0, baseline = 0.0;
    symgn_evaluate(model, dataset, &full_l1);
    symgn_dataset_mean_abs_target(dataset, &baseline);
    std::cout << "checkpoint: " << ckpt_path << "\n"
              << "loss curve: " << loss_path << "\n"
              << "final L1 on dataset: " << full_l1 << " (zero-predictor baseline "
              << baseline << ")\n";
    symgn_model_free(model);
    symgn_dataset_free(dataset);
    return 0;
  }

  if (analyze->parsed()) {
    const std::string dir = ensure_out_dir(analyze_common.out);
    symgn_model* model = nullptr;
    if (auto s = symgn_model_load(analyze_checkpoint.c_str(), &model); s != SYMGN_OK) {
      return fail(s);
    }
    symgn_dataset* dataset = nullptr;
    if (auto s = symgn_dataset_load(analyze_dataset.c_str(), &dataset); s != SYMGN_OK) {
      symgn_model_free(model);
      return fail(s);
    }
    const std::string messages_path = dir + "messages.csv";
    const std::string report_path = dir + "linear_fit.csv";
    auto s = symgn_record_messages(model, dataset, analyze_max_rows,
                                   messages_path.c_str());
    if (s == SYMGN_OK) {
      double min_r2 = 0.0;
      s = symgn_linear_fit(messages_path.c_str(), report_path.c_str(), &min_r2);
      if (s == SYMGN_OK) {
        std::cout << "messages: " << messages_path << "\n"
                  << "fit report: " << report_path << "\n";
        echo_file(report_path);
        std::cout << "min R^2 across components: " << min_r2 << "\n";
      }
    }
    symgn_dataset_free(dataset);
    symgn_model_free(model);
    return s == SYMGN_OK ? 0 : fail(s);
  }

  if (symreg->parsed()) {
    const std::string dir = ensure_out_dir(symreg_common.out);
    gp_opts.seed = symreg_common.seed + kSeedOffsetSymreg;
    const std::string front_path = dir + "front.csv";
    char selected[4096];
    double mse = 0.0;
    std::int32_t complexity = 0;
    auto s = symgn_symreg(symreg_messages.c_str(), symreg_component, &gp_opts,
                          front_path.c_str(), selected, sizeof(selected), &mse,
                          &complexity);
    if (s != SYMGN_OK) return fail(s);
    const std::string selected_path = dir + "selected.txt";
    std::ofstream out(selected_path);
    out << selected << "\n";
    std::cout << "front: " << front_path << "\n"
              << "selected (complexity " << complexity << ", mse " << mse
              << "): " << selected << "\n"
              << "saved to: " << selected_path << "\n";
    return 0;
  }

  if (gen->parsed()) {
    const std::string dir = ensure_out_dir(gen_common.out);
    std::vector<const char*> paths;
    paths.reserve(gen_checkpoints.size());
    for (const auto& p : gen_checkpoints) paths.push_back(p.c_str());
    const std::string out_path = dir + "generalization.csv";
    auto s = symgn_generalize(paths.data(), static_cast<std::int32_t>(paths.size()),
                              gen_experiment.c_str(), gen_bodies.data(),
                              static_cast<std::int32_t>(gen_bodies.size()), gen_sims,
                              gen_steps, gen_common.seed + kSeedOffsetGeneralize,
                              out_path.c_str());
    if (s != SYMGN_OK) return fail(s);
    std::cout << "sweep: " << out_path << "\n";
    echo_file(out_path);
    return 0;
  }

  return 2;
}
