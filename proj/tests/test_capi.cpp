// Exercises the shared-library surface end to end: generate -> save/load ->
// train -> checkpoint -> messages -> linear fit -> symbolic regression ->
// generalization sweep, plus the error-code contract.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>

#include "symgn.h"

namespace {

std::string temp_file(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

struct Paths {
  std::string dataset = temp_file("symgn_capi_dataset.jsonl");
  std::string checkpoint = temp_file("symgn_capi_ckpt.json");
  std::string loss = temp_file("symgn_capi_loss.csv");
  std::string messages = temp_file("symgn_capi_messages.csv");
  std::string report = temp_file("symgn_capi_report.csv");
  std::string front = temp_file("symgn_capi_front.csv");
  std::string sweep = temp_file("symgn_capi_sweep.csv");

  ~Paths() {
    for (const auto* p : {&dataset, &checkpoint, &loss, &messages, &report, &front,
                          &sweep}) {
      std::remove(p->c_str());
    }
  }
};

}  // namespace

TEST_CASE("c api: full pipeline on a tiny run") {
  Paths paths;

  symgn_sim_options sim;
  symgn_sim_options_init(&sim);
  sim.experiment = "r2-2d";
  sim.n_bodies = 3;
  sim.n_sims = 12;
  sim.n_steps = 10;
  sim.seed = 5;

  symgn_dataset* dataset = nullptr;
  REQUIRE(symgn_dataset_generate(&sim, &dataset) == SYMGN_OK);
  CHECK(symgn_dataset_record_count(dataset) > 0);
  CHECK(symgn_dataset_dim(dataset) == 2);
  double baseline = 0.0;
  CHECK(symgn_dataset_mean_abs_target(dataset, &baseline) == SYMGN_OK);
  CHECK(baseline > 0.0);

  REQUIRE(symgn_dataset_save(dataset, paths.dataset.c_str()) == SYMGN_OK);
  symgn_dataset* loaded = nullptr;
  REQUIRE(symgn_dataset_load(paths.dataset.c_str(), &loaded) == SYMGN_OK);
  CHECK(symgn_dataset_record_count(loaded) == symgn_dataset_record_count(dataset));

  symgn_train_options train;
  symgn_train_options_init(&train);
  train.hidden_width = 16;
  train.batch_size = 4;
  train.total_steps = 30;
  train.eval_interval = 10;
  train.seed = 6;

  symgn_model* model = nullptr;
  REQUIRE(symgn_train(loaded, &train, paths.loss.c_str(), &model) == SYMGN_OK);
  CHECK(symgn_model_dim(model) == 2);
  CHECK(symgn_model_message_dim(model) == 2);
  CHECK(std::filesystem::exists(paths.loss));

  double l1 = 0.0;
  REQUIRE(symgn_evaluate(model, loaded, &l1) == SYMGN_OK);
  CHECK(l1 > 0.0);

  REQUIRE(symgn_model_save(model, paths.checkpoint.c_str()) == SYMGN_OK);
  symgn_model* reloaded = nullptr;
  REQUIRE(symgn_model_load(paths.checkpoint.c_str(), &reloaded) == SYMGN_OK);
  double l1_again = 0.0;
  REQUIRE(symgn_evaluate(reloaded, loaded, &l1_again) == SYMGN_OK);
  CHECK(l1 == l1_again);

  REQUIRE(symgn_record_messages(model, loaded, 500, paths.messages.c_str()) ==
          SYMGN_OK);
  double min_r2 = 0.0;
  REQUIRE(symgn_linear_fit(paths.messages.c_str(), paths.report.c_str(), &min_r2) ==
          SYMGN_OK);
  CHECK(min_r2 <= 1.0);

  symgn_gp_options gp;
  symgn_gp_options_init(&gp);
  gp.population = 64;
  gp.generations = 5;
  gp.seed = 7;
  char selected[1024];
  double mse = 0.0;
  int32_t complexity = 0;
  REQUIRE(symgn_symreg(paths.messages.c_str(), 0, &gp, paths.front.c_str(), selected,
                       sizeof(selected), &mse, &complexity) == SYMGN_OK);
  CHECK(std::strlen(selected) > 0);
  CHECK(complexity >= 1);

  // Same seed, same selected expression.
  char selected_again[1024];
  REQUIRE(symgn_symreg(paths.messages.c_str(), 0, &gp, nullptr, selected_again,
                       sizeof(selected_again), nullptr, nullptr) == SYMGN_OK);
  CHECK(std::string(selected) == selected_again);

  const char* ckpts[] = {paths.checkpoint.c_str()};
  const int32_t counts[] = {3, 4};
  REQUIRE(symgn_generalize(ckpts, 1, "r2-2d", counts, 2, 2, 4, 8,
                           paths.sweep.c_str()) == SYMGN_OK);
  CHECK(std::filesystem::exists(paths.sweep));

  symgn_model_free(reloaded);
  symgn_model_free(model);
  symgn_dataset_free(loaded);
  symgn_dataset_free(dataset);
}

TEST_CASE("c api: error codes and last_error") {
  symgn_dataset* dataset = nullptr;
  CHECK(symgn_dataset_generate(nullptr, &dataset) == SYMGN_ERROR_INVALID_ARGUMENT);

  symgn_sim_options sim;
  symgn_sim_options_init(&sim);
  sim.experiment = "not-an-experiment";
  CHECK(symgn_dataset_generate(&sim, &dataset) == SYMGN_ERROR_INVALID_ARGUMENT);
  CHECK(std::string(symgn_last_error()).find("not-an-experiment") != std::string::npos);

  CHECK(symgn_dataset_load("/nonexistent/path.jsonl", &dataset) == SYMGN_ERROR_IO);
  CHECK(std::string(symgn_last_error()).find("/nonexistent/path.jsonl") !=
        std::string::npos);

  symgn_model* model = nullptr;
  CHECK(symgn_model_load("/nonexistent/ckpt.json", &model) == SYMGN_ERROR_IO);

  // Success clears the message.
  symgn_sim_options_init(&sim);
  sim.n_sims = 1;
  sim.n_steps = 1;
  REQUIRE(symgn_dataset_generate(&sim, &dataset) == SYMGN_OK);
  CHECK(std::string(symgn_last_error()).empty());

  double out = 0.0;
  CHECK(symgn_dataset_mean_abs_target(nullptr, &out) == SYMGN_ERROR_INVALID_ARGUMENT);
  CHECK(symgn_dataset_record_count(nullptr) == -1);

  symgn_gp_options gp;
  symgn_gp_options_init(&gp);
  char buf[8];
  CHECK(symgn_symreg("/nonexistent/messages.csv", 0, &gp, nullptr, buf, sizeof(buf),
                     nullptr, nullptr) == SYMGN_ERROR_IO);

  symgn_dataset_free(dataset);
  symgn_dataset_free(nullptr);  // free of null is a no-op
  symgn_model_free(nullptr);
}
