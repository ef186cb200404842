#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "symgn/trainer.hpp"

namespace symgn {

/// One row per recorded edge: pair features (delta components of x_s - x_r,
/// r, receiver mass m1, sender mass m2), the message vector and the true
/// per-receiver-mass force. Column layout is fixed: features, e0..e{L-1},
/// then f components.
struct MessageTable {
  int dim = 2;
  int message_dim = 2;
  std::vector<std::string> columns;
  Tensor values;  // n_rows x columns.size()

  std::size_t feature_count() const { return static_cast<std::size_t>(dim) + 3; }
  std::size_t message_offset() const { return feature_count(); }
  std::size_t force_offset() const { return feature_count() + message_dim; }
};

/// Runs the model over the dataset and keeps up to max_rows edges, sampled at
/// a fixed stride over the record-major edge sequence. Pure function of its
/// arguments.
MessageTable record_messages(const GNParams& params, const TrajectoryDataset& data,
                             std::size_t max_rows);

struct ComponentFit {
  std::vector<double> coefficients;  // one per force component
  double intercept = 0.0;
  double r_squared = 0.0;
  double residual_rms = 0.0;
};

struct LinearFitReport {
  std::vector<ComponentFit> components;  // one per message component
};

/// Ordinary least squares of each message component on [f_1..f_D, 1] via
/// pivoted normal equations. R^2 is reported as 0 when the component is
/// constant (SS_tot = 0); a rank-deficient design matrix raises
/// DegenerateFitError.
LinearFitReport linear_fit(const MessageTable& table);

void save_message_table(const MessageTable& table, const std::string& path);
MessageTable load_message_table(const std::string& path);
void save_fit_report(const LinearFitReport& report, const std::string& path);

struct SweepResult {
  std::vector<std::string> model_names;
  std::vector<int> body_counts;
  Tensor losses;  // models x counts
};

/// Evaluates every model on freshly generated datasets with the given body
/// counts. The dataset seed for a column depends only on (seed, body count),
/// so all models in a column see bit-identical records.
SweepResult generalization_sweep(const std::vector<GNParams>& models,
                                 const std::vector<std::string>& model_names,
                                 const EnvConfig& base_env,
                                 const std::vector<int>& body_counts,
                                 std::size_t eval_sims, std::size_t eval_steps,
                                 std::uint64_t seed);

void save_sweep(const SweepResult& sweep, const std::string& path);

}  // namespace symgn
