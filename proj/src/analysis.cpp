#include "symgn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "io_util.hpp"
#include "symgn/errors.hpp"
#include "symgn/random.hpp"

namespace symgn {

namespace {

std::vector<std::string> table_columns(int dim, int message_dim) {
  std::vector<std::string> cols;
  const char* deltas[] = {"dx", "dy", "dz"};
  for (int c = 0; c < dim; ++c) cols.emplace_back(deltas[c]);
  cols.emplace_back("r");
  cols.emplace_back("m1");
  cols.emplace_back("m2");
  for (int c = 0; c < message_dim; ++c) cols.push_back("e" + std::to_string(c));
  const char* forces[] = {"fx", "fy", "fz"};
  for (int c = 0; c < dim; ++c) cols.emplace_back(forces[c]);
  return cols;
}

/// Solve the (D+1)x(D+1) normal equations by Gaussian elimination with
/// partial pivoting. Throws DegenerateFitError on a vanishing pivot.
std::vector<double> solve_normal_equations(std::vector<std::vector<double>> a,
                                           std::vector<double> rhs) {
  const std::size_t n = rhs.size();
  double scale = 0.0;
  for (const auto& row : a) {
    for (double v : row) scale = std::max(scale, std::abs(v));
  }
  const double tiny = std::max(scale, 1.0) * 1e-12;

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) < tiny) {
      throw DegenerateFitError(
          "linear_fit: design matrix is rank deficient (pivot " +
          std::to_string(a[pivot][col]) + " at column " + std::to_string(col) +
          "); the force columns are collinear or constant");
    }
    std::swap(a[col], a[pivot]);
    std::swap(rhs[col], rhs[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t r = n; r-- > 0;) {
    double v = rhs[r];
    for (std::size_t c = r + 1; c < n; ++c) v -= a[r][c] * x[c];
    x[r] = v / a[r][r];
  }
  return x;
}

}  // namespace

MessageTable record_messages(const GNParams& params, const TrajectoryDataset& data,
                             std::size_t max_rows) {
  if (data.records.empty()) {
    throw std::invalid_argument("record_messages: dataset has no records");
  }
  if (params.config.dim != data.env.dim) {
    throw std::invalid_argument("record_messages: model dim does not match dataset");
  }
  if (max_rows < 1) throw std::invalid_argument("record_messages: max_rows must be >= 1");

  const GraphTopology graph = build_graph(data.records[0].state, data.env);
  const std::size_t per_record = graph.n_edges();
  const std::size_t total = per_record * data.records.size();
  const std::size_t kept = std::min(max_rows, total);

  MessageTable table;
  table.dim = data.env.dim;
  table.message_dim = params.config.message_dim;
  table.columns = table_columns(table.dim, table.message_dim);
  table.values = Tensor(kept, table.columns.size());

  const auto dim = static_cast<std::size_t>(table.dim);
  std::size_t cached_record = data.records.size();  // sentinel: nothing cached
  Tensor cached_messages;
  for (std::size_t k = 0; k < kept; ++k) {
    // Fixed-stride sample: evenly spaced global edge indices.
    const std::size_t global = total <= max_rows ? k : k * total / max_rows;
    const std::size_t rec_idx = global / per_record;
    const std::size_t edge = global % per_record;

    const TrajectoryRecord& rec = data.records[rec_idx];
    // Forward once per visited record; global indices are nondecreasing.
    if (cached_record != rec_idx) {
      cached_messages = forward(params, graph, node_attributes(rec.state)).messages;
      cached_record = rec_idx;
    }

    const std::uint32_t r = graph.receivers[edge];
    const std::uint32_t s = graph.senders[edge];
    double* row = table.values.data.data() + k * table.values.cols;
    double r2 = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      row[c] = rec.state.positions(s, c) - rec.state.positions(r, c);
      r2 += row[c] * row[c];
    }
    row[dim] = std::sqrt(r2);
    row[dim + 1] = rec.state.masses[r];
    row[dim + 2] = rec.state.masses[s];
    for (std::size_t c = 0; c < static_cast<std::size_t>(table.message_dim); ++c) {
      row[table.message_offset() + c] = cached_messages(edge, c);
    }
    const auto force = pairwise_force_between(data.env, rec.state, r, s);
    for (std::size_t c = 0; c < dim; ++c) row[table.force_offset() + c] = force[c];
  }
  return table;
}

LinearFitReport linear_fit(const MessageTable& table) {
  const std::size_t n = table.values.rows;
  const auto dim = static_cast<std::size_t>(table.dim);
  if (n < dim + 2) {
    throw std::invalid_argument("linear_fit: need at least dim + 2 rows, have " +
                                std::to_string(n));
  }

  // Design matrix columns: force components then the intercept.
  const std::size_t p = dim + 1;
  std::vector<std::vector<double>> xtx(p, std::vector<double>(p, 0.0));
  std::vector<double> design(p);
  std::vector<std::vector<double>> xty(table.message_dim, std::vector<double>(p, 0.0));

  for (std::size_t i = 0; i < n; ++i) {
    const double* row = table.values.data.data() + i * table.values.cols;
    for (std::size_t c = 0; c < dim; ++c) design[c] = row[table.force_offset() + c];
    design[dim] = 1.0;
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = 0; b <= a; ++b) xtx[a][b] += design[a] * design[b];
      for (int m = 0; m < table.message_dim; ++m) {
        xty[m][a] += design[a] * row[table.message_offset() + m];
      }
    }
  }
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a + 1; b < p; ++b) xtx[a][b] = xtx[b][a];
  }

  LinearFitReport report;
  for (int m = 0; m < table.message_dim; ++m) {
    const std::vector<double> beta = solve_normal_equations(xtx, xty[m]);

    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mean += table.values(i, table.message_offset() + m);
    }
    mean /= static_cast<double>(n);

    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = table.values.data.data() + i * table.values.cols;
      double pred = beta[dim];
      for (std::size_t c = 0; c < dim; ++c) {
        pred += beta[c] * row[table.force_offset() + c];
      }
      const double y = row[table.message_offset() + m];
      ss_res += (y - pred) * (y - pred);
      ss_tot += (y - mean) * (y - mean);
    }

    ComponentFit fit;
    fit.coefficients.assign(beta.begin(), beta.begin() + dim);
    fit.intercept = beta[dim];
    // Constant component: define R^2 = 0 rather than 0/0.
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
    fit.residual_rms = std::sqrt(ss_res / static_cast<double>(n));
    report.components.push_back(std::move(fit));
  }
  return report;
}

void save_message_table(const MessageTable& table, const std::string& path) {
  auto out = detail::open_out(path);
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out << ',';
    out << table.columns[c];
  }
  out << '\n';
  for (std::size_t i = 0; i < table.values.rows; ++i) {
    const double* row = table.values.data.data() + i * table.values.cols;
    for (std::size_t c = 0; c < table.values.cols; ++c) {
      if (c) out << ',';
      out << detail::g17(row[c]);
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing message table '" + path + "'");
}

MessageTable load_message_table(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty message table");

  MessageTable table;
  std::stringstream header(line);
  std::string col;
  while (std::getline(header, col, ',')) table.columns.push_back(col);

  // Recover dim and message_dim from the column names.
  int dim = 0, message_dim = 0;
  for (const auto& name : table.columns) {
    if (name == "dx" || name == "dy" || name == "dz") ++dim;
    if (!name.empty() && name[0] == 'e' &&
        name.find_first_not_of("0123456789", 1) == std::string::npos && name.size() > 1) {
      ++message_dim;
    }
  }
  table.dim = dim;
  table.message_dim = message_dim;
  if (dim < 2 || message_dim < 1 ||
      table.columns.size() != table.feature_count() + message_dim + dim) {
    throw IoError(path + ": unrecognized message table header");
  }

  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t cells = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw IoError(path + ": bad number '" + cell + "' on row " +
                      std::to_string(rows + 2));
      }
      ++cells;
    }
    if (cells != table.columns.size()) {
      throw IoError(path + ": row " + std::to_string(rows + 2) + " has " +
                    std::to_string(cells) + " cells, expected " +
                    std::to_string(table.columns.size()));
    }
    ++rows;
  }
  table.values = Tensor(rows, table.columns.size(), std::move(values));
  return table;
}

void save_fit_report(const LinearFitReport& report, const std::string& path) {
  auto out = detail::open_out(path);
  if (report.components.empty()) throw std::invalid_argument("save_fit_report: empty report");
  const std::size_t dim = report.components[0].coefficients.size();
  out << "component";
  const char* forces[] = {"fx", "fy", "fz"};
  for (std::size_t c = 0; c < dim; ++c) out << ",coef_" << forces[c];
  out << ",intercept,r_squared,residual_rms\n";
  for (std::size_t m = 0; m < report.components.size(); ++m) {
    const ComponentFit& fit = report.components[m];
    out << 'e' << m;
    for (double c : fit.coefficients) out << ',' << detail::g17(c);
    out << ',' << detail::g17(fit.intercept) << ',' << detail::g17(fit.r_squared)
        << ',' << detail::g17(fit.residual_rms) << '\n';
  }
  if (!out) throw IoError("failed writing fit report '" + path + "'");
}

SweepResult generalization_sweep(const std::vector<GNParams>& models,
                                 const std::vector<std::string>& model_names,
                                 const EnvConfig& base_env,
                                 const std::vector<int>& body_counts,
                                 std::size_t eval_sims, std::size_t eval_steps,
                                 std::uint64_t seed) {
  if (models.empty() || body_counts.empty()) {
    throw std::invalid_argument("generalization_sweep: need models and body counts");
  }
  if (model_names.size() != models.size()) {
    throw std::invalid_argument("generalization_sweep: one name per model");
  }
  for (const auto& m : models) {
    if (m.config.dim != base_env.dim) {
      throw std::invalid_argument("generalization_sweep: model dim does not match env");
    }
  }
  for (int n : body_counts) {
    if (n < 2) throw std::invalid_argument("generalization_sweep: body counts must be >= 2");
  }

  SweepResult sweep;
  sweep.model_names = model_names;
  sweep.body_counts = body_counts;
  sweep.losses = Tensor(models.size(), body_counts.size());

  for (std::size_t col = 0; col < body_counts.size(); ++col) {
    EnvConfig env = base_env;
    env.n_bodies = body_counts[col];
    // Column seed depends only on (seed, body count): every model in the
    // column is evaluated on bit-identical records.
    const std::uint64_t column_seed =
        derive_seed(seed, static_cast<std::uint64_t>(body_counts[col]));
    const TrajectoryDataset data = generate_dataset(env, eval_sims, eval_steps, column_seed);
    for (std::size_t row = 0; row < models.size(); ++row) {
      sweep.losses(row, col) = evaluate(models[row], data);
    }
  }
  return sweep;
}

void save_sweep(const SweepResult& sweep, const std::string& path) {
  auto out = detail::open_out(path);
  out << "model";
  for (int n : sweep.body_counts) out << ',' << n;
  out << '\n';
  for (std::size_t row = 0; row < sweep.model_names.size(); ++row) {
    out << sweep.model_names[row];
    for (std::size_t col = 0; col < sweep.body_counts.size(); ++col) {
      out << ',' << detail::g17(sweep.losses(row, col));
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing sweep '" + path + "'");
}

}  // namespace symgn
