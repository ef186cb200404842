#include "symgn/dataset.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "io_util.hpp"
#include "symgn/errors.hpp"

namespace symgn {

using nlohmann::json;
using detail::append_array;
using detail::g17;

namespace {

constexpr int kFormatVersion = 1;
constexpr int kMaxDrawRetries = 64;

json env_to_json(const EnvConfig& env) {
  json j;
  j["law"] = force_law_name(env.law);
  j["dim"] = env.dim;
  j["n_bodies"] = env.n_bodies;
  j["dt"] = env.dt;
  j["min_separation"] = env.min_separation;
  if (env.is_spring()) {
    j["gravity"] = {env.gravity[0], env.gravity[1]};
    j["spring_k"] = env.spring_k;
  }
  return j;
}

EnvConfig env_from_json(const json& j) {
  EnvConfig env;
  env.law = parse_force_law(j.at("law").get<std::string>());
  env.dim = j.at("dim").get<int>();
  env.n_bodies = j.at("n_bodies").get<int>();
  env.dt = j.at("dt").get<double>();
  env.min_separation = j.at("min_separation").get<double>();
  if (j.contains("gravity")) {
    const auto g = j.at("gravity");
    for (std::size_t c = 0; c < g.size() && c < 3; ++c) env.gravity[c] = g[c];
  }
  if (j.contains("spring_k")) env.spring_k = j.at("spring_k").get<double>();
  env.validate();
  return env;
}

// Metadata and records are emitted by hand so every double carries 17
// significant digits and reruns are byte-identical.
std::string metadata_line(const TrajectoryDataset& d) {
  std::string out = "{\"format_version\":";
  out += std::to_string(kFormatVersion);
  out += ",\"env\":{\"law\":\"";
  out += force_law_name(d.env.law);
  out += "\",\"dim\":" + std::to_string(d.env.dim);
  out += ",\"n_bodies\":" + std::to_string(d.env.n_bodies);
  out += ",\"dt\":" + g17(d.env.dt);
  out += ",\"min_separation\":" + g17(d.env.min_separation);
  if (d.env.is_spring()) {
    out += ",\"gravity\":[" + g17(d.env.gravity[0]) + "," + g17(d.env.gravity[1]) + "]";
    out += ",\"spring_k\":" + g17(d.env.spring_k);
  }
  out += "},\"seed\":" + std::to_string(d.seed);
  out += ",\"n_sims\":" + std::to_string(d.n_sims);
  out += ",\"n_steps\":" + std::to_string(d.n_steps);
  out += ",\"n_records\":" + std::to_string(d.records.size());
  out += "}";
  return out;
}

std::string record_line(const TrajectoryRecord& rec) {
  std::string out = "{\"sim\":";
  out += std::to_string(rec.sim);
  out += ",\"step\":" + std::to_string(rec.step);
  out += ",\"masses\":";
  append_array(out, rec.state.masses);
  out += ",\"positions\":";
  append_array(out, rec.state.positions.data);
  out += ",\"velocities\":";
  append_array(out, rec.state.velocities.data);
  out += ",\"dv\":";
  append_array(out, rec.dv.data);
  out += ",\"fixed\":[";
  for (std::size_t i = 0; i < rec.state.fixed.size(); ++i) {
    if (i) out += ',';
    out += rec.state.fixed[i] ? '1' : '0';
  }
  out += "]}";
  return out;
}

std::vector<double> doubles_from(const json& j, const char* key, std::size_t expect) {
  const auto& arr = j.at(key);
  if (!arr.is_array() || arr.size() != expect) {
    throw IoError(std::string("dataset record: field '") + key + "' must hold " +
                  std::to_string(expect) + " values");
  }
  std::vector<double> out;
  out.reserve(expect);
  for (const auto& v : arr) out.push_back(v.get<double>());
  return out;
}

}  // namespace

double TrajectoryDataset::mean_abs_target() const {
  if (records.empty()) {
    throw std::invalid_argument("mean_abs_target: dataset has no records");
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& rec : records) {
    for (double v : rec.dv.data) sum += std::abs(v);
    count += rec.dv.data.size();
  }
  return sum / static_cast<double>(count);
}

TrajectoryDataset generate_dataset(const EnvConfig& env, std::size_t n_sims,
                                   std::size_t n_steps, std::uint64_t seed) {
  env.validate();
  if (n_sims < 1 || n_steps < 1) {
    throw std::invalid_argument("generate_dataset: n_sims and n_steps must be >= 1");
  }

  TrajectoryDataset dataset;
  dataset.env = env;
  dataset.seed = seed;
  dataset.n_sims = n_sims;
  dataset.n_steps = n_steps;
  dataset.records.reserve(n_sims * n_steps);

  for (std::size_t sim = 0; sim < n_sims; ++sim) {
    SystemState state;
    bool accepted = false;
    for (int retry = 0; retry < kMaxDrawRetries; ++retry) {
      Rng rng(derive_seed(seed, sim, static_cast<std::uint64_t>(retry)));
      state = random_state(env, rng);
      if (min_pairwise_distance(env, state) >= env.min_separation) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw std::runtime_error("generate_dataset: no admissible initial state for sim " +
                               std::to_string(sim) + " after " +
                               std::to_string(kMaxDrawRetries) + " draws");
    }

    for (std::size_t t = 0; t < n_steps; ++t) {
      if (min_pairwise_distance(env, state) < env.min_separation) break;  // truncate
      StepResult result = step_with_target(env, state);
      dataset.records.push_back({std::move(state), std::move(result.dv),
                                 static_cast<std::uint32_t>(sim),
                                 static_cast<std::uint32_t>(t)});
      state = std::move(result.next);
    }
  }
  return dataset;
}

void save_dataset(const TrajectoryDataset& dataset, std::ostream& out) {
  out << metadata_line(dataset) << '\n';
  for (const auto& rec : dataset.records) out << record_line(rec) << '\n';
  if (!out) throw IoError("failed writing dataset stream");
}

void save_dataset(const TrajectoryDataset& dataset, const std::string& path) {
  auto out = detail::open_out(path);
  save_dataset(dataset, out);
}

TrajectoryDataset load_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("dataset stream is empty");

  json meta;
  try {
    meta = json::parse(line);
  } catch (const json::exception& e) {
    throw IoError(std::string("dataset metadata is not valid JSON: ") + e.what());
  }

  TrajectoryDataset dataset;
  try {
    const int version = meta.at("format_version").get<int>();
    if (version != kFormatVersion) {
      throw IoError("unsupported dataset format version " + std::to_string(version));
    }
    dataset.env = env_from_json(meta.at("env"));
    dataset.seed = meta.at("seed").get<std::uint64_t>();
    dataset.n_sims = meta.at("n_sims").get<std::size_t>();
    dataset.n_steps = meta.at("n_steps").get<std::size_t>();
  } catch (const json::exception& e) {
    throw IoError(std::string("dataset metadata: ") + e.what());
  }

  const auto n = static_cast<std::size_t>(dataset.env.n_bodies);
  const auto dim = static_cast<std::size_t>(dataset.env.dim);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      TrajectoryRecord rec;
      rec.sim = j.at("sim").get<std::uint32_t>();
      rec.step = j.at("step").get<std::uint32_t>();
      rec.state.masses = doubles_from(j, "masses", n);
      rec.state.positions = Tensor(n, dim, doubles_from(j, "positions", n * dim));
      rec.state.velocities = Tensor(n, dim, doubles_from(j, "velocities", n * dim));
      rec.dv = Tensor(n, dim, doubles_from(j, "dv", n * dim));
      const auto& fixed = j.at("fixed");
      if (fixed.size() != n) throw IoError("dataset record: bad 'fixed' length");
      rec.state.fixed.reserve(n);
      for (const auto& f : fixed) {
        rec.state.fixed.push_back(f.get<int>() ? 1 : 0);
      }
      rec.state.validate(dataset.env);
      dataset.records.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw IoError("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return dataset;
}

TrajectoryDataset load_dataset(const std::string& path) {
  auto in = detail::open_in(path);
  try {
    return load_dataset(in);
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

}  // namespace symgn
