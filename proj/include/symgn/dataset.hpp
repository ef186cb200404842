#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "symgn/physics.hpp"

namespace symgn {

struct TrajectoryRecord {
  SystemState state;
  Tensor dv;  // n x dim target velocity update
  std::uint32_t sim = 0;
  std::uint32_t step = 0;
};

/// Supervised snapshots produced by rolling out the simulator.
struct TrajectoryDataset {
  EnvConfig env;
  std::uint64_t seed = 0;
  std::size_t n_sims = 0;  // requested counts, kept as provenance
  std::size_t n_steps = 0;
  std::vector<TrajectoryRecord> records;

  /// Zero-predictor baseline: mean |dv| over records, nodes and components.
  /// Throws std::invalid_argument when there are no records.
  double mean_abs_target() const;
};

/// Deterministic function of its arguments. Per-simulation draws use sub-seeds
/// hashed from (seed, sim index, retry); a rollout is truncated at the first
/// state that violates env.min_separation, and a draw whose initial state
/// already violates it is re-sampled with the retry counter bumped.
TrajectoryDataset generate_dataset(const EnvConfig& env, std::size_t n_sims,
                                   std::size_t n_steps, std::uint64_t seed);

// JSONL persistence: one metadata object on the first line, one record object
// per following line. Doubles are written with 17 significant digits so the
// files round-trip exactly and identical inputs give identical bytes.
void save_dataset(const TrajectoryDataset& dataset, std::ostream& out);
void save_dataset(const TrajectoryDataset& dataset, const std::string& path);
TrajectoryDataset load_dataset(std::istream& in);
TrajectoryDataset load_dataset(const std::string& path);

}  // namespace symgn
