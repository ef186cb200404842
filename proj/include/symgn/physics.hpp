#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "symgn/random.hpp"
#include "symgn/tensor.hpp"

namespace symgn {

enum class ForceLaw : std::uint8_t {
  kInverseR,   // f = m_s * delta / r^2
  kInverseR2,  // f = m_s * delta / r^3
  kSpringR2,   // chain springs, |F| = k * r^2, plus global gravity
};

const char* force_law_name(ForceLaw law);
ForceLaw parse_force_law(const std::string& name);

/// Simulation environment: force law, dimensionality, integration step and
/// the minimum admissible pairwise distance.
struct EnvConfig {
  ForceLaw law = ForceLaw::kInverseR2;
  int dim = 2;
  int n_bodies = 6;
  double dt = 0.01;
  std::array<double, 3> gravity{0.0, 0.0, 0.0};  // SpringR2 only
  double spring_k = 1.0;                         // SpringR2 only
  double min_separation = 0.05;

  bool is_spring() const { return law == ForceLaw::kSpringR2; }
  void validate() const;  // throws std::invalid_argument
};

/// Built-in experiment presets: r1-2d, r2-2d, r2-3d, string-2d.
EnvConfig experiment_env(const std::string& name);
std::vector<std::string> experiment_names();

/// One snapshot of the simulated system.
struct SystemState {
  std::vector<double> masses;       // n, all > 0
  Tensor positions;                 // n x dim
  Tensor velocities;                // n x dim
  std::vector<std::uint8_t> fixed;  // 1 only for pinned string endpoints

  std::size_t size() const { return masses.size(); }
  void validate(const EnvConfig& env) const;
};

/// Per-unit-receiver-mass force exerted by the sender body on the receiver.
/// For the n-body laws this is m_s * delta / r^(n+1) with delta = x_s - x_r;
/// for the string it is the spring force k*r*delta divided by the receiver
/// mass, so that m_r * f(r<-s) = -m_s * f(s<-r) holds for every law.
/// Throws SingularityError when r < env.min_separation.
std::array<double, 3> pairwise_force(const EnvConfig& env, double receiver_mass,
                                     std::span<const double> receiver_pos,
                                     double sender_mass,
                                     std::span<const double> sender_pos);

/// Index-aware variant; rejects non-adjacent pairs under the spring law.
std::array<double, 3> pairwise_force_between(const EnvConfig& env,
                                             const SystemState& state,
                                             std::size_t receiver,
                                             std::size_t sender);

/// Sum of per-unit-mass forces on each node (gravity added for the string).
/// Rows of fixed nodes are computed like any other; step() masks them.
Tensor net_acceleration(const EnvConfig& env, const SystemState& state);

/// Smallest pairwise distance the force law cares about: all pairs for the
/// n-body laws, adjacent pairs only for the string.
double min_pairwise_distance(const EnvConfig& env, const SystemState& state);

struct StepResult {
  SystemState next;
  Tensor dv;  // a*dt for free nodes, zero rows for pinned ones
};

/// One semi-implicit Euler step: v += a*dt, then x += v*dt.
/// Pinned nodes keep v = 0 and do not move.
StepResult step_with_target(const EnvConfig& env, const SystemState& state);
SystemState step(const EnvConfig& env, const SystemState& state);

/// Random initial conditions: masses log-uniform in [0.5, 2], positions
/// uniform in [-1, 1]^D, velocities normal with scale 0.1. The string starts
/// on a horizontal line with spacing 0.2 and pinned, motionless endpoints.
SystemState random_state(const EnvConfig& env, Rng& rng);

}  // namespace symgn
