#include "symgn/physics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "symgn/errors.hpp"

namespace symgn {

const char* force_law_name(ForceLaw law) {
  switch (law) {
    case ForceLaw::kInverseR: return "inverse_r";
    case ForceLaw::kInverseR2: return "inverse_r2";
    case ForceLaw::kSpringR2: return "spring_r2";
  }
  return "unknown";
}

ForceLaw parse_force_law(const std::string& name) {
  if (name == "inverse_r") return ForceLaw::kInverseR;
  if (name == "inverse_r2") return ForceLaw::kInverseR2;
  if (name == "spring_r2") return ForceLaw::kSpringR2;
  throw std::invalid_argument("unknown force law: " + name);
}

void EnvConfig::validate() const {
  if (dim != 2 && dim != 3) {
    throw std::invalid_argument("EnvConfig: dim must be 2 or 3");
  }
  if (n_bodies < 1) throw std::invalid_argument("EnvConfig: n_bodies must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("EnvConfig: dt must be > 0");
  if (!(min_separation > 0.0)) {
    throw std::invalid_argument("EnvConfig: min_separation must be > 0");
  }
  if (is_spring()) {
    if (dim != 2) throw std::invalid_argument("EnvConfig: the string is 2D only");
    if (n_bodies < 3) {
      throw std::invalid_argument("EnvConfig: the string needs interior nodes");
    }
    if (!(spring_k > 0.0)) {
      throw std::invalid_argument("EnvConfig: spring_k must be > 0");
    }
  }
}

EnvConfig experiment_env(const std::string& name) {
  EnvConfig env;
  if (name == "r1-2d") {
    env.law = ForceLaw::kInverseR;
    env.dim = 2;
    env.n_bodies = 6;
    env.dt = 0.01;
  } else if (name == "r2-2d") {
    env.law = ForceLaw::kInverseR2;
    env.dim = 2;
    env.n_bodies = 6;
    env.dt = 0.01;
  } else if (name == "r2-3d") {
    env.law = ForceLaw::kInverseR2;
    env.dim = 3;
    env.n_bodies = 6;
    env.dt = 0.01;
  } else if (name == "string-2d") {
    env.law = ForceLaw::kSpringR2;
    env.dim = 2;
    env.n_bodies = 10;
    env.dt = 0.005;
    env.gravity = {0.0, -1.0, 0.0};
    env.spring_k = 1.0;
  } else {
    throw std::invalid_argument("unknown experiment '" + name +
                                "' (expected r1-2d, r2-2d, r2-3d or string-2d)");
  }
  return env;
}

std::vector<std::string> experiment_names() {
  return {"r1-2d", "r2-2d", "r2-3d", "string-2d"};
}

void SystemState::validate(const EnvConfig& env) const {
  const std::size_t n = masses.size();
  if (n != static_cast<std::size_t>(env.n_bodies)) {
    throw std::invalid_argument("SystemState: body count does not match env");
  }
  const auto d = static_cast<std::size_t>(env.dim);
  if (positions.rows != n || positions.cols != d || velocities.rows != n ||
      velocities.cols != d || fixed.size() != n) {
    throw std::invalid_argument("SystemState: row counts disagree");
  }
  for (double m : masses) {
    if (!(m > 0.0)) throw std::invalid_argument("SystemState: masses must be > 0");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const bool endpoint = env.is_spring() && (i == 0 || i + 1 == n);
    if (static_cast<bool>(fixed[i]) != endpoint) {
      throw std::invalid_argument(
          "SystemState: exactly the string endpoints may be fixed");
    }
  }
}

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double d = a[c] - b[c];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

std::array<double, 3> pairwise_force(const EnvConfig& env, double receiver_mass,
                                     std::span<const double> receiver_pos,
                                     double sender_mass,
                                     std::span<const double> sender_pos) {
  std::array<double, 3> delta{0.0, 0.0, 0.0};
  double r2 = 0.0;
  for (std::size_t c = 0; c < receiver_pos.size(); ++c) {
    delta[c] = sender_pos[c] - receiver_pos[c];
    r2 += delta[c] * delta[c];
  }
  const double r = std::sqrt(r2);
  if (r < env.min_separation) {
    throw SingularityError("pairwise distance " + std::to_string(r) +
                           " below softening threshold " +
                           std::to_string(env.min_separation));
  }

  double scale = 0.0;
  switch (env.law) {
    case ForceLaw::kInverseR:
      scale = sender_mass / r2;  // m_s * delta / r^2
      break;
    case ForceLaw::kInverseR2:
      scale = sender_mass / (r2 * r);  // m_s * delta / r^3
      break;
    case ForceLaw::kSpringR2:
      // Spring force k*r*delta (|F| = k r^2, attractive) acts on the pair
      // independently of mass; per unit receiver mass it is divided by m_r.
      scale = env.spring_k * r / receiver_mass;
      break;
  }
  return {delta[0] * scale, delta[1] * scale, delta[2] * scale};
}

std::array<double, 3> pairwise_force_between(const EnvConfig& env,
                                             const SystemState& state,
                                             std::size_t receiver,
                                             std::size_t sender) {
  if (receiver >= state.size() || sender >= state.size() || receiver == sender) {
    throw std::invalid_argument("pairwise_force_between: bad body indices");
  }
  if (env.is_spring()) {
    const std::size_t lo = receiver < sender ? receiver : sender;
    const std::size_t hi = receiver < sender ? sender : receiver;
    if (hi - lo != 1) {
      throw TopologyError("spring pair (" + std::to_string(receiver) + ", " +
                          std::to_string(sender) + ") is not chain-adjacent");
    }
  }
  return pairwise_force(env, state.masses[receiver], state.positions.row(receiver),
                        state.masses[sender], state.positions.row(sender));
}

Tensor net_acceleration(const EnvConfig& env, const SystemState& state) {
  const std::size_t n = state.size();
  const auto dim = static_cast<std::size_t>(env.dim);
  Tensor acc(n, dim);

  if (env.is_spring()) {
    for (std::size_t i = 0; i < n; ++i) {
      double* out = acc.data.data() + i * dim;
      for (std::size_t j : {i == 0 ? n : i - 1, i + 1}) {
        if (j >= n) continue;
        const auto f = pairwise_force(env, state.masses[i], state.positions.row(i),
                                      state.masses[j], state.positions.row(j));
        for (std::size_t c = 0; c < dim; ++c) out[c] += f[c];
      }
      for (std::size_t c = 0; c < dim; ++c) out[c] += env.gravity[c];
    }
    return acc;
  }

  for (std::size_t i = 0; i < n; ++i) {
    double* out = acc.data.data() + i * dim;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto f = pairwise_force(env, state.masses[i], state.positions.row(i),
                                    state.masses[j], state.positions.row(j));
      for (std::size_t c = 0; c < dim; ++c) out[c] += f[c];
    }
  }
  return acc;
}

double min_pairwise_distance(const EnvConfig& env, const SystemState& state) {
  const std::size_t n = state.size();
  double best = std::numeric_limits<double>::infinity();
  if (env.is_spring()) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      best = std::min(best, distance(state.positions.row(i), state.positions.row(i + 1)));
    }
    return best;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      best = std::min(best, distance(state.positions.row(i), state.positions.row(j)));
    }
  }
  return best;
}

StepResult step_with_target(const EnvConfig& env, const SystemState& state) {
  const std::size_t n = state.size();
  const auto dim = static_cast<std::size_t>(env.dim);
  const Tensor acc = net_acceleration(env, state);

  StepResult result;
  result.next = state;
  result.dv = Tensor(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    if (state.fixed[i]) continue;  // pinned: v stays 0, x unchanged, dv row 0
    double* v = result.next.velocities.data.data() + i * dim;
    double* x = result.next.positions.data.data() + i * dim;
    double* dv = result.dv.data.data() + i * dim;
    const double* a = acc.data.data() + i * dim;
    for (std::size_t c = 0; c < dim; ++c) {
      dv[c] = a[c] * env.dt;
      v[c] += dv[c];
      x[c] += v[c] * env.dt;
    }
  }
  return result;
}

SystemState step(const EnvConfig& env, const SystemState& state) {
  return step_with_target(env, state).next;
}

SystemState random_state(const EnvConfig& env, Rng& rng) {
  const auto n = static_cast<std::size_t>(env.n_bodies);
  const auto dim = static_cast<std::size_t>(env.dim);

  SystemState state;
  state.masses.resize(n);
  for (auto& m : state.masses) m = rng.log_uniform(0.5, 2.0);
  state.positions = Tensor(n, dim);
  state.velocities = Tensor(n, dim);
  state.fixed.assign(n, 0);

  if (env.is_spring()) {
    // Horizontal line, spacing 0.2, centered on the origin; ends pinned.
    const double x0 = -0.1 * static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      state.positions(i, 0) = x0 + 0.2 * static_cast<double>(i);
    }
    state.fixed[0] = 1;
    state.fixed[n - 1] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (state.fixed[i]) continue;
      for (std::size_t c = 0; c < dim; ++c) {
        state.velocities(i, c) = 0.1 * rng.normal();
      }
    }
    return state;
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < dim; ++c) {
      state.positions(i, c) = rng.uniform(-1.0, 1.0);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < dim; ++c) {
      state.velocities(i, c) = 0.1 * rng.normal();
    }
  }
  return state;
}

}  // namespace symgn
