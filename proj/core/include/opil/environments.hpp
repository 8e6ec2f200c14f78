#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "opil/numerics.hpp"

namespace opil {

inline constexpr std::string_view kLineReacherId = "linereacher-v0";
inline constexpr std::string_view kPendulumId = "pendulum-v0";

struct EnvSpec {
  std::string env_id;
  Index obs_dim = 0;
  Index act_dim = 0;
  Vector action_low;
  Vector action_high;
  int horizon = 1;
  double dt = 0.0;
};

/// Throws EnvError for unknown ids.
const EnvSpec& env_spec(std::string_view env_id);
std::vector<std::string> env_ids();

enum class EnvKind { kLineReacher, kPendulum };

/// Physical state plus episode clock.
///   linereacher: physical = (x, v)
///   pendulum:    physical = (theta, theta_dot), theta = 0 is upright
struct EnvState {
  EnvKind kind = EnvKind::kLineReacher;
  std::array<double, 2> physical{};
  int step_index = 0;

  bool operator==(const EnvState&) const = default;
};

struct ResetResult {
  EnvState state;
  Vector observation;
};

struct StepResult {
  EnvState state;
  Vector observation;
  double reward = 0.0;
  bool done = false;
};

/// Initial state drawn from the environment's start distribution using only
/// `seed`:
///   linereacher: x ~ U[-1.5, -0.5], v = 0
///   pendulum:    theta ~ U[-pi, pi], theta_dot ~ U[-1, 1]
ResetResult reset(std::string_view env_id, std::uint64_t seed);

/// Deterministic dynamics. The action must lie inside the action bounds; the
/// environment never clips.
StepResult step(const EnvState& state, const Vector& action);

Vector observe(const EnvState& state);
const EnvSpec& env_spec(const EnvState& state);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double theta);

struct PendulumExpertGains {
  double k_angle = 16.0;
  double k_rate = 4.0;
  double k_energy = 6.0;
  double capture_angle = 0.3;
  double capture_rate = 2.0;
};

/// Scripted near-optimal controllers. linereacher is a saturated PD law;
/// pendulum pumps energy until it can capture the upright with a PD law.
Vector expert_action(std::string_view env_id, const Vector& observation,
                     const PendulumExpertGains& gains = {});

}  // namespace opil
