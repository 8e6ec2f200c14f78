#include "opil/environments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "opil/error.hpp"

namespace opil {
namespace {

constexpr double kPi = std::numbers::pi;

// linereacher
constexpr double kLineDt = 0.05;
constexpr double kLineMaxSpeed = 2.0;

// pendulum
constexpr double kGravity = 10.0;
constexpr double kMass = 1.0;
constexpr double kLength = 1.0;
constexpr double kPendDt = 0.05;
constexpr double kMaxRate = 8.0;
constexpr double kMaxTorque = 2.0;
constexpr double kGravityTerm = 3.0 * kGravity / (2.0 * kLength);
constexpr double kTorqueTerm = 3.0 / (kMass * kLength * kLength);

EnvSpec make_spec(std::string_view id, Index obs_dim, double bound, int horizon,
                  double dt) {
  EnvSpec spec;
  spec.env_id = std::string(id);
  spec.obs_dim = obs_dim;
  spec.act_dim = 1;
  spec.action_low = Vector::Constant(1, -bound);
  spec.action_high = Vector::Constant(1, bound);
  spec.horizon = horizon;
  spec.dt = dt;
  return spec;
}

const EnvSpec& line_spec() {
  static const EnvSpec spec = make_spec(kLineReacherId, 2, 1.0, 200, kLineDt);
  return spec;
}

const EnvSpec& pendulum_spec() {
  static const EnvSpec spec =
      make_spec(kPendulumId, 3, kMaxTorque, 200, kPendDt);
  return spec;
}

EnvKind kind_of(std::string_view env_id) {
  if (env_id == kLineReacherId) return EnvKind::kLineReacher;
  if (env_id == kPendulumId) return EnvKind::kPendulum;
  throw EnvError("unknown env_id '" + std::string(env_id) + "'");
}

}  // namespace

const EnvSpec& env_spec(std::string_view env_id) {
  return kind_of(env_id) == EnvKind::kLineReacher ? line_spec()
                                                  : pendulum_spec();
}

const EnvSpec& env_spec(const EnvState& state) {
  return state.kind == EnvKind::kLineReacher ? line_spec() : pendulum_spec();
}

std::vector<std::string> env_ids() {
  return {std::string(kLineReacherId), std::string(kPendulumId)};
}

double wrap_angle(double theta) {
  double t = std::fmod(theta + kPi, 2.0 * kPi);
  if (t <= 0.0) t += 2.0 * kPi;
  return t - kPi;
}

Vector observe(const EnvState& state) {
  const auto [a, b] = state.physical;
  if (state.kind == EnvKind::kLineReacher) return Vector{{a, b}};
  return Vector{{std::cos(a), std::sin(a), b}};
}

ResetResult reset(std::string_view env_id, std::uint64_t seed) {
  EnvState state;
  state.kind = kind_of(env_id);
  Rng rng(seed);
  if (state.kind == EnvKind::kLineReacher) {
    std::uniform_real_distribution<double> x0(-1.5, -0.5);
    state.physical = {x0(rng), 0.0};
  } else {
    std::uniform_real_distribution<double> theta0(-kPi, kPi);
    std::uniform_real_distribution<double> rate0(-1.0, 1.0);
    const double theta = theta0(rng);
    state.physical = {theta, rate0(rng)};
  }
  return {state, observe(state)};
}

StepResult step(const EnvState& state, const Vector& action) {
  const EnvSpec& spec = env_spec(state);
  if (state.step_index >= spec.horizon) {
    throw EnvError(spec.env_id + ": step called on a finished episode");
  }
  if (action.size() != spec.act_dim) {
    throw EnvError(spec.env_id + ": action has dimension " +
                   std::to_string(action.size()) + ", expected " +
                   std::to_string(spec.act_dim));
  }
  for (Index i = 0; i < spec.act_dim; ++i) {
    const double a = action(i);
    if (!(a >= spec.action_low(i) && a <= spec.action_high(i))) {
      throw EnvError(spec.env_id + ": action " + std::to_string(a) +
                     " outside [" + std::to_string(spec.action_low(i)) + ", " +
                     std::to_string(spec.action_high(i)) + "]");
    }
  }

  StepResult result;
  result.state = state;
  result.state.step_index = state.step_index + 1;
  const double u = action(0);

  if (state.kind == EnvKind::kLineReacher) {
    const auto [x, v] = state.physical;
    const double x_next = x + v * kLineDt;
    const double v_next = std::clamp(v + u * kLineDt, -kLineMaxSpeed, kLineMaxSpeed);
    result.state.physical = {x_next, v_next};
    result.reward = -(x * x + 0.1 * v * v + 0.001 * u * u);
  } else {
    const auto [theta, rate] = state.physical;
    const double accel = kGravityTerm * std::sin(theta) + kTorqueTerm * u;
    const double rate_next = std::clamp(rate + accel * kPendDt, -kMaxRate, kMaxRate);
    const double theta_next = theta + rate_next * kPendDt;
    result.state.physical = {theta_next, rate_next};
    const double w = wrap_angle(theta_next);
    result.reward = -(w * w + 0.1 * rate_next * rate_next + 0.001 * u * u);
  }
  result.observation = observe(result.state);
  result.done = result.state.step_index == spec.horizon;
  return result;
}

Vector expert_action(std::string_view env_id, const Vector& observation,
                     const PendulumExpertGains& gains) {
  const EnvSpec& spec = env_spec(env_id);
  if (observation.size() != spec.obs_dim) {
    throw DimensionError(spec.env_id + ": observation has dimension " +
                         std::to_string(observation.size()) + ", expected " +
                         std::to_string(spec.obs_dim));
  }
  if (kind_of(env_id) == EnvKind::kLineReacher) {
    const double x = observation(0);
    const double v = observation(1);
    return Vector::Constant(1, std::clamp(-4.0 * x - 3.0 * v, -1.0, 1.0));
  }

  const double theta = std::atan2(observation(1), observation(0));
  const double rate = observation(2);
  double u = 0.0;
  if (std::abs(theta) < gains.capture_angle && std::abs(rate) < gains.capture_rate) {
    u = -gains.k_angle * theta - gains.k_rate * rate;
  } else {
    // Energy of the unforced system; equals kGravityTerm at upright rest.
    const double energy = 0.5 * rate * rate + kGravityTerm * observation(0);
    u = gains.k_energy * rate * (kGravityTerm - energy);
  }
  return Vector::Constant(1, std::clamp(u, -kMaxTorque, kMaxTorque));
}

}  // namespace opil
