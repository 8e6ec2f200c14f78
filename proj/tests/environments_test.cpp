#include "opil/environments.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "opil/error.hpp"

namespace opil {
namespace {

constexpr double kPi = std::numbers::pi;

EnvState line_state(double x, double v, int t = 0) {
  return {EnvKind::kLineReacher, {x, v}, t};
}

EnvState pendulum_state(double theta, double rate, int t = 0) {
  return {EnvKind::kPendulum, {theta, rate}, t};
}

Vector scalar(double a) { return Vector::Constant(1, a); }

TEST(EnvSpec, Constants) {
  const EnvSpec& line = env_spec("linereacher-v0");
  EXPECT_EQ(line.obs_dim, 2);
  EXPECT_EQ(line.act_dim, 1);
  EXPECT_EQ(line.horizon, 200);
  EXPECT_DOUBLE_EQ(line.dt, 0.05);
  EXPECT_EQ(line.action_low(0), -1.0);
  EXPECT_EQ(line.action_high(0), 1.0);

  const EnvSpec& pend = env_spec("pendulum-v0");
  EXPECT_EQ(pend.obs_dim, 3);
  EXPECT_EQ(pend.act_dim, 1);
  EXPECT_EQ(pend.horizon, 200);
  EXPECT_EQ(pend.action_low(0), -2.0);
  EXPECT_EQ(pend.action_high(0), 2.0);

  EXPECT_THROW(env_spec("cartpole-v1"), EnvError);
  EXPECT_THROW(reset("cartpole-v1", 0), EnvError);
}

TEST(Reset, LineReacherInitialDistribution) {
  double lo = 0.0;
  double hi = -2.0;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const auto [state, obs] = reset("linereacher-v0", seed);
    EXPECT_GE(obs(0), -1.5);
    EXPECT_LE(obs(0), -0.5);
    EXPECT_EQ(obs(1), 0.0);
    EXPECT_EQ(state.step_index, 0);
    lo = std::min(lo, obs(0));
    hi = std::max(hi, obs(0));
  }
  // The samples cover the documented interval.
  EXPECT_LT(lo, -1.49);
  EXPECT_GT(hi, -0.51);
}

TEST(Reset, PendulumInitialDistribution) {
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const auto [state, obs] = reset("pendulum-v0", seed);
    EXPECT_GE(state.physical[0], -kPi);
    EXPECT_LE(state.physical[0], kPi);
    EXPECT_GE(state.physical[1], -1.0);
    EXPECT_LE(state.physical[1], 1.0);
    EXPECT_DOUBLE_EQ(obs(0), std::cos(state.physical[0]));
    EXPECT_DOUBLE_EQ(obs(1), std::sin(state.physical[0]));
    EXPECT_EQ(obs(2), state.physical[1]);
  }
}

TEST(Reset, SameSeedIsBitIdentical) {
  for (const char* id : {"linereacher-v0", "pendulum-v0"}) {
    const auto a = reset(id, 42);
    const auto b = reset(id, 42);
    EXPECT_EQ(a.state, b.state);
    EXPECT_TRUE((a.observation.array() == b.observation.array()).all());
  }
}

TEST(Step, LineReacherFixedPointAtGoal) {
  const StepResult r = step(line_state(0.0, 0.0), scalar(0.0));
  EXPECT_EQ(r.state.physical[0], 0.0);
  EXPECT_EQ(r.state.physical[1], 0.0);
  EXPECT_EQ(r.reward, 0.0);
  EXPECT_FALSE(r.done);
}

TEST(Step, LineReacherHandEvaluated) {
  // x' = 1 + 0 * 0.05, v' = 0 + (-1)(0.05), reward = -(1 + 0 + 0.001)
  const StepResult r = step(line_state(1.0, 0.0), scalar(-1.0));
  EXPECT_DOUBLE_EQ(r.state.physical[0], 1.0);
  EXPECT_DOUBLE_EQ(r.state.physical[1], -0.05);
  EXPECT_DOUBLE_EQ(r.reward, -1.001);
}

TEST(Step, LineReacherVelocityClamp) {
  const StepResult r = step(line_state(0.0, 1.99), scalar(1.0));
  EXPECT_EQ(r.state.physical[1], 2.0);
}

TEST(Step, PendulumUprightAtRest) {
  const StepResult r = step(pendulum_state(0.0, 0.0), scalar(0.0));
  EXPECT_EQ(r.reward, 0.0);
  EXPECT_EQ(r.state.physical[0], 0.0);
  EXPECT_EQ(r.state.physical[1], 0.0);
}

TEST(Step, PendulumHandEvaluated) {
  // accel = 15 sin(0.5) + 3 * 1, rate' = 0.2 + accel * 0.05, theta' = 0.5 + rate' * 0.05
  const StepResult r = step(pendulum_state(0.5, 0.2), scalar(1.0));
  const double accel = 15.0 * std::sin(0.5) + 3.0;
  const double rate = 0.2 + accel * 0.05;
  const double theta = 0.5 + rate * 0.05;
  EXPECT_DOUBLE_EQ(r.state.physical[1], rate);
  EXPECT_DOUBLE_EQ(r.state.physical[0], theta);
  EXPECT_NEAR(r.reward, -(theta * theta + 0.1 * rate * rate + 0.001), 1e-15);
}

TEST(Step, PendulumRateClampAndAngleWrapInReward) {
  const StepResult r = step(pendulum_state(3.1, 7.9), scalar(2.0));
  EXPECT_EQ(r.state.physical[1], 8.0);
  const double w = wrap_angle(r.state.physical[0]);
  EXPECT_GT(w, -kPi);
  EXPECT_LE(w, kPi);
  EXPECT_DOUBLE_EQ(r.reward, -(w * w + 0.1 * 64.0 + 0.001 * 4.0));
}

TEST(Step, RejectsOutOfBoundsActions) {
  EXPECT_THROW(step(line_state(0.0, 0.0), scalar(1.0 + 1e-12)), EnvError);
  EXPECT_THROW(step(pendulum_state(0.0, 0.0), scalar(-2.5)), EnvError);
  EXPECT_THROW(step(line_state(0.0, 0.0), scalar(std::nan(""))), EnvError);
  EXPECT_THROW(step(line_state(0.0, 0.0), Vector::Zero(2)), EnvError);
  EXPECT_NO_THROW(step(pendulum_state(0.0, 0.0), scalar(2.0)));
}

TEST(Step, DoneExactlyAtHorizonThenRejects) {
  auto [state, obs] = reset("linereacher-v0", 1);
  for (int t = 0; t < 200; ++t) {
    const StepResult r = step(state, scalar(0.0));
    EXPECT_EQ(r.done, t == 199);
    state = r.state;
  }
  EXPECT_EQ(state.step_index, 200);
  EXPECT_THROW(step(state, scalar(0.0)), EnvError);
}

TEST(Step, TrajectoriesReplayBitIdentically) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> actions(200);
  for (double& a : actions) a = u(rng);
  auto roll = [&] {
    auto [state, obs] = reset("pendulum-v0", 5);
    std::vector<double> trace;
    for (double a : actions) {
      const StepResult r = step(state, scalar(a));
      trace.push_back(r.reward);
      trace.push_back(r.observation(2));
      state = r.state;
    }
    return trace;
  };
  EXPECT_EQ(roll(), roll());
}

TEST(WrapAngle, Range) {
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
  EXPECT_NEAR(wrap_angle(3.0 * kPi + 0.1), -kPi + 0.1, 1e-12);
  EXPECT_NEAR(wrap_angle(0.3), 0.3, 1e-15);
}

TEST(Expert, LineReacherPdLaw) {
  EXPECT_EQ(expert_action("linereacher-v0", Vector{{0.0, 0.0}})(0), 0.0);
  EXPECT_EQ(expert_action("linereacher-v0", Vector{{1.0, 0.0}})(0), -1.0);
  EXPECT_DOUBLE_EQ(expert_action("linereacher-v0", Vector{{-0.1, 0.0}})(0), 0.4);
  EXPECT_THROW(expert_action("nope", Vector{{0.0, 0.0}}), EnvError);
}

TEST(Expert, PendulumCaptureAndPump) {
  // Inside the capture region: PD on the wrapped angle.
  const double th = 0.05;
  const Vector near{{std::cos(th), std::sin(th), 0.1}};
  EXPECT_NEAR(expert_action("pendulum-v0", near)(0), -16.0 * 0.05 - 4.0 * 0.1, 1e-12);
  // Outside the action bounds the PD law saturates.
  const Vector fast{{std::cos(0.1), std::sin(0.1), 0.5}};
  EXPECT_EQ(expert_action("pendulum-v0", fast)(0), -2.0);
  // Hanging at rest: no energy pumping without motion.
  EXPECT_EQ(expert_action("pendulum-v0", Vector{{-1.0, 0.0, 0.0}})(0), 0.0);
  // Swinging near the bottom below target energy: torque follows velocity.
  EXPECT_GT(expert_action("pendulum-v0", Vector{{-1.0, 0.0, 1.0}})(0), 0.0);
  EXPECT_LT(expert_action("pendulum-v0", Vector{{-1.0, 0.0, -1.0}})(0), 0.0);
}

TEST(Expert, ActionsAlwaysInBounds) {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> x(-5.0, 5.0);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  std::uniform_real_distribution<double> rate(-8.0, 8.0);
  for (int i = 0; i < 100000; ++i) {
    const double a = expert_action("linereacher-v0", Vector{{x(rng), x(rng)}})(0);
    ASSERT_GE(a, -1.0);
    ASSERT_LE(a, 1.0);
    const double th = ang(rng);
    const double u =
        expert_action("pendulum-v0", Vector{{std::cos(th), std::sin(th), rate(rng)}})(0);
    ASSERT_GE(u, -2.0);
    ASSERT_LE(u, 2.0);
  }
}

double rollout_return(std::string_view id, std::uint64_t seed, bool use_expert) {
  auto [state, obs] = reset(id, seed);
  double total = 0.0;
  for (int t = 0; t < env_spec(id).horizon; ++t) {
    const Vector a = use_expert ? expert_action(id, obs) : Vector::Zero(1).eval();
    const StepResult r = step(state, a);
    total += r.reward;
    state = r.state;
    obs = r.observation;
  }
  return total;
}

TEST(Expert, LineReacherBeatsZeroActionPolicy) {
  double expert = 0.0;
  double zero = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    expert += rollout_return("linereacher-v0", seed, true);
    zero += rollout_return("linereacher-v0", seed, false);
  }
  expert /= 100.0;
  zero /= 100.0;
  // Zero action from rest never moves: return is -200 x0^2, about -217 on average.
  EXPECT_GT(expert - zero, 150.0);
}

TEST(Expert, PendulumSwingsUpFromHanging) {
  // Hanging almost at rest; the controller must pump energy and capture.
  EnvState state = pendulum_state(kPi - 0.05, 0.0);
  Vector obs = observe(state);
  double last_rewards = 0.0;
  for (int t = 0; t < 200; ++t) {
    const StepResult r = step(state, expert_action("pendulum-v0", obs));
    if (t >= 150) last_rewards += r.reward;
    state = r.state;
    obs = r.observation;
  }
  EXPECT_LT(std::abs(wrap_angle(state.physical[0])), 0.05);
  EXPECT_GT(last_rewards, -1.0);
}

}  // namespace
}  // namespace opil
