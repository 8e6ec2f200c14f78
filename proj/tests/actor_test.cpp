#include "opil/actor.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "opil/environments.hpp"
#include "opil/error.hpp"
#include "test_support.hpp"

namespace opil {
namespace {

using testing::constant_critic;
using testing::random_matrix;

const std::vector<Index> kHidden{64, 64};

ActorPolicy actor_for(const std::string& env, Rng& rng, Index noise_dim = -1,
                      std::vector<Index> hidden = kHidden) {
  const EnvSpec& spec = env_spec(env);
  return make_actor(spec, noise_dim < 0 ? spec.act_dim : noise_dim, hidden, Activation::kRelu,
                    rng);
}

TEST(Actor, ZeroNetworkGivesMidpoint) {
  Rng rng(0);
  for (const std::string env : {"linereacher-v0", "pendulum-v0"}) {
    ActorPolicy p = actor_for(env, rng);
    p.params.mutable_flat().setZero();
    const EnvSpec& spec = env_spec(env);
    const Vector a = act(p, Vector::Ones(spec.obs_dim), Vector::Ones(p.noise_dim));
    EXPECT_TRUE(a.isApprox(0.5 * (spec.action_low + spec.action_high))) << env;
    EXPECT_EQ(a(0), 0.0);
  }
}

TEST(Actor, SaturatedOutputApproachesBound) {
  Rng rng(1);
  ActorPolicy p = actor_for("pendulum-v0", rng, 1, {});
  p.params.mutable_flat().setZero();
  p.params.bias(0)(0) = 5.0;
  const double a = act(p, Vector::Zero(3), Vector::Zero(1))(0);
  EXPECT_NEAR(a, 2.0 * std::tanh(5.0), 1e-15);
  EXPECT_LT(a, 2.0);
  EXPECT_GT(a, 1.99);
}

TEST(Actor, RandomTriplesStayStrictlyInsideBounds) {
  Rng rng(2024);
  for (const std::string env : {"linereacher-v0", "pendulum-v0"}) {
    const EnvSpec& spec = env_spec(env);
    std::uniform_real_distribution<double> obs_dist(-10.0, 10.0);
    long violations = 0;
    for (int net = 0; net < 10; ++net) {
      const ActorPolicy p = actor_for(env, rng);
      const Matrix obs = random_matrix(rng, spec.obs_dim, 10000, 10.0);
      const Matrix z = sample_noise_batch(rng, p.noise_dim, 10000);
      const Matrix a = act_batch(p, obs, z);
      for (Index j = 0; j < a.cols(); ++j) {
        for (Index i = 0; i < a.rows(); ++i) {
          if (!(a(i, j) > spec.action_low(i) && a(i, j) < spec.action_high(i))) ++violations;
        }
      }
    }
    EXPECT_EQ(violations, 0) << env;
  }
}

TEST(Actor, BatchMatchesSingle) {
  Rng rng(3);
  const ActorPolicy p = actor_for("linereacher-v0", rng);
  const Matrix obs = random_matrix(rng, 2, 5);
  const Matrix z = sample_noise_batch(rng, 1, 5);
  const Matrix a = act_batch(p, obs, z);
  for (Index j = 0; j < 5; ++j) {
    EXPECT_NEAR(a(0, j), act(p, obs.col(j), z.col(j))(0), 1e-14);
  }
  EXPECT_THROW(act(p, Vector::Zero(3), Vector::Zero(1)), DimensionError);
  EXPECT_THROW(act(p, Vector::Zero(2), Vector::Zero(2)), DimensionError);
}

TEST(Noise, ReproducibleAndStandardNormal) {
  Rng a(42);
  Rng b(42);
  EXPECT_EQ(sample_noise_batch(a, 2, 100), sample_noise_batch(b, 2, 100));

  Rng rng(9);
  const int n = 100000;
  const Matrix z = sample_noise_batch(rng, 1, n);
  const double mean = z.mean();
  const double var = (z.array() - mean).square().mean();
  EXPECT_LT(std::abs(mean), 5.0 / std::sqrt(n));
  EXPECT_NEAR(var, 1.0, 5.0 * std::sqrt(2.0 / n));

  EXPECT_EQ(sample_noise(rng, 0).size(), 0);
}

TEST(Actor, ZeroNoiseDimensionIsDeterministic) {
  Rng rng(4);
  const ActorPolicy p = actor_for("linereacher-v0", rng, 0);
  const Vector s = Vector::Constant(2, 0.3);
  EXPECT_EQ(act(p, s, Vector(0)), act(p, s, sample_noise(rng, 0)));
}

TEST(PolicyGradient, ZeroWhenCriticIgnoresAction) {
  Rng rng(5);
  const ActorPolicy p = actor_for("linereacher-v0", rng);
  const CriticNet c = constant_critic(2, 1, 0.4);
  const PolicyGradient g = policy_gradient(p, c, random_matrix(rng, 2, 16), rng);
  EXPECT_EQ(g.grad.norm(), 0.0);
  EXPECT_NEAR(g.objective, std::log(0.4), 1e-12);
}

TEST(PolicyGradient, MatchesFiniteDifferencesWithFrozenNoise) {
  Rng rng(6);
  const EnvSpec& spec = env_spec("linereacher-v0");
  for (int trial = 0; trial < 5; ++trial) {
    const ActorPolicy p = make_actor(spec, 1, std::vector<Index>{4}, Activation::kTanh, rng);
    const CriticNet c = make_critic(2, 1, std::vector<Index>{8}, Activation::kTanh,
                                    kDefaultClampEps, rng);
    const Matrix s = random_matrix(rng, 2, 6);
    const Matrix z = sample_noise_batch(rng, 1, 6);
    const PolicyGradient g = policy_gradient_with_noise(p, c, s, z);
    auto f = [&](const Vector& flat) {
      ActorPolicy q = p;
      q.params.set_flat(flat);
      return policy_gradient_with_noise(q, c, s, z).objective;
    };
    EXPECT_LT(finite_diff_check(f, p.params.flat(), g.grad, 1e-5), 1e-4);
  }
}

TEST(PolicyGradient, SmallAscentStepImprovesObjective) {
  Rng rng(7);
  const ActorPolicy p = actor_for("pendulum-v0", rng);
  const CriticNet c = make_critic(3, 1, kHidden, Activation::kRelu, kDefaultClampEps, rng);
  const Matrix s = random_matrix(rng, 3, 64);
  const Matrix z = sample_noise_batch(rng, 1, 64);
  const PolicyGradient g = policy_gradient_with_noise(p, c, s, z);
  ASSERT_GT(g.grad.norm(), 0.0);
  ActorPolicy stepped = p;
  stepped.params.mutable_flat() += 1e-4 * g.grad / g.grad.norm();
  EXPECT_GE(policy_gradient_with_noise(stepped, c, s, z).objective, g.objective);
}

TEST(PolicyGradient, NoiseDrawnFromRng) {
  Rng rng(8);
  const ActorPolicy p = actor_for("linereacher-v0", rng);
  const CriticNet c = make_critic(2, 1, kHidden, Activation::kRelu, kDefaultClampEps, rng);
  const Matrix s = random_matrix(rng, 2, 10);
  Rng r1(11);
  Rng r2(11);
  const PolicyGradient a = policy_gradient(p, c, s, r1);
  Rng r3(11);
  const Matrix z = sample_noise_batch(r3, 1, 10);
  const PolicyGradient b = policy_gradient_with_noise(p, c, s, z);
  EXPECT_EQ(a.grad, b.grad);
  EXPECT_EQ(a.grad, policy_gradient(p, c, s, r2).grad);
}

TEST(ActorCheckpoint, RoundTrip) {
  Rng rng(12);
  const ActorPolicy p = actor_for("pendulum-v0", rng, 2);
  const ActorPolicy back = actor_from_json(nlohmann::json::parse(actor_to_json(p).dump()));
  EXPECT_EQ(back.params, p.params);
  EXPECT_EQ(back.noise_dim, 2);
  EXPECT_EQ(back.obs_dim, 3);
  EXPECT_EQ(back.action_center, p.action_center);
  EXPECT_EQ(back.action_halfwidth, p.action_halfwidth);
  EXPECT_EQ(back.env_id, "pendulum-v0");
}

}  // namespace
}  // namespace opil
