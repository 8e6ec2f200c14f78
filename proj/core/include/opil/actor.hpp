#pragma once

#include <nlohmann/json.hpp>

#include <span>
#include <string>

#include "opil/critic.hpp"
#include "opil/environments.hpp"
#include "opil/numerics.hpp"

namespace opil {

/// Noise-input policy a = center + halfwidth * tanh_net(obs ++ z).
///
/// The tanh output layer keeps every action inside the environment bounds for
/// any parameter values, so nothing downstream ever clips.
struct ActorPolicy {
  NetworkParams params;
  Index obs_dim = 0;
  Index noise_dim = 0;
  Vector action_center;
  Vector action_halfwidth;
  std::string env_id;

  Index act_dim() const { return params.output_dim(); }
  Vector action_low() const { return action_center - action_halfwidth; }
  Vector action_high() const { return action_center + action_halfwidth; }
};

ActorPolicy make_actor(const EnvSpec& spec, Index noise_dim,
                       std::span<const Index> hidden, Activation hidden_activation,
                       Rng& rng);

Vector act(const ActorPolicy& policy, const Vector& obs, const Vector& z);
/// One action per column.
Matrix act_batch(const ActorPolicy& policy, const Matrix& obs, const Matrix& z);

/// z ~ N(0, I). noise_dim 0 gives an empty vector.
Vector sample_noise(Rng& rng, Index noise_dim);
Matrix sample_noise_batch(Rng& rng, Index noise_dim, Index batch);

struct PolicyGradient {
  Vector grad;       // ascent direction for the actor parameters
  double objective;  // mean log q over the batch
};

/// Reparameterised gradient of mean_s log q(s, pi(s, z)) with one z draw per
/// state. The critic is only read.
PolicyGradient policy_gradient(const ActorPolicy& policy, const CriticNet& critic,
                               const Matrix& states, Rng& rng);
/// Same with the noise supplied, one column per state.
PolicyGradient policy_gradient_with_noise(const ActorPolicy& policy,
                                          const CriticNet& critic,
                                          const Matrix& states, const Matrix& z);

/// Network checkpoint plus {"noise_dim","action_center","action_halfwidth","env_id"}.
nlohmann::json actor_to_json(const ActorPolicy& policy);
ActorPolicy actor_from_json(const nlohmann::json& doc);

}  // namespace opil
