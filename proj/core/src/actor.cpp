#include "opil/actor.hpp"

#include <random>
#include <string>

#include "opil/checkpoint.hpp"
#include "opil/error.hpp"

namespace opil {
namespace {

Matrix actor_input(const ActorPolicy& policy, const Matrix& obs, const Matrix& z) {
  if (obs.rows() != policy.obs_dim || z.rows() != policy.noise_dim) {
    throw DimensionError("actor expects obs_dim " + std::to_string(policy.obs_dim) +
                         " and noise_dim " + std::to_string(policy.noise_dim) +
                         ", got " + std::to_string(obs.rows()) + " and " +
                         std::to_string(z.rows()));
  }
  if (obs.cols() != z.cols()) {
    throw DimensionError("observation and noise batches differ in size");
  }
  Matrix input(obs.rows() + z.rows(), obs.cols());
  input.topRows(obs.rows()) = obs;
  input.bottomRows(z.rows()) = z;
  return input;
}

Matrix scale_actions(const ActorPolicy& policy, const Matrix& unit) {
  Matrix a = unit.array().colwise() * policy.action_halfwidth.array();
  a.colwise() += policy.action_center;
  return a;
}

}  // namespace

ActorPolicy make_actor(const EnvSpec& spec, Index noise_dim,
                       std::span<const Index> hidden, Activation hidden_activation,
                       Rng& rng) {
  if (noise_dim < 0) throw ConfigError("noise_dim must be >= 0");
  if (!((spec.action_low.array() < spec.action_high.array()).all())) {
    throw ConfigError("action_low must be below action_high");
  }
  ActorPolicy policy;
  policy.params = NetworkParams::mlp(spec.obs_dim + noise_dim, hidden, spec.act_dim,
                                     hidden_activation, Activation::kTanh);
  policy.obs_dim = spec.obs_dim;
  policy.noise_dim = noise_dim;
  policy.action_center = 0.5 * (spec.action_low + spec.action_high);
  policy.action_halfwidth = 0.5 * (spec.action_high - spec.action_low);
  policy.env_id = spec.env_id;
  init_uniform(policy.params, rng);
  return policy;
}

Matrix act_batch(const ActorPolicy& policy, const Matrix& obs, const Matrix& z) {
  return scale_actions(policy, forward_batch(policy.params, actor_input(policy, obs, z)));
}

Vector act(const ActorPolicy& policy, const Vector& obs, const Vector& z) {
  return act_batch(policy, obs, z).col(0);
}

Vector sample_noise(Rng& rng, Index noise_dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(noise_dim);
  for (Index i = 0; i < noise_dim; ++i) z(i) = normal(rng);
  return z;
}

Matrix sample_noise_batch(Rng& rng, Index noise_dim, Index batch) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(noise_dim, batch);
  for (Index c = 0; c < batch; ++c) {
    for (Index r = 0; r < noise_dim; ++r) z(r, c) = normal(rng);
  }
  return z;
}

PolicyGradient policy_gradient_with_noise(const ActorPolicy& policy,
                                          const CriticNet& critic,
                                          const Matrix& states, const Matrix& z) {
  if (critic.obs_dim != policy.obs_dim || critic.act_dim() != policy.act_dim()) {
    throw DimensionError("critic input does not match obs_dim + act_dim of the actor");
  }
  const Index n = states.cols();
  if (n == 0) throw DimensionError("policy gradient needs a nonempty batch");

  const ForwardTrace trace = forward_trace(policy.params, actor_input(policy, states, z));
  const Matrix actions = scale_actions(policy, trace.output());
  const LogQGradient q =
      log_q_input_gradient(critic, states, actions, 1.0 / static_cast<double>(n));

  // a = center + halfwidth * y, so dJ/dy = halfwidth * dJ/da.
  const Matrix upstream = q.act_grad.array().colwise() * policy.action_halfwidth.array();
  PolicyGradient out{backward_batch(policy.params, trace, upstream).params,
                     q.log_q.mean()};
  require_finite(out.objective, "actor objective");
  require_finite(out.grad, "actor gradient");
  return out;
}

PolicyGradient policy_gradient(const ActorPolicy& policy, const CriticNet& critic,
                               const Matrix& states, Rng& rng) {
  return policy_gradient_with_noise(policy, critic, states,
                                    sample_noise_batch(rng, policy.noise_dim, states.cols()));
}

nlohmann::json actor_to_json(const ActorPolicy& policy) {
  nlohmann::json doc = network_to_json(policy.params);
  doc["noise_dim"] = policy.noise_dim;
  doc["action_center"] = vector_to_json(policy.action_center);
  doc["action_halfwidth"] = vector_to_json(policy.action_halfwidth);
  doc["env_id"] = policy.env_id;
  return doc;
}

ActorPolicy actor_from_json(const nlohmann::json& doc) {
  ActorPolicy policy;
  policy.params = network_from_json(doc);
  try {
    policy.noise_dim = doc.at("noise_dim").get<Index>();
    policy.env_id = doc.at("env_id").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("actor checkpoint: ") + e.what());
  }
  if (!doc.contains("action_center") || !doc.contains("action_halfwidth")) {
    throw ParseError(0, "actor checkpoint lacks action scaling");
  }
  policy.action_center = vector_from_json(doc["action_center"], "action_center");
  policy.action_halfwidth = vector_from_json(doc["action_halfwidth"], "action_halfwidth");
  policy.obs_dim = policy.params.input_dim() - policy.noise_dim;
  if (policy.obs_dim <= 0 || policy.action_center.size() != policy.act_dim() ||
      policy.action_halfwidth.size() != policy.act_dim()) {
    throw ParseError(0, "actor checkpoint dimensions are inconsistent");
  }
  if (policy.params.layers().back().activation != Activation::kTanh) {
    throw ParseError(0, "actor output layer must be tanh");
  }
  return policy;
}

}  // namespace opil
