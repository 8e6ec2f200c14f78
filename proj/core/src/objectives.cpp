#include "opil/objectives.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "opil/checkpoint.hpp"
#include "opil/critic.hpp"
#include "opil/error.hpp"

namespace opil {

double reward_objective(const RewardTable& table) {
  if (table.r_expert.empty() || table.r_beta.empty()) {
    throw DimensionError("reward table lists must be nonempty");
  }
  const double expert = std::accumulate(table.r_expert.begin(), table.r_expert.end(), 0.0) /
                        static_cast<double>(table.r_expert.size());
  double entropy = 0.0;
  for (double r : table.r_beta) entropy += bernoulli_entropy(r);
  return expert + entropy / static_cast<double>(table.r_beta.size());
}

GaussianBCPolicy make_bc_policy(const EnvSpec& spec, std::span<const Index> hidden,
                                Activation hidden_activation, Rng& rng) {
  GaussianBCPolicy policy;
  policy.mean_net = NetworkParams::mlp(spec.obs_dim, hidden, spec.act_dim,
                                       hidden_activation, Activation::kIdentity);
  init_uniform(policy.mean_net, rng);
  policy.log_std = Vector::Zero(spec.act_dim);
  policy.action_low = spec.action_low;
  policy.action_high = spec.action_high;
  policy.env_id = spec.env_id;
  return policy;
}

BcLoss bc_nll_and_grads(const GaussianBCPolicy& policy, const Matrix& obs,
                        const Matrix& act) {
  const Index n = obs.cols();
  if (n == 0) throw DimensionError("behaviour cloning batch is empty");
  if (act.cols() != n || act.rows() != policy.mean_net.output_dim()) {
    throw DimensionError("action batch does not match the BC policy");
  }
  if (policy.log_std.size() != act.rows()) {
    throw DimensionError("log_std does not match act_dim");
  }

  const ForwardTrace trace = forward_trace(policy.mean_net, obs);
  const Matrix diff = act - trace.output();
  const Vector inv_var = (-2.0 * policy.log_std).array().exp();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);

  // per sample: sum_j 0.5 * diff^2 / var + log_std + 0.5 log(2 pi)
  const Matrix scaled_sq = diff.array().square().colwise() * inv_var.array();
  BcLoss out;
  out.nll = 0.5 * scaled_sq.sum() * inv_n + policy.log_std.sum() +
            half_log_2pi * static_cast<double>(act.rows());

  const Matrix upstream = -(diff.array().colwise() * inv_var.array()) * inv_n;
  out.mean_grad = backward_batch(policy.mean_net, trace, upstream).params;
  out.log_std_grad = Vector::Ones(act.rows()) - scaled_sq.rowwise().sum() * inv_n;

  require_finite(out.nll, "behaviour cloning loss");
  require_finite(out.mean_grad, "behaviour cloning mean gradient");
  require_finite(out.log_std_grad, "behaviour cloning log_std gradient");
  return out;
}

Vector bc_act(const GaussianBCPolicy& policy, const Vector& obs) {
  Vector mean = forward(policy.mean_net, obs);
  return mean.cwiseMax(policy.action_low).cwiseMin(policy.action_high);
}

nlohmann::json bc_to_json(const GaussianBCPolicy& policy) {
  nlohmann::json doc = network_to_json(policy.mean_net);
  doc["log_std"] = vector_to_json(policy.log_std);
  doc["action_low"] = vector_to_json(policy.action_low);
  doc["action_high"] = vector_to_json(policy.action_high);
  doc["env_id"] = policy.env_id;
  return doc;
}

GaussianBCPolicy bc_from_json(const nlohmann::json& doc) {
  GaussianBCPolicy policy;
  policy.mean_net = network_from_json(doc);
  for (const char* key : {"log_std", "action_low", "action_high", "env_id"}) {
    if (!doc.contains(key)) {
      throw ParseError(0, std::string("BC checkpoint lacks '") + key + "'");
    }
  }
  policy.log_std = vector_from_json(doc["log_std"], "log_std");
  policy.action_low = vector_from_json(doc["action_low"], "action_low");
  policy.action_high = vector_from_json(doc["action_high"], "action_high");
  if (!doc["env_id"].is_string()) throw ParseError(0, "BC checkpoint env_id must be a string");
  policy.env_id = doc["env_id"].get<std::string>();
  const Index act_dim = policy.mean_net.output_dim();
  if (policy.log_std.size() != act_dim || policy.action_low.size() != act_dim ||
      policy.action_high.size() != act_dim) {
    throw ParseError(0, "BC checkpoint dimensions are inconsistent");
  }
  return policy;
}

}  // namespace opil
