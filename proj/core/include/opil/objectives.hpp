#pragma once

#include <nlohmann/json.hpp>

#include <span>
#include <string>
#include <vector>

#include "opil/environments.hpp"
#include "opil/numerics.hpp"

namespace opil {

/// Tabular reward probabilities r in [0, 1] on expert and non-expert pairs.
struct RewardTable {
  std::vector<double> r_expert;
  std::vector<double> r_beta;
};

/// mean(r_expert) + mean(H(Bernoulli(r_beta))). Maximised by r_expert = 1,
/// r_beta = 0.5, the optimal rewards the critic targets hard-code.
double reward_objective(const RewardTable& table);

/// Behaviour-cloning baseline: diagonal Gaussian with a state-independent
/// log standard deviation.
struct GaussianBCPolicy {
  NetworkParams mean_net;  // obs -> act_dim, identity output
  Vector log_std;
  Vector action_low;
  Vector action_high;
  std::string env_id;
};

GaussianBCPolicy make_bc_policy(const EnvSpec& spec, std::span<const Index> hidden,
                                Activation hidden_activation, Rng& rng);

struct BcLoss {
  double nll = 0.0;
  Vector mean_grad;     // layout of mean_net.flat()
  Vector log_std_grad;
};

/// Mean negative log-density of `act` columns given `obs` columns.
BcLoss bc_nll_and_grads(const GaussianBCPolicy& policy, const Matrix& obs,
                        const Matrix& act);

/// Deterministic evaluation action: the mean, clamped to the action bounds.
Vector bc_act(const GaussianBCPolicy& policy, const Vector& obs);

/// Network checkpoint plus {"log_std","action_low","action_high","env_id"}.
nlohmann::json bc_to_json(const GaussianBCPolicy& policy);
GaussianBCPolicy bc_from_json(const nlohmann::json& doc);

}  // namespace opil
