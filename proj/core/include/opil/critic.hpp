#pragma once

#include <nlohmann/json.hpp>

#include <span>
#include <vector>

#include "opil/numerics.hpp"

namespace opil {

inline constexpr double kDefaultClampEps = 1e-6;

/// Two-outcome distribution over {expert, non-expert}.
struct BernoulliProb {
  double p_expert = 0.5;

  double p_other() const { return 1.0 - p_expert; }
};

/// Which optimal-reward target a sample uses: expert pairs bootstrap toward
/// r* = 1, replay pairs toward r* = 0.5.
enum class TargetBranch { kExpert, kBeta };

/// Probabilistic Q-function q(s, a) in [eps, 1 - eps]; Q = log q.
struct CriticNet {
  NetworkParams params;  // input obs ++ act, one sigmoid output
  Index obs_dim = 0;
  double clamp_eps = kDefaultClampEps;

  Index act_dim() const { return params.input_dim() - obs_dim; }
};

CriticNet make_critic(Index obs_dim, Index act_dim, std::span<const Index> hidden,
                      Activation hidden_activation, double clamp_eps, Rng& rng);

double clamp_prob(double p, double eps);
/// clamp(sigmoid(raw), eps, 1 - eps)
double q_from_raw(double raw, double eps);

/// Stacks observations over actions, column by column.
Matrix critic_input(const Matrix& obs, const Matrix& act);

BernoulliProb q_prob(const CriticNet& critic, const Vector& obs, const Vector& act);
/// Clamped q for every column.
Vector q_batch(const CriticNet& critic, const Matrix& obs, const Matrix& act);

/// Natural-log entropy; 0 at p in {0, 1}.
double bernoulli_entropy(double p);
inline double bernoulli_entropy(BernoulliProb p) { return bernoulli_entropy(p.p_expert); }

/// H((a+b)/2) - (H(a) + H(b))/2, in [0, ln 2].
double bernoulli_jsd(BernoulliProb a, BernoulliProb b);
/// d JSD(p || t) / dp
double bernoulli_jsd_grad(double p, double t);

/// Clipped-double bootstrap base: 1 when done, else exp(gamma * min_i log q_i).
Vector target_base_batch(const CriticNet& target1, const CriticNet& target2,
                         const Matrix& next_obs, const Matrix& next_act,
                         double gamma, std::span<const char> done);

BernoulliProb target_from_base(double base, TargetBranch branch, double clamp_eps);

BernoulliProb target_prob(const CriticNet& target1, const CriticNet& target2,
                          const Vector& next_obs, const Vector& next_act,
                          double gamma, bool done, TargetBranch branch);

/// Inputs and (constant) target probabilities for one half of the critic loss.
struct CriticBatch {
  Matrix obs;
  Matrix act;
  Vector target;  // p_expert of the target distribution, one per column
};

struct CriticLoss {
  double loss = 0.0;
  Vector grad1;
  Vector grad2;
  double q_mean_expert = 0.0;  // critic 1
  double q_mean_beta = 0.0;    // critic 1
};

/// Sum over both critics of mean JSD on the expert batch plus mean JSD on the
/// replay batch. Targets are treated as constants. Throws NumericError on a
/// non-finite loss.
CriticLoss critic_loss_and_grads(const CriticNet& critic1, const CriticNet& critic2,
                                 const CriticBatch& expert, const CriticBatch& beta);

/// Loss of a single critic (the summand above), without gradients.
double critic_loss_single(const CriticNet& critic, const CriticBatch& expert,
                          const CriticBatch& beta);

/// Values and input gradients of `weight * sum_j log q(obs_j, act_j)`.
struct LogQGradient {
  Vector log_q;
  Matrix obs_grad;
  Matrix act_grad;
};

LogQGradient log_q_input_gradient(const CriticNet& critic, const Matrix& obs,
                                  const Matrix& act, double weight);

/// target <- tau * main + (1 - tau) * target
void soft_update(const NetworkParams& main, NetworkParams& target, double tau);
void soft_update(const CriticNet& main, CriticNet& target, double tau);

/// [reward_log + gamma * log q(s', a') * (1 - done)] - log q(s, a)
double bellman_log_residual(const CriticNet& critic, double reward_log,
                            const Vector& obs, const Vector& act,
                            const Vector& next_obs, const Vector& next_act,
                            bool done, double gamma);

/// Network checkpoint plus {"clamp_eps","obs_dim"}.
nlohmann::json critic_to_json(const CriticNet& critic);
CriticNet critic_from_json(const nlohmann::json& doc);

}  // namespace opil
