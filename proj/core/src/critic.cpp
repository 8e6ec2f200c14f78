#include "opil/critic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "opil/checkpoint.hpp"
#include "opil/error.hpp"

namespace opil {
namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

bool inside_clamp(double y, double eps) { return y > eps && y < 1.0 - eps; }

void check_pair(const CriticNet& critic, Index obs_rows, Index act_rows,
                Index obs_cols, Index act_cols) {
  if (obs_rows != critic.obs_dim || obs_rows + act_rows != critic.params.input_dim()) {
    throw DimensionError("critic expects obs_dim " + std::to_string(critic.obs_dim) +
                         " and act_dim " + std::to_string(critic.act_dim()) +
                         ", got " + std::to_string(obs_rows) + " and " +
                         std::to_string(act_rows));
  }
  if (obs_cols != act_cols) {
    throw DimensionError("observation and action batches differ in size");
  }
}

}  // namespace

CriticNet make_critic(Index obs_dim, Index act_dim, std::span<const Index> hidden,
                      Activation hidden_activation, double clamp_eps, Rng& rng) {
  if (!(clamp_eps > 0.0 && clamp_eps < 0.5)) {
    throw ConfigError("clamp_eps must lie in (0, 0.5)");
  }
  CriticNet critic;
  critic.params = NetworkParams::mlp(obs_dim + act_dim, hidden, 1,
                                     hidden_activation, Activation::kSigmoid);
  critic.obs_dim = obs_dim;
  critic.clamp_eps = clamp_eps;
  init_uniform(critic.params, rng);
  return critic;
}

double clamp_prob(double p, double eps) { return std::clamp(p, eps, 1.0 - eps); }

double q_from_raw(double raw, double eps) { return clamp_prob(sigmoid(raw), eps); }

Matrix critic_input(const Matrix& obs, const Matrix& act) {
  if (obs.cols() != act.cols()) {
    throw DimensionError("observation and action batches differ in size");
  }
  Matrix input(obs.rows() + act.rows(), obs.cols());
  input.topRows(obs.rows()) = obs;
  input.bottomRows(act.rows()) = act;
  return input;
}

Vector q_batch(const CriticNet& critic, const Matrix& obs, const Matrix& act) {
  check_pair(critic, obs.rows(), act.rows(), obs.cols(), act.cols());
  const Matrix y = forward_batch(critic.params, critic_input(obs, act));
  const double eps = critic.clamp_eps;
  return y.row(0).transpose().unaryExpr([eps](double v) { return clamp_prob(v, eps); });
}

BernoulliProb q_prob(const CriticNet& critic, const Vector& obs, const Vector& act) {
  return {q_batch(critic, obs, act)(0)};
}

double bernoulli_entropy(double p) {
  auto plogp = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
  return -plogp(p) - plogp(1.0 - p);
}

double bernoulli_jsd(BernoulliProb a, BernoulliProb b) {
  // Equal to H(m) - (H(a) + H(b)) / 2, but written as KL terms in the exact
  // difference pa - pb so that nearly equal inputs do not cancel O(1) entropies
  // or pick up the rounding of m. Ordering the inputs keeps it exactly symmetric.
  auto term = [](double x, double r) { return x > 0.0 ? x * std::log1p(r) : 0.0; };
  const double pa = std::max(a.p_expert, b.p_expert);
  const double pb = std::min(a.p_expert, b.p_expert);
  const double half_delta = 0.5 * (pa - pb);
  const double m = pb + half_delta;
  const double m_c = (1.0 - pb) - half_delta;
  const double u = m > 0.0 ? half_delta / m : 0.0;
  const double v = m_c > 0.0 ? half_delta / m_c : 0.0;
  const double jsd =
      0.5 * ((term(pa, u) + term(pb, -u)) + (term(1.0 - pa, -v) + term(1.0 - pb, v)));
  return std::max(0.0, jsd);
}

double bernoulli_jsd_grad(double p, double t) {
  return 0.5 * (logit(p) - logit(0.5 * (p + t)));
}

Vector target_base_batch(const CriticNet& target1, const CriticNet& target2,
                         const Matrix& next_obs, const Matrix& next_act,
                         double gamma, std::span<const char> done) {
  if (static_cast<Index>(done.size()) != next_obs.cols()) {
    throw DimensionError("done flags do not match the next-state batch");
  }
  const Vector q1 = q_batch(target1, next_obs, next_act);
  const Vector q2 = q_batch(target2, next_obs, next_act);
  Vector base(q1.size());
  for (Index j = 0; j < base.size(); ++j) {
    if (done[static_cast<std::size_t>(j)]) {
      base(j) = 1.0;
    } else {
      const double q_min = std::min(std::log(q1(j)), std::log(q2(j)));
      base(j) = std::exp(gamma * q_min);
    }
  }
  return base;
}

BernoulliProb target_from_base(double base, TargetBranch branch, double clamp_eps) {
  const double p = branch == TargetBranch::kExpert ? base : 0.5 * base;
  return {clamp_prob(p, clamp_eps)};
}

BernoulliProb target_prob(const CriticNet& target1, const CriticNet& target2,
                          const Vector& next_obs, const Vector& next_act,
                          double gamma, bool done, TargetBranch branch) {
  const char flag = done ? 1 : 0;
  const Vector base = target_base_batch(target1, target2, next_obs, next_act, gamma,
                                        std::span<const char>(&flag, 1));
  return target_from_base(base(0), branch, target1.clamp_eps);
}

namespace {

struct SingleCriticTerms {
  double loss = 0.0;
  Vector grad;
  double q_mean_expert = 0.0;
  double q_mean_beta = 0.0;
};

SingleCriticTerms critic_terms(const CriticNet& critic, const CriticBatch& expert,
                               const CriticBatch& beta, bool with_grad) {
  check_pair(critic, expert.obs.rows(), expert.act.rows(), expert.obs.cols(),
             expert.act.cols());
  check_pair(critic, beta.obs.rows(), beta.act.rows(), beta.obs.cols(),
             beta.act.cols());
  const Index n_e = expert.obs.cols();
  const Index n_b = beta.obs.cols();
  if (n_e == 0 || n_b == 0) throw DimensionError("critic batches must be nonempty");
  if (expert.target.size() != n_e || beta.target.size() != n_b) {
    throw DimensionError("target vector does not match its batch");
  }

  Matrix input(critic.params.input_dim(), n_e + n_b);
  input.leftCols(n_e) = critic_input(expert.obs, expert.act);
  input.rightCols(n_b) = critic_input(beta.obs, beta.act);

  const ForwardTrace trace = forward_trace(critic.params, input);
  const auto y = trace.output().row(0);
  const double eps = critic.clamp_eps;

  SingleCriticTerms out;
  Matrix upstream = Matrix::Zero(1, n_e + n_b);
  double sum_e = 0.0;
  double sum_b = 0.0;
  for (Index j = 0; j < n_e + n_b; ++j) {
    const bool is_expert = j < n_e;
    const double t = is_expert ? expert.target(j) : beta.target(j - n_e);
    const double p = clamp_prob(y(j), eps);
    const double weight = 1.0 / static_cast<double>(is_expert ? n_e : n_b);
    out.loss += weight * bernoulli_jsd({p}, {t});
    (is_expert ? sum_e : sum_b) += p;
    if (with_grad && inside_clamp(y(j), eps)) {
      upstream(0, j) = weight * bernoulli_jsd_grad(p, t);
    }
  }
  out.q_mean_expert = sum_e / static_cast<double>(n_e);
  out.q_mean_beta = sum_b / static_cast<double>(n_b);
  if (with_grad) out.grad = backward_batch(critic.params, trace, upstream).params;
  return out;
}

}  // namespace

double critic_loss_single(const CriticNet& critic, const CriticBatch& expert,
                          const CriticBatch& beta) {
  return critic_terms(critic, expert, beta, false).loss;
}

CriticLoss critic_loss_and_grads(const CriticNet& critic1, const CriticNet& critic2,
                                 const CriticBatch& expert, const CriticBatch& beta) {
  SingleCriticTerms a = critic_terms(critic1, expert, beta, true);
  SingleCriticTerms b = critic_terms(critic2, expert, beta, true);
  CriticLoss out;
  out.loss = a.loss + b.loss;
  require_finite(out.loss, "critic loss");
  require_finite(a.grad, "critic 1 gradient");
  require_finite(b.grad, "critic 2 gradient");
  out.grad1 = std::move(a.grad);
  out.grad2 = std::move(b.grad);
  out.q_mean_expert = a.q_mean_expert;
  out.q_mean_beta = a.q_mean_beta;
  return out;
}

LogQGradient log_q_input_gradient(const CriticNet& critic, const Matrix& obs,
                                  const Matrix& act, double weight) {
  check_pair(critic, obs.rows(), act.rows(), obs.cols(), act.cols());
  const ForwardTrace trace = forward_trace(critic.params, critic_input(obs, act));
  const auto y = trace.output().row(0);
  const double eps = critic.clamp_eps;

  LogQGradient out;
  out.log_q.resize(y.size());
  Matrix upstream = Matrix::Zero(1, y.size());
  for (Index j = 0; j < y.size(); ++j) {
    out.log_q(j) = std::log(clamp_prob(y(j), eps));
    if (inside_clamp(y(j), eps)) upstream(0, j) = weight / y(j);
  }
  const Gradients g = backward_batch(critic.params, trace, upstream);
  out.obs_grad = g.input.topRows(obs.rows());
  out.act_grad = g.input.bottomRows(act.rows());
  return out;
}

void soft_update(const NetworkParams& main, NetworkParams& target, double tau) {
  if (!main.same_shape(target)) {
    throw DimensionError("soft update between networks of different shape");
  }
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
  target.mutable_flat() = tau * main.flat() + (1.0 - tau) * target.flat();
}

void soft_update(const CriticNet& main, CriticNet& target, double tau) {
  soft_update(main.params, target.params, tau);
}

double bellman_log_residual(const CriticNet& critic, double reward_log,
                            const Vector& obs, const Vector& act,
                            const Vector& next_obs, const Vector& next_act,
                            bool done, double gamma) {
  const double log_q = std::log(q_prob(critic, obs, act).p_expert);
  const double bootstrap =
      done ? 0.0 : gamma * std::log(q_prob(critic, next_obs, next_act).p_expert);
  return reward_log + bootstrap - log_q;
}

nlohmann::json critic_to_json(const CriticNet& critic) {
  nlohmann::json doc = network_to_json(critic.params);
  doc["clamp_eps"] = critic.clamp_eps;
  doc["obs_dim"] = critic.obs_dim;
  return doc;
}

CriticNet critic_from_json(const nlohmann::json& doc) {
  CriticNet critic;
  critic.params = network_from_json(doc);
  try {
    critic.clamp_eps = doc.at("clamp_eps").get<double>();
    critic.obs_dim = doc.at("obs_dim").get<Index>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("critic checkpoint: ") + e.what());
  }
  if (critic.params.output_dim() != 1 || critic.obs_dim <= 0 ||
      critic.obs_dim >= critic.params.input_dim()) {
    throw ParseError(0, "critic checkpoint dimensions are inconsistent");
  }
  return critic;
}

}  // namespace opil
