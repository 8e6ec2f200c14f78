#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "opil/actor.hpp"
#include "opil/critic.hpp"
#include "opil/datastore.hpp"
#include "opil/environments.hpp"
#include "opil/objectives.hpp"

namespace opil {

/// Every hyperparameter of the imitation loop. Absent JSON keys take these
/// defaults; unknown keys are rejected.
struct TrainConfig {
  std::string env_id{kLineReacherId};
  std::uint64_t seed = 0;
  int max_episodes = 500;
  double gamma = 0.8;
  double tau = 0.001;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  int batch_expert = 128;
  int batch_beta = 128;
  int noise_dim = -1;  // -1 resolves to act_dim
  double clamp_eps = kDefaultClampEps;
  int k_next_samples = 1;
  int eval_every = 10;
  int eval_episodes = 20;
  std::size_t buffer_capacity = 1'000'000;
  bool include_gamma_in_target = true;
  std::vector<Index> hidden{64, 64};
  Activation hidden_activation = Activation::kRelu;
  std::uint64_t eval_seed = 1'000'000;

  /// Fills environment-dependent defaults (noise_dim) and checks ranges.
  TrainConfig resolved() const;
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& doc);

struct UpdateRow {
  std::int64_t global_step = 0;
  int episode = 0;
  double critic_loss = 0.0;
  double actor_obj = 0.0;
  double q_mean_expert = 0.0;
  double q_mean_beta = 0.0;
};

struct EvalRow {
  int episode = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
};

struct RunMetrics {
  std::vector<UpdateRow> updates;
  std::vector<EvalRow> evals;
};

inline constexpr const char* kMetricsHeader =
    "global_step,episode,critic_loss,actor_obj,q_mean_expert,q_mean_beta";
inline constexpr const char* kEvalHeader = "episode,mean_return,std_return";

std::string format_row(const UpdateRow& row);
std::string format_row(const EvalRow& row);

/// Derives an independent generator for a named stream of a run.
Rng derive_rng(std::uint64_t root_seed, std::uint64_t stream);

using PolicyFn = std::function<Vector(const Vector&)>;

struct EvalResult {
  double mean_return = 0.0;
  double std_return = 0.0;  // population standard deviation
  std::vector<double> returns;
};

/// Runs n episodes with reset seeds seed, seed+1, ..., seed+n-1.
EvalResult evaluate(const PolicyFn& policy, std::string_view env_id, int n_episodes,
                    std::uint64_t seed);
/// Actor evaluation uses z = 0.
EvalResult evaluate(const ActorPolicy& policy, int n_episodes, std::uint64_t seed);
EvalResult evaluate(const GaussianBCPolicy& policy, int n_episodes, std::uint64_t seed);

/// Rolls one full episode with fresh noise every step, pushing reward-free
/// transitions. The reset seed and the noise both come from `rng`.
int collect_episode(std::string_view env_id, const ActorPolicy& policy,
                    ReplayBuffer<LearnerTransition>& buffer, Rng& rng);

/// Snapshot handed to instrumentation after critic targets are built and
/// before any parameter changes.
struct TargetSnapshot {
  const CriticBatch& expert;
  const CriticBatch& beta;
  const CriticNet& critic1;
  const CriticNet& critic2;
  const CriticNet& target1;
  const CriticNet& target2;
  const ActorPolicy& actor;
};

struct UpdateHooks {
  std::function<void(const TargetSnapshot&)> after_targets;
  std::function<void(const CriticNet& critic1, const CriticNet& critic2)> after_critic_step;
  std::function<void(const ActorPolicy& actor)> after_actor_step;
};

/// Owns the learner state: actor, twin critics and their targets, both
/// buffers, optimiser states and random streams.
class ImitationTrainer {
 public:
  /// Expert rewards are dropped on construction; the learner never sees them.
  ImitationTrainer(const TrainConfig& config, const ExpertDataset& expert);

  /// One episode into the replay buffer; returns its length.
  int collect_episode();
  /// One critic step, one actor step and one soft target update.
  UpdateRow update_step();
  EvalResult evaluate_policy() const;

  void set_hooks(UpdateHooks hooks) { hooks_ = std::move(hooks); }

  const TrainConfig& config() const { return config_; }
  const ActorPolicy& actor() const { return actor_; }
  const CriticNet& critic1() const { return critic1_; }
  const CriticNet& critic2() const { return critic2_; }
  const CriticNet& target1() const { return target1_; }
  const CriticNet& target2() const { return target2_; }
  const ReplayBuffer<LearnerTransition>& replay() const { return replay_; }
  const ReplayBuffer<LearnerTransition>& expert_buffer() const { return expert_; }
  std::int64_t global_step() const { return global_step_; }
  std::int64_t env_steps() const { return env_steps_; }
  int episode() const { return episode_; }

  /// The batches of the most recent update, for abort diagnostics.
  nlohmann::json last_batch_json() const;

 private:
  struct Gathered {
    Matrix obs;
    Matrix act;
    Matrix next_obs;
    std::vector<char> done;
  };
  Gathered gather(const ReplayBuffer<LearnerTransition>& buffer,
                  const std::vector<std::size_t>& indices) const;

  TrainConfig config_;
  EnvSpec spec_;
  ActorPolicy actor_;
  CriticNet critic1_;
  CriticNet critic2_;
  CriticNet target1_;
  CriticNet target2_;
  AdamState actor_adam_;
  AdamState critic1_adam_;
  AdamState critic2_adam_;
  ReplayBuffer<LearnerTransition> expert_;
  ReplayBuffer<LearnerTransition> replay_;
  Rng env_rng_;
  Rng sample_rng_;
  Rng noise_rng_;
  UpdateHooks hooks_;
  std::int64_t global_step_ = 0;
  std::int64_t env_steps_ = 0;
  int episode_ = 0;
  CriticBatch last_expert_;
  CriticBatch last_beta_;
};

struct TrainResult {
  ActorPolicy actor;
  CriticNet critic1;
  CriticNet critic2;
  RunMetrics metrics;
  std::int64_t env_steps = 0;
};

struct TrainOptions {
  /// When set: config.json, metrics.csv, eval.csv and checkpoints go here.
  std::optional<std::filesystem::path> run_dir;
  /// Called after every evaluation; return false to stop early.
  std::function<bool(const EvalRow&, std::int64_t env_steps)> on_eval;
  bool keep_update_rows = true;
};

/// Runs the full imitation loop: per episode, one rollout of length t followed
/// by exactly t update steps, with periodic deterministic evaluation. On a
/// numerical failure the last batch is written to run_dir/diagnostics.json and
/// the NumericError is rethrown.
TrainResult train(const TrainConfig& config, const ExpertDataset& expert,
                  const TrainOptions& options = {});

void save_actor(const ActorPolicy& policy, const std::filesystem::path& path);
ActorPolicy load_actor(const std::filesystem::path& path);
void save_critic(const CriticNet& critic, const std::filesystem::path& path);
CriticNet load_critic(const std::filesystem::path& path);

/// Rolls scripted-expert episodes with seeds seed, seed+1, ... until
/// `n_target` trajectories have return > threshold. Gives up after
/// 100 * n_target attempts. Writes the dataset when `out_path` is set.
ExpertDataset generate_expert(std::string_view env_id, int n_target, double threshold,
                              std::uint64_t seed,
                              const std::optional<std::filesystem::path>& out_path = {},
                              const PendulumExpertGains& gains = {});

struct BcConfig {
  std::string env_id{kLineReacherId};
  std::uint64_t seed = 0;
  int updates = 5000;
  double lr = 1e-3;
  int batch = 128;
  std::vector<Index> hidden{64, 64};
  Activation hidden_activation = Activation::kRelu;
  int eval_episodes = 20;
  std::uint64_t eval_seed = 1'000'000;

  void validate() const;
};

nlohmann::json to_json(const BcConfig& config);
BcConfig bc_config_from_json(const nlohmann::json& doc);

struct BcResult {
  GaussianBCPolicy policy;
  std::vector<double> nll_history;  // one entry per update
  EvalResult initial_eval;
  EvalResult final_eval;
};

/// Minibatch Adam on the Gaussian negative log-likelihood of expert actions.
BcResult train_bc(const BcConfig& config, const ExpertDataset& expert,
                  const std::optional<std::filesystem::path>& run_dir = {});

void save_bc(const GaussianBCPolicy& policy, const std::filesystem::path& path);
GaussianBCPolicy load_bc(const std::filesystem::path& path);

}  // namespace opil
