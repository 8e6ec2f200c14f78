#include "opil/trainer.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <string>

#include "opil/checkpoint.hpp"
#include "opil/error.hpp"

namespace opil {

using nlohmann::json;

// ---------------------------------------------------------------------------
// configuration
// ---------------------------------------------------------------------------

namespace {

template <class T>
void read_key(const json& doc, const char* key, T& value) {
  if (!doc.contains(key)) return;
  try {
    value = doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& doc, const std::set<std::string>& known) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& item : doc.items()) {
    if (!known.contains(item.key())) {
      throw ConfigError("unknown config key '" + item.key() + "'");
    }
  }
}

Activation read_activation(const json& doc, Activation fallback) {
  if (!doc.contains("hidden_activation")) return fallback;
  if (!doc["hidden_activation"].is_string()) {
    throw ConfigError("hidden_activation must be a string");
  }
  return activation_from_string(doc["hidden_activation"].get<std::string>());
}

void check_hidden(const std::vector<Index>& hidden) {
  for (Index width : hidden) {
    if (width <= 0) throw ConfigError("hidden layer widths must be positive");
  }
}

}  // namespace

void TrainConfig::validate() const {
  env_spec(env_id);
  auto unit = [](double v) { return v > 0.0 && v <= 1.0; };
  if (max_episodes < 0) throw ConfigError("max_episodes must be >= 0");
  if (!unit(gamma)) throw ConfigError("gamma must lie in (0, 1]");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
  if (!(actor_lr >= 0.0 && actor_lr <= 1.0)) throw ConfigError("actor_lr must lie in [0, 1]");
  if (!(critic_lr >= 0.0 && critic_lr <= 1.0)) throw ConfigError("critic_lr must lie in [0, 1]");
  if (batch_expert < 1 || batch_beta < 1) throw ConfigError("batch sizes must be >= 1");
  if (noise_dim < -1) throw ConfigError("noise_dim must be >= 0 (or -1 for act_dim)");
  if (!(clamp_eps > 0.0 && clamp_eps < 0.5)) throw ConfigError("clamp_eps must lie in (0, 0.5)");
  if (k_next_samples < 1) throw ConfigError("k_next_samples must be >= 1");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (eval_episodes < 1) throw ConfigError("eval_episodes must be >= 1");
  if (buffer_capacity < 1) throw ConfigError("buffer_capacity must be >= 1");
  check_hidden(hidden);
}

TrainConfig TrainConfig::resolved() const {
  validate();
  TrainConfig out = *this;
  if (out.noise_dim < 0) out.noise_dim = static_cast<int>(env_spec(env_id).act_dim);
  return out;
}

json to_json(const TrainConfig& c) {
  return json{{"env_id", c.env_id},
              {"seed", c.seed},
              {"max_episodes", c.max_episodes},
              {"gamma", c.gamma},
              {"tau", c.tau},
              {"actor_lr", c.actor_lr},
              {"critic_lr", c.critic_lr},
              {"batch_expert", c.batch_expert},
              {"batch_beta", c.batch_beta},
              {"noise_dim", c.noise_dim},
              {"clamp_eps", c.clamp_eps},
              {"k_next_samples", c.k_next_samples},
              {"eval_every", c.eval_every},
              {"eval_episodes", c.eval_episodes},
              {"buffer_capacity", c.buffer_capacity},
              {"include_gamma_in_target", c.include_gamma_in_target},
              {"hidden", c.hidden},
              {"hidden_activation", std::string(to_string(c.hidden_activation))},
              {"eval_seed", c.eval_seed}};
}

TrainConfig train_config_from_json(const json& doc) {
  reject_unknown(doc, {"env_id", "seed", "max_episodes", "gamma", "tau", "actor_lr",
                       "critic_lr", "batch_expert", "batch_beta", "noise_dim",
                       "clamp_eps", "k_next_samples", "eval_every", "eval_episodes",
                       "buffer_capacity", "include_gamma_in_target", "hidden",
                       "hidden_activation", "eval_seed"});
  TrainConfig c;
  read_key(doc, "env_id", c.env_id);
  read_key(doc, "seed", c.seed);
  read_key(doc, "max_episodes", c.max_episodes);
  read_key(doc, "gamma", c.gamma);
  read_key(doc, "tau", c.tau);
  read_key(doc, "actor_lr", c.actor_lr);
  read_key(doc, "critic_lr", c.critic_lr);
  read_key(doc, "batch_expert", c.batch_expert);
  read_key(doc, "batch_beta", c.batch_beta);
  read_key(doc, "noise_dim", c.noise_dim);
  read_key(doc, "clamp_eps", c.clamp_eps);
  read_key(doc, "k_next_samples", c.k_next_samples);
  read_key(doc, "eval_every", c.eval_every);
  read_key(doc, "eval_episodes", c.eval_episodes);
  read_key(doc, "buffer_capacity", c.buffer_capacity);
  read_key(doc, "include_gamma_in_target", c.include_gamma_in_target);
  read_key(doc, "hidden", c.hidden);
  read_key(doc, "eval_seed", c.eval_seed);
  c.hidden_activation = read_activation(doc, c.hidden_activation);
  try {
    c.validate();
  } catch (const EnvError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

void BcConfig::validate() const {
  env_spec(env_id);
  if (updates < 0) throw ConfigError("updates must be >= 0");
  if (!(lr >= 0.0 && lr <= 1.0)) throw ConfigError("lr must lie in [0, 1]");
  if (batch < 1) throw ConfigError("batch must be >= 1");
  if (eval_episodes < 1) throw ConfigError("eval_episodes must be >= 1");
  check_hidden(hidden);
}

json to_json(const BcConfig& c) {
  return json{{"env_id", c.env_id},
              {"seed", c.seed},
              {"updates", c.updates},
              {"lr", c.lr},
              {"batch", c.batch},
              {"hidden", c.hidden},
              {"hidden_activation", std::string(to_string(c.hidden_activation))},
              {"eval_episodes", c.eval_episodes},
              {"eval_seed", c.eval_seed}};
}

BcConfig bc_config_from_json(const json& doc) {
  reject_unknown(doc, {"env_id", "seed", "updates", "lr", "batch", "hidden",
                       "hidden_activation", "eval_episodes", "eval_seed"});
  BcConfig c;
  read_key(doc, "env_id", c.env_id);
  read_key(doc, "seed", c.seed);
  read_key(doc, "updates", c.updates);
  read_key(doc, "lr", c.lr);
  read_key(doc, "batch", c.batch);
  read_key(doc, "hidden", c.hidden);
  read_key(doc, "eval_episodes", c.eval_episodes);
  read_key(doc, "eval_seed", c.eval_seed);
  c.hidden_activation = read_activation(doc, c.hidden_activation);
  try {
    c.validate();
  } catch (const EnvError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

std::string format_row(const UpdateRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%" PRId64 ",%d,%.17g,%.17g,%.17g,%.17g",
                r.global_step, r.episode, r.critic_loss, r.actor_obj,
                r.q_mean_expert, r.q_mean_beta);
  return buf;
}

std::string format_row(const EvalRow& r) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g", r.episode, r.mean_return,
                r.std_return);
  return buf;
}

Rng derive_rng(std::uint64_t root_seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(root_seed),
                    static_cast<std::uint32_t>(root_seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32), 0x6f70696cu};
  return Rng(seq);
}

namespace {

enum Stream : std::uint64_t { kInitStream = 1, kEnvStream, kSampleStream, kNoiseStream };

}  // namespace

// ---------------------------------------------------------------------------
// evaluation and rollouts
// ---------------------------------------------------------------------------

EvalResult evaluate(const PolicyFn& policy, std::string_view env_id, int n_episodes,
                    std::uint64_t seed) {
  if (n_episodes < 1) throw ConfigError("evaluation needs at least one episode");
  EvalResult result;
  result.returns.reserve(static_cast<std::size_t>(n_episodes));
  for (int i = 0; i < n_episodes; ++i) {
    auto [state, obs] = reset(env_id, seed + static_cast<std::uint64_t>(i));
    double total = 0.0;
    bool done = false;
    while (!done) {
      StepResult s = step(state, policy(obs));
      total += s.reward;
      done = s.done;
      state = s.state;
      obs = std::move(s.observation);
    }
    result.returns.push_back(total);
  }
  const double n = static_cast<double>(n_episodes);
  result.mean_return =
      std::accumulate(result.returns.begin(), result.returns.end(), 0.0) / n;
  double var = 0.0;
  for (double r : result.returns) var += (r - result.mean_return) * (r - result.mean_return);
  result.std_return = std::sqrt(var / n);
  return result;
}

EvalResult evaluate(const ActorPolicy& policy, int n_episodes, std::uint64_t seed) {
  const Vector z = Vector::Zero(policy.noise_dim);
  return evaluate([&](const Vector& obs) { return act(policy, obs, z); },
                  policy.env_id, n_episodes, seed);
}

EvalResult evaluate(const GaussianBCPolicy& policy, int n_episodes, std::uint64_t seed) {
  return evaluate([&](const Vector& obs) { return bc_act(policy, obs); }, policy.env_id,
                  n_episodes, seed);
}

int collect_episode(std::string_view env_id, const ActorPolicy& policy,
                    ReplayBuffer<LearnerTransition>& buffer, Rng& rng) {
  auto [state, obs] = reset(env_id, rng());
  int length = 0;
  bool done = false;
  while (!done) {
    const Vector z = sample_noise(rng, policy.noise_dim);
    Vector a = act(policy, obs, z);
    StepResult s = step(state, a);
    buffer.push({obs, std::move(a), s.observation, s.done});
    done = s.done;
    state = s.state;
    obs = std::move(s.observation);
    ++length;
  }
  return length;
}

// ---------------------------------------------------------------------------
// ImitationTrainer
// ---------------------------------------------------------------------------

ImitationTrainer::ImitationTrainer(const TrainConfig& config, const ExpertDataset& expert)
    : config_(config.resolved()),
      spec_(env_spec(config_.env_id)),
      expert_(std::max<std::size_t>(expert.transitions.size(), 1), spec_.obs_dim,
              spec_.act_dim),
      replay_(config_.buffer_capacity, spec_.obs_dim, spec_.act_dim),
      env_rng_(derive_rng(config_.seed, kEnvStream)),
      sample_rng_(derive_rng(config_.seed, kSampleStream)),
      noise_rng_(derive_rng(config_.seed, kNoiseStream)) {
  if (expert.spec.env_id != config_.env_id) {
    throw ConfigError("config env_id '" + config_.env_id +
                      "' does not match expert dataset env_id '" + expert.spec.env_id + "'");
  }
  if (expert.transitions.empty()) throw ConfigError("expert dataset is empty");
  for (const Transition& t : expert.transitions) expert_.push(strip_reward(t));

  Rng init = derive_rng(config_.seed, kInitStream);
  actor_ = make_actor(spec_, config_.noise_dim, config_.hidden, config_.hidden_activation, init);
  critic1_ = make_critic(spec_.obs_dim, spec_.act_dim, config_.hidden,
                         config_.hidden_activation, config_.clamp_eps, init);
  critic2_ = make_critic(spec_.obs_dim, spec_.act_dim, config_.hidden,
                         config_.hidden_activation, config_.clamp_eps, init);
  target1_ = critic1_;
  target2_ = critic2_;
  actor_adam_ = AdamState(actor_.params.size(), config_.actor_lr);
  critic1_adam_ = AdamState(critic1_.params.size(), config_.critic_lr);
  critic2_adam_ = AdamState(critic2_.params.size(), config_.critic_lr);
}

int ImitationTrainer::collect_episode() {
  const int length = opil::collect_episode(config_.env_id, actor_, replay_, env_rng_);
  env_steps_ += length;
  ++episode_;
  return length;
}

ImitationTrainer::Gathered ImitationTrainer::gather(
    const ReplayBuffer<LearnerTransition>& buffer,
    const std::vector<std::size_t>& indices) const {
  const Index n = static_cast<Index>(indices.size());
  Gathered g{Matrix(spec_.obs_dim, n), Matrix(spec_.act_dim, n),
             Matrix(spec_.obs_dim, n), std::vector<char>(indices.size())};
  for (Index j = 0; j < n; ++j) {
    const LearnerTransition& t = buffer.at(indices[static_cast<std::size_t>(j)]);
    g.obs.col(j) = t.obs;
    g.act.col(j) = t.act;
    g.next_obs.col(j) = t.next_obs;
    g.done[static_cast<std::size_t>(j)] = t.done ? 1 : 0;
  }
  return g;
}

UpdateRow ImitationTrainer::update_step() {
  if (replay_.empty()) throw Error("update_step needs a nonempty replay buffer");

  // (1) mini-batches from both buffers
  const Gathered e = gather(expert_, expert_.sample_indices(
                                         static_cast<std::size_t>(config_.batch_expert),
                                         sample_rng_));
  const Gathered b = gather(replay_, replay_.sample_indices(
                                         static_cast<std::size_t>(config_.batch_beta),
                                         sample_rng_));
  const Index n_e = e.obs.cols();
  const Index n_b = b.obs.cols();

  // (2) next actions from the current policy for the union of next states
  Matrix next_obs(spec_.obs_dim, n_e + n_b);
  next_obs.leftCols(n_e) = e.next_obs;
  next_obs.rightCols(n_b) = b.next_obs;
  std::vector<char> done(e.done);
  done.insert(done.end(), b.done.begin(), b.done.end());

  // (3) clipped-double targets, averaged over K next-action samples
  const double gamma = config_.include_gamma_in_target ? config_.gamma : 1.0;
  Vector base = Vector::Zero(n_e + n_b);
  for (int k = 0; k < config_.k_next_samples; ++k) {
    const Matrix z = sample_noise_batch(noise_rng_, actor_.noise_dim, n_e + n_b);
    const Matrix next_act = act_batch(actor_, next_obs, z);
    base += target_base_batch(target1_, target2_, next_obs, next_act, gamma, done);
  }
  base /= static_cast<double>(config_.k_next_samples);

  last_expert_ = {e.obs, e.act, Vector(n_e)};
  last_beta_ = {b.obs, b.act, Vector(n_b)};
  for (Index j = 0; j < n_e; ++j) {
    last_expert_.target(j) =
        target_from_base(base(j), TargetBranch::kExpert, config_.clamp_eps).p_expert;
  }
  for (Index j = 0; j < n_b; ++j) {
    last_beta_.target(j) =
        target_from_base(base(n_e + j), TargetBranch::kBeta, config_.clamp_eps).p_expert;
  }
  if (hooks_.after_targets) {
    hooks_.after_targets(
        {last_expert_, last_beta_, critic1_, critic2_, target1_, target2_, actor_});
  }

  // (4) critic step
  const CriticLoss loss = critic_loss_and_grads(critic1_, critic2_, last_expert_, last_beta_);
  adam_step(critic1_adam_, critic1_.params, loss.grad1);
  adam_step(critic2_adam_, critic2_.params, loss.grad2);
  if (hooks_.after_critic_step) hooks_.after_critic_step(critic1_, critic2_);

  // (5) actor ascent on a fresh replay batch, through critic 1
  const Gathered fresh = gather(replay_, replay_.sample_indices(
                                             static_cast<std::size_t>(config_.batch_beta),
                                             sample_rng_));
  const PolicyGradient pg = policy_gradient(actor_, critic1_, fresh.obs, noise_rng_);
  adam_step(actor_adam_, actor_.params, -pg.grad);
  if (hooks_.after_actor_step) hooks_.after_actor_step(actor_);

  // (6) soft target updates
  soft_update(critic1_, target1_, config_.tau);
  soft_update(critic2_, target2_, config_.tau);

  ++global_step_;
  return {global_step_, episode_, loss.loss, pg.objective, loss.q_mean_expert,
          loss.q_mean_beta};
}

EvalResult ImitationTrainer::evaluate_policy() const {
  return evaluate(actor_, config_.eval_episodes, config_.eval_seed);
}

json ImitationTrainer::last_batch_json() const {
  auto batch_json = [](const CriticBatch& batch) {
    json cols = json::array();
    for (Index j = 0; j < batch.obs.cols(); ++j) {
      cols.push_back({{"obs", vector_to_json(batch.obs.col(j))},
                      {"act", vector_to_json(batch.act.col(j))},
                      {"target", j < batch.target.size() ? batch.target(j) : 0.0}});
    }
    return cols;
  };
  return json{{"global_step", global_step_},
              {"episode", episode_},
              {"expert", batch_json(last_expert_)},
              {"beta", batch_json(last_beta_)}};
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

void save_actor(const ActorPolicy& policy, const std::filesystem::path& path) {
  write_json_file(path, actor_to_json(policy));
}

ActorPolicy load_actor(const std::filesystem::path& path) {
  return actor_from_json(read_json_file(path));
}

void save_critic(const CriticNet& critic, const std::filesystem::path& path) {
  write_json_file(path, critic_to_json(critic));
}

CriticNet load_critic(const std::filesystem::path& path) {
  return critic_from_json(read_json_file(path));
}

void save_bc(const GaussianBCPolicy& policy, const std::filesystem::path& path) {
  write_json_file(path, bc_to_json(policy));
}

GaussianBCPolicy load_bc(const std::filesystem::path& path) {
  return bc_from_json(read_json_file(path));
}

namespace {

class RunWriter {
 public:
  RunWriter(const std::filesystem::path& dir, const json& config) : dir_(dir) {
    std::filesystem::create_directories(dir_);
    write_json_file(dir_ / "config.json", config);
    metrics_.open(dir_ / "metrics.csv");
    eval_.open(dir_ / "eval.csv");
    if (!metrics_ || !eval_) throw Error("cannot create run files in " + dir_.string());
    metrics_ << kMetricsHeader << '\n';
    eval_ << kEvalHeader << '\n';
  }

  void update(const UpdateRow& row) { metrics_ << format_row(row) << '\n'; }
  void eval(const EvalRow& row) { eval_ << format_row(row) << '\n'; }

  void flush() {
    metrics_.flush();
    eval_.flush();
  }

  void checkpoint(const ImitationTrainer& trainer) {
    save_actor(trainer.actor(), dir_ / "actor.ckpt");
    save_critic(trainer.critic1(), dir_ / "critic1.ckpt");
    save_critic(trainer.critic2(), dir_ / "critic2.ckpt");
  }

  void diagnostics(const json& doc) { write_json_file(dir_ / "diagnostics.json", doc); }

 private:
  std::filesystem::path dir_;
  std::ofstream metrics_;
  std::ofstream eval_;
};

}  // namespace

TrainResult train(const TrainConfig& config, const ExpertDataset& expert,
                  const TrainOptions& options) {
  ImitationTrainer trainer(config, expert);
  const TrainConfig& cfg = trainer.config();

  std::optional<RunWriter> writer;
  if (options.run_dir) writer.emplace(*options.run_dir, to_json(cfg));

  TrainResult result;
  bool stop = false;
  auto run_eval = [&] {
    const EvalResult ev = trainer.evaluate_policy();
    const EvalRow row{trainer.episode(), ev.mean_return, ev.std_return};
    result.metrics.evals.push_back(row);
    if (writer) {
      writer->eval(row);
      writer->flush();
      writer->checkpoint(trainer);
    }
    if (options.on_eval && !options.on_eval(row, trainer.env_steps())) stop = true;
  };

  run_eval();
  while (!stop && trainer.episode() < cfg.max_episodes) {
    const int length = trainer.collect_episode();
    for (int u = 0; u < length; ++u) {
      UpdateRow row;
      try {
        row = trainer.update_step();
      } catch (const NumericError& e) {
        if (writer) {
          json dump = trainer.last_batch_json();
          dump["error"] = e.what();
          writer->diagnostics(dump);
          writer->flush();
        }
        throw;
      }
      if (options.keep_update_rows) result.metrics.updates.push_back(row);
      if (writer) writer->update(row);
    }
    if (trainer.episode() % cfg.eval_every == 0 || trainer.episode() == cfg.max_episodes) {
      run_eval();
    } else if (writer) {
      writer->flush();
    }
  }
  if (writer) writer->checkpoint(trainer);

  result.actor = trainer.actor();
  result.critic1 = trainer.critic1();
  result.critic2 = trainer.critic2();
  result.env_steps = trainer.env_steps();
  return result;
}

// ---------------------------------------------------------------------------
// expert data and behaviour cloning
// ---------------------------------------------------------------------------

ExpertDataset generate_expert(std::string_view env_id, int n_target, double threshold,
                              std::uint64_t seed,
                              const std::optional<std::filesystem::path>& out_path,
                              const PendulumExpertGains& gains) {
  if (n_target < 1) throw ConfigError("n_target must be >= 1");
  const EnvSpec& spec = env_spec(env_id);
  const long max_attempts = 100L * n_target;

  std::vector<Trajectory> kept;
  long attempts = 0;
  while (static_cast<int>(kept.size()) < n_target && attempts < max_attempts) {
    const std::uint64_t episode_seed = seed + static_cast<std::uint64_t>(attempts);
    ++attempts;
    Trajectory traj;
    auto [state, obs] = reset(env_id, episode_seed);
    bool done = false;
    while (!done) {
      Vector a = expert_action(env_id, obs, gains);
      StepResult s = step(state, a);
      traj.steps.push_back({obs, std::move(a), s.observation, s.done, s.reward,
                            static_cast<std::uint64_t>(kept.size()), s.state.step_index - 1});
      done = s.done;
      state = s.state;
      obs = std::move(s.observation);
    }
    std::vector<Trajectory> passed = filter_by_return({std::move(traj)}, threshold);
    if (!passed.empty()) kept.push_back(std::move(passed.front()));
  }
  if (static_cast<int>(kept.size()) < n_target) {
    throw Error("expert generation for " + spec.env_id + " kept " +
                std::to_string(kept.size()) + " of " + std::to_string(attempts) +
                " episodes above threshold " + std::to_string(threshold) + " (needed " +
                std::to_string(n_target) + ")");
  }
  ExpertDataset dataset = make_dataset(spec, kept, threshold);
  if (out_path) save_dataset(dataset, *out_path);
  return dataset;
}

BcResult train_bc(const BcConfig& config, const ExpertDataset& expert,
                  const std::optional<std::filesystem::path>& run_dir) {
  config.validate();
  if (expert.spec.env_id != config.env_id) {
    throw ConfigError("config env_id '" + config.env_id +
                      "' does not match expert dataset env_id '" + expert.spec.env_id + "'");
  }
  if (expert.transitions.empty()) throw ConfigError("expert dataset is empty");
  const EnvSpec& spec = env_spec(config.env_id);

  Rng init = derive_rng(config.seed, kInitStream);
  Rng sampler = derive_rng(config.seed, kSampleStream);

  BcResult result;
  result.policy = make_bc_policy(spec, config.hidden, config.hidden_activation, init);
  result.initial_eval = evaluate(result.policy, config.eval_episodes, config.eval_seed);

  AdamState mean_adam(result.policy.mean_net.size(), config.lr);
  AdamState std_adam(result.policy.log_std.size(), config.lr);
  std::uniform_int_distribution<std::size_t> pick(0, expert.transitions.size() - 1);
  Matrix obs(spec.obs_dim, config.batch);
  Matrix act(spec.act_dim, config.batch);
  result.nll_history.reserve(static_cast<std::size_t>(config.updates));
  for (int u = 0; u < config.updates; ++u) {
    for (Index j = 0; j < config.batch; ++j) {
      const Transition& t = expert.transitions[pick(sampler)];
      obs.col(j) = t.obs;
      act.col(j) = t.act;
    }
    const BcLoss loss = bc_nll_and_grads(result.policy, obs, act);
    adam_step(mean_adam, result.policy.mean_net, loss.mean_grad);
    adam_step(std_adam, result.policy.log_std, loss.log_std_grad);
    result.nll_history.push_back(loss.nll);
  }
  result.final_eval = evaluate(result.policy, config.eval_episodes, config.eval_seed);

  if (run_dir) {
    std::filesystem::create_directories(*run_dir);
    write_json_file(*run_dir / "config.json", to_json(config));
    std::ofstream nll(*run_dir / "bc_metrics.csv");
    nll << "update,nll\n";
    char buf[64];
    for (std::size_t i = 0; i < result.nll_history.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%zu,%.17g", i + 1, result.nll_history[i]);
      nll << buf << '\n';
    }
    std::ofstream ev(*run_dir / "eval.csv");
    ev << kEvalHeader << '\n'
       << format_row(EvalRow{0, result.initial_eval.mean_return,
                             result.initial_eval.std_return})
       << '\n'
       << format_row(EvalRow{config.updates, result.final_eval.mean_return,
                             result.final_eval.std_return})
       << '\n';
    save_bc(result.policy, *run_dir / "bc.ckpt");
  }
  return result;
}

}  // namespace opil
