#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "opil/environments.hpp"
#include "opil/error.hpp"
#include "opil/numerics.hpp"

namespace opil {

/// One environment step as recorded on disk. `reward` is for evaluation and
/// filtering only.
struct Transition {
  Vector obs;
  Vector act;
  Vector next_obs;
  bool done = false;
  double reward = 0.0;
  std::uint64_t traj_id = 0;
  int t = 0;

  bool operator==(const Transition& o) const {
    return obs == o.obs && act == o.act && next_obs == o.next_obs &&
           done == o.done && reward == o.reward && traj_id == o.traj_id &&
           t == o.t;
  }
};

/// What the imitation learner is allowed to see: no reward field exists.
struct LearnerTransition {
  Vector obs;
  Vector act;
  Vector next_obs;
  bool done = false;
};

LearnerTransition strip_reward(const Transition& transition);

/// Fixed-capacity FIFO ring of transitions with uniform sampling.
template <class T>
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, Index obs_dim, Index act_dim)
      : capacity_(capacity), obs_dim_(obs_dim), act_dim_(act_dim) {
    if (capacity == 0) throw ConfigError("replay buffer capacity must be >= 1");
  }

  void push(T transition) {
    if (transition.obs.size() != obs_dim_ ||
        transition.next_obs.size() != obs_dim_ ||
        transition.act.size() != act_dim_) {
      throw DimensionError(
          "transition dimensions (obs " + std::to_string(transition.obs.size()) +
          ", act " + std::to_string(transition.act.size()) + ", next_obs " +
          std::to_string(transition.next_obs.size()) +
          ") do not match buffer (obs " + std::to_string(obs_dim_) + ", act " +
          std::to_string(act_dim_) + ")");
    }
    if (storage_.size() < capacity_) {
      storage_.push_back(std::move(transition));
    } else {
      storage_[head_] = std::move(transition);
      head_ = (head_ + 1) % capacity_;
    }
  }

  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return storage_.empty(); }
  Index obs_dim() const { return obs_dim_; }
  Index act_dim() const { return act_dim_; }

  /// i = 0 is the oldest surviving transition.
  const T& at(std::size_t i) const {
    return storage_[(head_ + i) % storage_.size()];
  }

  /// Uniform draw with replacement over the current contents.
  std::vector<std::size_t> sample_indices(std::size_t batch_size, Rng& rng) const {
    if (storage_.empty()) throw Error("cannot sample from an empty buffer");
    std::uniform_int_distribution<std::size_t> pick(0, storage_.size() - 1);
    std::vector<std::size_t> out(batch_size);
    for (auto& i : out) i = pick(rng);
    return out;
  }

  std::vector<T> sample(std::size_t batch_size, Rng& rng) const {
    std::vector<T> out;
    out.reserve(batch_size);
    for (std::size_t i : sample_indices(batch_size, rng)) out.push_back(at(i));
    return out;
  }

 private:
  std::size_t capacity_;
  Index obs_dim_;
  Index act_dim_;
  std::vector<T> storage_;
  std::size_t head_ = 0;  // oldest element once full
};

struct Trajectory {
  std::vector<Transition> steps;

  double total_return() const;
};

struct ReturnStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Static expert buffer: complete, filtered trajectories plus metadata.
struct ExpertDataset {
  EnvSpec spec;
  std::vector<Transition> transitions;
  int n_trajectories = 0;
  double filter_threshold = -std::numeric_limits<double>::infinity();
  ReturnStats return_stats;

  /// Splits transitions back into trajectories, in file order.
  std::vector<Trajectory> trajectories() const;
  /// Throws ParseError describing the first violated invariant.
  void validate() const;
};

ExpertDataset make_dataset(const EnvSpec& spec,
                           const std::vector<Trajectory>& trajectories,
                           double filter_threshold);

/// Keeps trajectories whose total return is strictly greater than
/// `threshold`, preserving order.
std::vector<Trajectory> filter_by_return(std::vector<Trajectory> trajectories,
                                         double threshold);

/// Line 1: metadata object; lines 2..: one transition object each.
void save_dataset(const ExpertDataset& dataset, const std::filesystem::path& path);
ExpertDataset load_dataset(const std::filesystem::path& path);

}  // namespace opil
