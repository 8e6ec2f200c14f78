#include "opil/datastore.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "opil/checkpoint.hpp"

namespace opil {

using nlohmann::json;

LearnerTransition strip_reward(const Transition& transition) {
  return {transition.obs, transition.act, transition.next_obs, transition.done};
}

double Trajectory::total_return() const {
  double total = 0.0;
  for (const Transition& step : steps) total += step.reward;
  return total;
}

std::vector<Trajectory> filter_by_return(std::vector<Trajectory> trajectories,
                                         double threshold) {
  std::erase_if(trajectories, [threshold](const Trajectory& traj) {
    return !(traj.total_return() > threshold);
  });
  return trajectories;
}

std::vector<Trajectory> ExpertDataset::trajectories() const {
  std::vector<Trajectory> out;
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    if (i == 0 || transitions[i].traj_id != transitions[i - 1].traj_id) {
      out.emplace_back();
    }
    out.back().steps.push_back(transitions[i]);
  }
  return out;
}

void ExpertDataset::validate() const {
  const std::vector<Trajectory> trajs = trajectories();
  if (static_cast<int>(trajs.size()) != n_trajectories) {
    throw ParseError(0, "metadata n_trajectories=" + std::to_string(n_trajectories) +
                            " but file holds " + std::to_string(trajs.size()));
  }
  std::size_t line = 2;  // first transition line in the file layout
  for (const Trajectory& traj : trajs) {
    if (static_cast<int>(traj.steps.size()) != spec.horizon) {
      throw ParseError(line, "trajectory " + std::to_string(traj.steps.front().traj_id) +
                                 " has " + std::to_string(traj.steps.size()) +
                                 " steps, expected horizon " +
                                 std::to_string(spec.horizon));
    }
    for (std::size_t t = 0; t < traj.steps.size(); ++t, ++line) {
      const Transition& s = traj.steps[t];
      if (s.obs.size() != spec.obs_dim || s.next_obs.size() != spec.obs_dim ||
          s.act.size() != spec.act_dim) {
        throw ParseError(line, "record dimensions do not match metadata (obs_dim " +
                                   std::to_string(spec.obs_dim) + ", act_dim " +
                                   std::to_string(spec.act_dim) + ")");
      }
      if (s.t != static_cast<int>(t)) {
        throw ParseError(line, "expected t=" + std::to_string(t) + ", found " +
                                   std::to_string(s.t));
      }
      if (s.done != (t + 1 == traj.steps.size())) {
        throw ParseError(line, "done flag must be set exactly on the final step");
      }
    }
    if (traj.total_return() < filter_threshold) {
      throw ParseError(0, "trajectory " + std::to_string(traj.steps.front().traj_id) +
                              " return is below the recorded filter threshold");
    }
  }
}

ExpertDataset make_dataset(const EnvSpec& spec,
                           const std::vector<Trajectory>& trajectories,
                           double filter_threshold) {
  ExpertDataset dataset;
  dataset.spec = spec;
  dataset.filter_threshold = filter_threshold;
  dataset.n_trajectories = static_cast<int>(trajectories.size());
  if (!trajectories.empty()) {
    std::vector<double> returns;
    for (const Trajectory& traj : trajectories) {
      returns.push_back(traj.total_return());
      dataset.transitions.insert(dataset.transitions.end(), traj.steps.begin(),
                                 traj.steps.end());
    }
    dataset.return_stats.mean =
        std::accumulate(returns.begin(), returns.end(), 0.0) /
        static_cast<double>(returns.size());
    dataset.return_stats.min = *std::min_element(returns.begin(), returns.end());
    dataset.return_stats.max = *std::max_element(returns.begin(), returns.end());
  }
  return dataset;
}

namespace {

// JSON has no infinities; non-finite thresholds are written as strings.
json encode_threshold(double value) {
  if (std::isfinite(value)) return value;
  if (std::isnan(value)) return "nan";
  return value > 0 ? "inf" : "-inf";
}

double decode_threshold(const json& value) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) {
    const std::string s = value.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw ParseError(1, "filter_threshold must be a number, \"inf\" or \"-inf\"");
}

json metadata_json(const ExpertDataset& d) {
  return json{{"env_id", d.spec.env_id},
              {"obs_dim", d.spec.obs_dim},
              {"act_dim", d.spec.act_dim},
              {"action_low", vector_to_json(d.spec.action_low)},
              {"action_high", vector_to_json(d.spec.action_high)},
              {"horizon", d.spec.horizon},
              {"n_trajectories", d.n_trajectories},
              {"filter_threshold", encode_threshold(d.filter_threshold)},
              {"return_mean", d.return_stats.mean},
              {"return_min", d.return_stats.min},
              {"return_max", d.return_stats.max}};
}

json transition_json(const Transition& s) {
  return json{{"traj_id", s.traj_id},
              {"t", s.t},
              {"obs", vector_to_json(s.obs)},
              {"act", vector_to_json(s.act)},
              {"next_obs", vector_to_json(s.next_obs)},
              {"done", s.done},
              {"reward", s.reward}};
}

template <class F>
auto at_line(std::size_t line, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ParseError& e) {
    if (e.line() != 0) throw;
    throw ParseError(line, e.what());
  } catch (const json::exception& e) {
    throw ParseError(line, e.what());
  } catch (const Error& e) {
    throw ParseError(line, e.what());
  }
}

}  // namespace

void save_dataset(const ExpertDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << metadata_json(dataset).dump() << '\n';
  for (const Transition& s : dataset.transitions) {
    out << transition_json(s).dump() << '\n';
  }
  if (!out) throw Error("failed writing " + path.string());
}

ExpertDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path.string());

  ExpertDataset dataset;
  std::string text;
  if (!std::getline(in, text)) throw ParseError(1, "empty dataset file");

  at_line(1, [&] {
    const json meta = json::parse(text);
    EnvSpec& spec = dataset.spec;
    spec.env_id = meta.at("env_id").get<std::string>();
    spec.obs_dim = meta.at("obs_dim").get<Index>();
    spec.act_dim = meta.at("act_dim").get<Index>();
    spec.action_low = vector_from_json(meta.at("action_low"), "action_low");
    spec.action_high = vector_from_json(meta.at("action_high"), "action_high");
    spec.horizon = meta.at("horizon").get<int>();
    dataset.n_trajectories = meta.at("n_trajectories").get<int>();
    dataset.filter_threshold = decode_threshold(meta.at("filter_threshold"));
    dataset.return_stats = {meta.at("return_mean").get<double>(),
                            meta.at("return_min").get<double>(),
                            meta.at("return_max").get<double>()};
    if (spec.obs_dim <= 0 || spec.act_dim <= 0 || spec.horizon < 1) {
      throw ParseError(1, "metadata dimensions must be positive");
    }
    if (spec.action_low.size() != spec.act_dim ||
        spec.action_high.size() != spec.act_dim) {
      throw ParseError(1, "action bounds do not match act_dim");
    }
    const EnvSpec& known = env_spec(spec.env_id);
    if (known.obs_dim != spec.obs_dim || known.act_dim != spec.act_dim ||
        known.horizon != spec.horizon || known.action_low != spec.action_low ||
        known.action_high != spec.action_high) {
      throw ParseError(1, "metadata does not match environment " + spec.env_id);
    }
    spec.dt = known.dt;
    return 0;
  });

  std::size_t line = 1;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    at_line(line, [&] {
      const json rec = json::parse(text);
      Transition s;
      s.traj_id = rec.at("traj_id").get<std::uint64_t>();
      s.t = rec.at("t").get<int>();
      s.obs = vector_from_json(rec.at("obs"), "obs");
      s.act = vector_from_json(rec.at("act"), "act");
      s.next_obs = vector_from_json(rec.at("next_obs"), "next_obs");
      s.done = rec.at("done").get<bool>();
      s.reward = rec.at("reward").get<double>();
      if (s.obs.size() != dataset.spec.obs_dim ||
          s.next_obs.size() != dataset.spec.obs_dim) {
        throw ParseError(line, "observation length does not match metadata obs_dim " +
                                   std::to_string(dataset.spec.obs_dim));
      }
      if (s.act.size() != dataset.spec.act_dim) {
        throw ParseError(line, "action length does not match metadata act_dim " +
                                   std::to_string(dataset.spec.act_dim));
      }
      dataset.transitions.push_back(std::move(s));
      return 0;
    });
  }
  at_line(0, [&] {
    dataset.validate();
    return 0;
  });
  return dataset;
}

}  // namespace opil
