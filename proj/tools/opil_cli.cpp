#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <string>

#include "opil/checkpoint.hpp"
#include "opil/datastore.hpp"
#include "opil/error.hpp"
#include "opil/trainer.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kRuntimeError = 1;
constexpr int kUsageError = 2;

double parse_threshold(const std::string& text) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw opil::ConfigError("--threshold: not a number: '" + text + "'");
  }
  if (used != text.size() || std::isnan(value)) {
    throw opil::ConfigError("--threshold: not a number: '" + text + "'");
  }
  return value;
}

json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : "-inf";
}

void print_stats(const opil::ExpertDataset& d) {
  std::printf("env_id          %s\n", d.spec.env_id.c_str());
  std::printf("obs_dim         %ld\n", static_cast<long>(d.spec.obs_dim));
  std::printf("act_dim         %ld\n", static_cast<long>(d.spec.act_dim));
  std::printf("n_trajectories  %d\n", d.n_trajectories);
  std::printf("n_transitions   %zu\n", d.transitions.size());
  std::printf("threshold       %g\n", d.filter_threshold);
  std::printf("return mean     %.6f\n", d.return_stats.mean);
  std::printf("return min      %.6f\n", d.return_stats.min);
  std::printf("return max      %.6f\n", d.return_stats.max);
}

struct GenExpertArgs {
  std::string env;
  int n = 0;
  std::string threshold = "-inf";
  std::uint64_t seed = 0;
  std::string out;
};

int run_gen_expert(const GenExpertArgs& a) {
  const double threshold = parse_threshold(a.threshold);
  const opil::ExpertDataset d = opil::generate_expert(a.env, a.n, threshold, a.seed, fs::path(a.out));
  const json echo{{"command", "gen-expert"},
                  {"env_id", a.env},
                  {"n", a.n},
                  {"threshold", number_or_string(threshold)},
                  {"seed", a.seed},
                  {"out", a.out}};
  opil::write_json_file(a.out + ".config.json", echo);
  std::printf("wrote %s\n", a.out.c_str());
  print_stats(d);
  return 0;
}

struct TrainArgs {
  std::string config;
  std::string expert;
  std::string out;
};

int run_train(const TrainArgs& a) {
  const opil::TrainConfig config =
      opil::train_config_from_json(opil::read_json_file(a.config));
  const opil::ExpertDataset expert = opil::load_dataset(a.expert);
  opil::TrainOptions options;
  options.run_dir = fs::path(a.out);
  options.keep_update_rows = false;
  options.on_eval = [](const opil::EvalRow& row, std::int64_t env_steps) {
    std::printf("episode %5d  env_steps %8lld  mean_return %12.4f  std_return %10.4f\n",
                row.episode, static_cast<long long>(env_steps), row.mean_return,
                row.std_return);
    std::fflush(stdout);
    return true;
  };
  const opil::TrainResult r = opil::train(config, expert, options);
  std::printf("done: %lld env steps, artifacts in %s\n",
              static_cast<long long>(r.env_steps), a.out.c_str());
  return 0;
}

int run_train_bc(const TrainArgs& a) {
  const opil::BcConfig config = opil::bc_config_from_json(opil::read_json_file(a.config));
  const opil::ExpertDataset expert = opil::load_dataset(a.expert);
  const opil::BcResult r = opil::train_bc(config, expert, fs::path(a.out));
  std::printf("initial mean_return %.4f\n", r.initial_eval.mean_return);
  std::printf("final   mean_return %.4f\n", r.final_eval.mean_return);
  std::printf("artifacts in %s\n", a.out.c_str());
  return 0;
}

struct EvalArgs {
  std::string actor;
  std::string env;
  int episodes = 20;
  std::uint64_t seed = 1'000'000;
  bool as_json = false;
};

int run_eval(const EvalArgs& a) {
  // Actor and BC checkpoints share the network format; BC adds log_std.
  const json doc = opil::read_json_file(a.actor);
  const bool is_bc = doc.is_object() && doc.contains("log_std");
  std::string env_id;
  opil::EvalResult r;
  if (is_bc) {
    const opil::GaussianBCPolicy p = opil::bc_from_json(doc);
    env_id = p.env_id;
    if (!a.env.empty() && a.env != env_id) {
      throw opil::ConfigError("--env '" + a.env + "' does not match checkpoint env_id '" +
                              env_id + "'");
    }
    r = opil::evaluate(p, a.episodes, a.seed);
  } else {
    const opil::ActorPolicy p = opil::actor_from_json(doc);
    env_id = p.env_id;
    if (!a.env.empty() && a.env != env_id) {
      throw opil::ConfigError("--env '" + a.env + "' does not match checkpoint env_id '" +
                              env_id + "'");
    }
    r = opil::evaluate(p, a.episodes, a.seed);
  }
  if (a.as_json) {
    const json out{{"policy", is_bc ? "bc" : "actor"},
                   {"env_id", env_id},
                   {"episodes", a.episodes},
                   {"seed", a.seed},
                   {"mean_return", r.mean_return},
                   {"std_return", r.std_return},
                   {"returns", r.returns}};
    std::cout << out.dump() << "\n";
  } else {
    std::printf("policy       %s\n", is_bc ? "bc" : "actor");
    std::printf("env_id       %s\n", env_id.c_str());
    std::printf("episodes     %d (seeds %llu..)\n", a.episodes,
                static_cast<unsigned long long>(a.seed));
    std::printf("mean_return  %.6f\n", r.mean_return);
    std::printf("std_return   %.6f\n", r.std_return);
  }
  return 0;
}

struct InspectArgs {
  std::string data;
  bool as_json = false;
};

int run_inspect(const InspectArgs& a) {
  const opil::ExpertDataset d = opil::load_dataset(a.data);
  if (a.as_json) {
    const json out{{"env_id", d.spec.env_id},
                   {"obs_dim", d.spec.obs_dim},
                   {"act_dim", d.spec.act_dim},
                   {"n_trajectories", d.n_trajectories},
                   {"n_transitions", d.transitions.size()},
                   {"filter_threshold", number_or_string(d.filter_threshold)},
                   {"return_mean", d.return_stats.mean},
                   {"return_min", d.return_stats.min},
                   {"return_max", d.return_stats.max}};
    std::cout << out.dump() << "\n";
  } else {
    print_stats(d);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Off-policy adversarial imitation on small control tasks"};
  app.name("opil");
  app.require_subcommand(1, 1);

  GenExpertArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-expert", "Roll the scripted expert and write a filtered dataset");
  gen_cmd->add_option("--env", gen.env, "Environment id")->required();
  gen_cmd->add_option("--n", gen.n, "Trajectories to keep")->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--threshold", gen.threshold, "Keep returns strictly above this (or -inf)")
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "First reset seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Dataset path (JSON lines)")->required();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train the off-policy imitator");
  train_cmd->add_option("--config", train.config, "JSON config")->required();
  train_cmd->add_option("--expert", train.expert, "Expert dataset")->required();
  train_cmd->add_option("--out", train.out, "Run directory")->required();

  TrainArgs bc;
  auto* bc_cmd = app.add_subcommand("train-bc", "Train the behaviour-cloning baseline");
  bc_cmd->add_option("--config", bc.config, "JSON config")->required();
  bc_cmd->add_option("--expert", bc.expert, "Expert dataset")->required();
  bc_cmd->add_option("--out", bc.out, "Run directory")->required();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate an actor or BC checkpoint");
  eval_cmd->add_option("--actor", ev.actor, "Checkpoint path")->required();
  eval_cmd->add_option("--env", ev.env, "Expected environment id");
  eval_cmd->add_option("--episodes", ev.episodes, "Episodes")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", ev.seed, "First reset seed")->capture_default_str();
  eval_cmd->add_flag("--json", ev.as_json, "Machine-readable output");

  InspectArgs insp;
  auto* inspect_cmd = app.add_subcommand("inspect", "Print dataset metadata and return stats");
  inspect_cmd->add_option("--data", insp.data, "Dataset path")->required();
  inspect_cmd->add_flag("--json", insp.as_json, "Machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*gen_cmd) return run_gen_expert(gen);
    if (*train_cmd) return run_train(train);
    if (*bc_cmd) return run_train_bc(bc);
    if (*eval_cmd) return run_eval(ev);
    if (*inspect_cmd) return run_inspect(insp);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}
