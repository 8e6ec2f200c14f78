#include <gtest/gtest.h>
#include <nlohmann/json.hpp>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "opil/datastore.hpp"
#include "opil/trainer.hpp"
#include "test_support.hpp"

namespace opil {
namespace {

using nlohmann::json;
using testing::TempDir;

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(OPIL_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  CliRun r;
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe) != nullptr) r.out += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("bogus").code, 2);
  EXPECT_EQ(run("gen-expert --env linereacher-v0 --n 3").code, 2);  // missing --out
  EXPECT_EQ(run("inspect --data x --frobnicate").code, 2);
  EXPECT_EQ(run("eval --actor x --episodes 0").code, 2);
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("train --help").code, 0);
}

TEST(Cli, GenExpertAndInspect) {
  TempDir dir("cli_gen");
  const auto data = dir / "e.jsonl";
  const CliRun g = run("gen-expert --env linereacher-v0 --n 5 --threshold -30 --seed 4 --out " +
                    q(data));
  ASSERT_EQ(g.code, 0) << g.out;
  const ExpertDataset d = load_dataset(data);
  EXPECT_EQ(d.n_trajectories, 5);
  EXPECT_EQ(d.filter_threshold, -30.0);
  EXPECT_EQ(d.spec.env_id, "linereacher-v0");

  const json echo = json::parse(slurp(data.string() + ".config.json"));
  EXPECT_EQ(echo.at("n"), 5);
  EXPECT_EQ(echo.at("seed"), 4);

  const CliRun i = run("inspect --json --data " + q(data));
  ASSERT_EQ(i.code, 0) << i.out;
  const json info = json::parse(i.out);
  EXPECT_EQ(info.at("n_trajectories"), 5);
  EXPECT_GT(info.at("return_min").get<double>(), -30.0);
  EXPECT_NE(run("inspect --data " + q(data)).out.find("n_trajectories"), std::string::npos);
}

TEST(Cli, GenExpertHundredTrajectories) {
  TempDir dir("cli_gen100");
  const auto data = dir / "e.jsonl";
  ASSERT_EQ(run("gen-expert --env linereacher-v0 --n 100 --out " + q(data)).code, 0);
  EXPECT_EQ(load_dataset(data).n_trajectories, 100);
}

TEST(Cli, RuntimeErrorsCarryLocation) {
  TempDir dir("cli_err");
  const auto data = dir / "e.jsonl";
  ASSERT_EQ(run("gen-expert --env linereacher-v0 --n 2 --out " + q(data)).code, 0);
  std::string text = slurp(data);
  text.resize(text.size() / 2);
  write(dir / "bad.jsonl", text);
  const CliRun r = run("inspect --data " + q(dir / "bad.jsonl"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("line "), std::string::npos) << r.out;
  EXPECT_EQ(run("inspect --data " + q(dir / "missing.jsonl")).code, 1);
  EXPECT_EQ(run("gen-expert --env nope-v0 --n 2 --out " + q(dir / "x")).code, 1);
  EXPECT_EQ(run("gen-expert --env linereacher-v0 --n 2 --threshold abc --out " + q(dir / "x")).code,
            1);
}

TEST(Cli, TrainDeterministicAndEval) {
  TempDir dir("cli_train");
  const auto data = dir / "e.jsonl";
  ASSERT_EQ(run("gen-expert --env linereacher-v0 --n 3 --out " + q(data)).code, 0);
  write(dir / "c.json",
        R"({"env_id":"linereacher-v0","seed":3,"max_episodes":2,"hidden":[16],"eval_episodes":2})");
  const std::string args = "train --config " + q(dir / "c.json") + " --expert " + q(data);
  const CliRun a = run(args + " --out " + q(dir / "a"));
  ASSERT_EQ(a.code, 0) << a.out;
  ASSERT_EQ(run(args + " --out " + q(dir / "b")).code, 0);
  for (const char* f : {"metrics.csv", "eval.csv", "config.json", "actor.ckpt"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }

  // The echoed config reproduces the run.
  const CliRun c = run("train --config " + q(dir / "a" / "config.json") + " --expert " + q(data) +
                    " --out " + q(dir / "c"));
  ASSERT_EQ(c.code, 0) << c.out;
  EXPECT_EQ(slurp(dir / "a" / "metrics.csv"), slurp(dir / "c" / "metrics.csv"));

  const CliRun e = run("eval --json --episodes 4 --seed 11 --actor " + q(dir / "a" / "actor.ckpt"));
  ASSERT_EQ(e.code, 0) << e.out;
  const json ej = json::parse(e.out);
  const EvalResult direct = evaluate(load_actor(dir / "a" / "actor.ckpt"), 4, 11);
  EXPECT_EQ(ej.at("mean_return").get<double>(), direct.mean_return);
  EXPECT_EQ(ej.at("policy"), "actor");

  const CliRun wrong = run("eval --env pendulum-v0 --actor " + q(dir / "a" / "actor.ckpt"));
  EXPECT_EQ(wrong.code, 1);
}

TEST(Cli, TrainWithMinimalConfigUsesDefaults) {
  TempDir dir("cli_min");
  const auto data = dir / "e.jsonl";
  ASSERT_EQ(run("gen-expert --env linereacher-v0 --n 20 --out " + q(data)).code, 0);
  write(dir / "c.json", R"({"env_id":"linereacher-v0","seed":7})");
  const CliRun r = run("train --config " + q(dir / "c.json") + " --expert " + q(data) + " --out " +
                    q(dir / "run"));
  ASSERT_EQ(r.code, 0) << r.out;
  TrainConfig expected;
  expected.seed = 7;
  EXPECT_EQ(json::parse(slurp(dir / "run" / "config.json")), to_json(expected.resolved()));
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "critic2.ckpt"));
}

TEST(Cli, EnvMismatchNamesBothEnvironments) {
  TempDir dir("cli_mismatch");
  const auto data = dir / "e.jsonl";
  ASSERT_EQ(run("gen-expert --env linereacher-v0 --n 2 --out " + q(data)).code, 0);
  write(dir / "c.json", R"({"env_id":"pendulum-v0"})");
  const CliRun r = run("train --config " + q(dir / "c.json") + " --expert " + q(data) + " --out " +
                    q(dir / "run"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("pendulum-v0"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("linereacher-v0"), std::string::npos) << r.out;

  write(dir / "u.json", R"({"env_id":"linereacher-v0","gama":0.5})");
  EXPECT_EQ(run("train --config " + q(dir / "u.json") + " --expert " + q(data) + " --out " +
                q(dir / "run2"))
                .code,
            1);
}

TEST(Cli, TrainBcAndEval) {
  TempDir dir("cli_bc");
  const auto data = dir / "e.jsonl";
  ASSERT_EQ(run("gen-expert --env linereacher-v0 --n 3 --out " + q(data)).code, 0);
  write(dir / "bc.json", R"({"updates":200,"eval_episodes":2})");
  const CliRun r = run("train-bc --config " + q(dir / "bc.json") + " --expert " + q(data) +
                    " --out " + q(dir / "bc"));
  ASSERT_EQ(r.code, 0) << r.out;
  const CliRun e = run("eval --json --episodes 3 --actor " + q(dir / "bc" / "bc.ckpt"));
  ASSERT_EQ(e.code, 0) << e.out;
  const json ej = json::parse(e.out);
  EXPECT_EQ(ej.at("policy"), "bc");
  EXPECT_EQ(ej.at("mean_return").get<double>(),
            evaluate(load_bc(dir / "bc" / "bc.ckpt"), 3, 1'000'000).mean_return);
}

}  // namespace
}  // namespace opil
