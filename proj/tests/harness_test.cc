// Copyright 2026 The Skillforge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "skillforge/harness.h"

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include "test_util.h"

namespace skillforge {
namespace {

using nlohmann::json;
using testing::ReadFile;
using testing::TempDir;
using testing::WriteFile;

struct CliResult {
  int code = -1;
  std::string out;
};

// Runs the command-line tool with `args`, capturing stdout. Stderr goes to
// a side file so usage errors do not clutter the test log.
CliResult RunCli(const TempDir &dir, const std::string &args) {
  const std::string out = dir.File("stdout.txt");
  const std::string cmd =
      std::string(SKILLFORGE_CLI) + " " + args + " >" + out + " 2>" + dir.File("stderr.txt");
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = ReadFile(out);
  return r;
}

size_t CountLines(const std::string &text) {
  return static_cast<size_t>(std::count(text.begin(), text.end(), '\n'));
}

TEST(ConfigTest, BuiltinLayers) {
  const RunConfig pick = ResolveConfig(Family::kHouseholdPick, std::nullopt, json::object());
  EXPECT_EQ(pick.family, "household.pick");
  EXPECT_DOUBLE_EQ(pick.sft.learning_rate, 1.0);
  EXPECT_EQ(pick.sft.epochs, 20);
  EXPECT_EQ(pick.sft.batch_size, 16);
  EXPECT_EQ(pick.rl.group_size, 4);
  EXPECT_EQ(pick.rl.episodes, 400);
  EXPECT_EQ(pick.budget, kDefaultBudget);
  EXPECT_EQ(pick.policy.rank, 8);
  EXPECT_DOUBLE_EQ(pick.policy.alpha, 16.0);

  const RunConfig shop = ResolveConfig(Family::kShopPurchase, std::nullopt, json::object());
  EXPECT_DOUBLE_EQ(shop.sft.learning_rate, 3.0);
  EXPECT_EQ(shop.sft.epochs, 4);
  EXPECT_EQ(shop.sft.batch_size, 16);
}

TEST(ConfigTest, FileAndCliLayers) {
  TempDir dir;
  WriteFile(dir.File("c.json"), R"({"defaults": {"rl": {"beta": 0.5}, "seed": 9},
    "families": {"shop.purchase": {"sft": {"epochs": 7}}, "household.pick": {"sft": {"epochs": 2}}}})");
  const RunConfig c = ResolveConfig(Family::kShopPurchase, dir.File("c.json"),
                                    json{{"seed", 11}, {"eval", {{"episodes", 5}}}});
  EXPECT_DOUBLE_EQ(c.rl.beta, 0.5);
  EXPECT_EQ(c.sft.epochs, 7);
  EXPECT_DOUBLE_EQ(c.sft.learning_rate, 3.0);  // builtin family layer survives
  EXPECT_EQ(c.seed, 11u);                      // cli wins over file
  EXPECT_EQ(c.eval.episodes, 5u);
  EXPECT_EQ(c.rl.group_size, 4);
}

TEST(ConfigTest, StrictKeysAndTypes) {
  TempDir dir;
  WriteFile(dir.File("typo.json"), R"({"defaults": {"rl": {"betta": 0.5}}})");
  EXPECT_THROW(ResolveConfig(Family::kShopPurchase, dir.File("typo.json"), json::object()),
               DataError);
  WriteFile(dir.File("top.json"), R"({"default": {}})");
  EXPECT_THROW(ResolveConfig(Family::kShopPurchase, dir.File("top.json"), json::object()),
               DataError);
  WriteFile(dir.File("type.json"), R"({"defaults": {"sft": {"epochs": "many"}}})");
  EXPECT_THROW(ResolveConfig(Family::kShopPurchase, dir.File("type.json"), json::object()),
               DataError);
  EXPECT_THROW(ResolveConfig(Family::kShopPurchase, dir.File("none.json"), json::object()),
               DataError);
  EXPECT_THROW(RunConfig::FromJson(json{{"policy", {{"rank", 0}}}}), DataError);
}

TEST(ConfigTest, JsonRoundTrip) {
  RunConfig c = ResolveConfig(Family::kShopPurchase, std::nullopt, json::object());
  c.rl.toggles.progress = false;
  c.eval.seeds = {4, 5};
  const RunConfig back = RunConfig::FromJson(json::parse(c.ToJson().dump()));
  EXPECT_EQ(back.ToJson().dump(), c.ToJson().dump());
}

TEST(ManifestTest, WritesResolvedConfigAndReloads) {
  TempDir dir;
  RunManifest m;
  m.command = "train-sft";
  m.argv = {"skillforge", "train-sft"};
  RunConfig c = ResolveConfig(Family::kShopPurchase, std::nullopt, json{{"seed", 3}});
  m.config = c.ToJson();
  m.seeds = {3};
  m.inputs = {"in.jsonl"};
  m.artifacts = {"a.json"};
  m.Write(dir.File("m.json"));
  const json j = json::parse(ReadFile(dir.File("m.json")));
  for (const char *key : {"command", "argv", "version", "config", "seeds", "inputs", "artifacts"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["version"], kVersion);
  // A manifest works as a config file and reproduces the run's settings.
  const RunConfig again = ResolveConfig(Family::kShopPurchase, dir.File("m.json"), json::object());
  EXPECT_EQ(again.ToJson().dump(), c.ToJson().dump());
}

TEST(SeedListTest, Parse) {
  EXPECT_EQ(ParseSeedList("0,1,2"), (std::vector<uint64_t>{0, 1, 2}));
  EXPECT_EQ(ParseSeedList(" 7 , 9"), (std::vector<uint64_t>{7, 9}));
  EXPECT_THROW(ParseSeedList(""), UsageError);
  EXPECT_THROW(ParseSeedList("0,x"), UsageError);
  EXPECT_THROW(ParseSeedList("1,,2"), UsageError);
  EXPECT_THROW(ParseSeedList("-1"), UsageError);
}

TEST(VariantTest, NamesRoundTrip) {
  EXPECT_EQ(AblationVariants().size(), 5u);
  for (Variant v : AblationVariants()) EXPECT_EQ(ParseVariant(VariantName(v)), v);
  EXPECT_EQ(ParseVariant("full"), Variant::kFull);
  EXPECT_THROW(ParseVariant("half"), UsageError);
  const RunConfig base = ResolveConfig(Family::kShopPurchase, std::nullopt, json::object());
  const RunConfig term = ApplyVariant(base, Variant::kTerminalOnly);
  EXPECT_FALSE(term.rl.toggles.progress);
  EXPECT_FALSE(term.rl.toggles.error);
  const RunConfig nsb = ApplyVariant(base, Variant::kNoStateBlock);
  EXPECT_TRUE(nsb.sft.drop_state_block);
  EXPECT_TRUE(nsb.rl.drop_state_block);
  EXPECT_TRUE(nsb.eval.drop_state_block);
  EXPECT_FALSE(ApplyVariant(base, Variant::kNoStepCost).rl.toggles.step_cost);
}

TEST(ExitCodeTest, Mapping) {
  EXPECT_EQ(ExitCodeFor(UsageError("u")), kExitUsage);
  EXPECT_EQ(ExitCodeFor(DataError("d")), kExitData);
  EXPECT_EQ(ExitCodeFor(std::runtime_error("x")), kExitInternal);
}

TEST(CliTest, UsageAndDataErrors) {
  TempDir dir;
  EXPECT_EQ(RunCli(dir, "").code, kExitUsage);
  EXPECT_EQ(RunCli(dir, "--help").code, kExitOk);
  EXPECT_EQ(RunCli(dir, "frobnicate").code, kExitUsage);
  EXPECT_EQ(RunCli(dir, "train-rl --family shop.purchase --out " + dir.File("x.json")).code,
            kExitUsage);
  EXPECT_NE(ReadFile(dir.File("stderr.txt")).find("--sft-adapter"), std::string::npos);
  EXPECT_EQ(RunCli(dir, "gen-expert --family kitchen.cook --count 1 --out " + dir.File("e")).code,
            kExitUsage);
  EXPECT_EQ(RunCli(dir, "eval --family shop.purchase --adapter " + dir.File("none.json")).code,
            kExitData);
  WriteFile(dir.File("bad.jsonl"), "{\"family\": \"household.pick\"}\n");
  EXPECT_EQ(RunCli(dir, "build-sft --in " + dir.File("bad.jsonl") + " --out " + dir.File("c")).code,
            kExitData);
  EXPECT_EQ(RunCli(dir, "ablate --family shop.purchase --variant full").code, kExitUsage);
}

TEST(CliTest, GenExpertWritesSuccessfulTrajectories) {
  TempDir dir;
  const std::string out = dir.File("e.jsonl");
  ASSERT_EQ(
      RunCli(dir, "gen-expert --family household.pick --count 200 --seed 42 --out " + out).code,
      kExitOk);
  const auto trajectories = ReadTrajectories(out);
  ASSERT_EQ(trajectories.size(), 200u);
  for (const auto &t : trajectories) EXPECT_TRUE(t.success);
  const json manifest = json::parse(ReadFile(out + ".manifest.json"));
  EXPECT_EQ(manifest["command"], "gen-expert");
  EXPECT_EQ(manifest["config"]["seed"], 42);
  EXPECT_EQ(manifest["artifacts"][0], out);

  // Same seed, same bytes.
  const std::string again = dir.File("again.jsonl");
  RunCli(dir, "gen-expert --family household.pick --count 200 --seed 42 --out " + again);
  EXPECT_EQ(ReadFile(out), ReadFile(again));
}

TEST(CliTest, TrainAndEvaluate) {
  TempDir dir;
  ASSERT_EQ(RunCli(dir, "gen-expert --family shop.purchase --count 20 --seed 1 --out " +
                            dir.File("e.jsonl"))
                .code,
            kExitOk);
  ASSERT_EQ(
      RunCli(dir, "build-sft --in " + dir.File("e.jsonl") + " --out " + dir.File("c.jsonl")).code,
      kExitOk);
  ASSERT_EQ(
      RunCli(dir, "train-sft --corpus " + dir.File("c.jsonl") + " --out " + dir.File("a.json"))
          .code,
      kExitOk);
  EXPECT_EQ(CountLines(ReadFile(dir.File("a.json.metrics.jsonl"))), 4u);  // shop epochs

  const CliResult ev = RunCli(dir, "eval --family shop.purchase --episodes 5 --adapter " +
                                       dir.File("a.json") + " --out " + dir.File("m.json"));
  ASSERT_EQ(ev.code, kExitOk);
  const json m = json::parse(ReadFile(dir.File("m.json")));
  EXPECT_EQ(m["seeds"], json::parse("[0,1,2]"));
  EXPECT_EQ(m["per_seed"].size(), 3u);
  EXPECT_EQ(json::parse(ReadFile(dir.File("m.json.manifest.json")))["command"], "eval");

  // The adapter refuses another family's features.
  EXPECT_EQ(RunCli(dir, "eval --family shop.purchase --episodes 5 --seeds 0 --adapter " +
                            dir.File("a.json") + " --config " + dir.File("cfg.json"))
                .code,
            kExitData);  // missing config file
  WriteFile(dir.File("cfg.json"), R"({"defaults": {"policy": {"hash_seed": 99}}})");
  EXPECT_EQ(RunCli(dir, "eval --family shop.purchase --episodes 5 --seeds 0 --adapter " +
                            dir.File("a.json") + " --config " + dir.File("cfg.json"))
                .code,
            kExitData);
}

TEST(CliTest, TokensReport) {
  TempDir dir;
  const CliResult r =
      RunCli(dir, "tokens --family household.pick --episodes 200 --out " + dir.File("t.json"));
  ASSERT_EQ(r.code, kExitOk);
  for (const char *row :
       {"Avg. Steps", "Prompt Tok./Turn", "Completion Tok./Turn", "Total Tok./Episode"}) {
    EXPECT_NE(r.out.find(row), std::string::npos) << row;
  }
  const json t = json::parse(ReadFile(dir.File("t.json")));
  const double bounded = t["bounded"]["prompt_tokens_per_turn"];
  const double one_step = t["react_1step"]["prompt_tokens_per_turn"];
  const double full = t["react_full"]["prompt_tokens_per_turn"];
  EXPECT_LE(bounded, 0.5 * full);
  EXPECT_LE(bounded, one_step);
  EXPECT_EQ(t["bounded"]["avg_steps"], t["react_full"]["avg_steps"]);

  // Trace mode agrees with live mode on the same trajectories.
  ASSERT_EQ(
      RunCli(dir, "gen-expert --family household.pick --count 200 --out " + dir.File("e.jsonl"))
          .code,
      kExitOk);
  const CliResult traced = RunCli(dir, "tokens --trace " + dir.File("e.jsonl"));
  ASSERT_EQ(traced.code, kExitOk);
  EXPECT_EQ(traced.out, r.out);
}

}  // namespace
}  // namespace skillforge
