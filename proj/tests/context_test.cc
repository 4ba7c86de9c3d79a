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

#include "skillforge/context.h"

#include <gtest/gtest.h>

#include <algorithm>

#include "json.hpp"
#include "skillforge/text.h"

namespace skillforge {
namespace {

StateBlock SmallBlock() {
  return tracker::Render(tracker::Init(Family::kHouseholdPick, "put a mug in desk 1"));
}

std::string Words(size_t n, const std::string &word = "cabinet") {
  std::string out;
  for (size_t i = 0; i < n; ++i) out += (i ? " " : "") + word;
  return out;
}

TEST(TokenTest, StatedRule) {
  EXPECT_EQ(CountTokens(""), 0u);
  EXPECT_EQ(CountTokens("go to shelf 1"), 4u);
  EXPECT_EQ(CountTokens("click[Buy Now]"), 5u);
  EXPECT_EQ(Tokenize("click[Buy Now]"),
            (std::vector<std::string>{"click", "[", "Buy", "Now", "]"}));
  EXPECT_EQ(CountTokens("  You arrive at desk 1.  "), 6u);
  EXPECT_EQ(CountTokens("\"hi,\""), 4u);
}

TEST(TokenTest, TruncateKeepsPrefix) {
  EXPECT_EQ(TruncateTokens("a b c d", 2), "a b");
  EXPECT_EQ(CountTokens(TruncateTokens("You arrive at desk 1. On it", 5)), 5u);
  EXPECT_EQ(TruncateTokens("a b", 9), "a b");
}

TEST(BoundedTest, ShortInputFits) {
  const BoundedInput x =
      BuildBounded("put a mug in desk 1", "You arrive at desk 1.", std::nullopt, SmallBlock());
  EXPECT_FALSE(x.truncated);
  EXPECT_LT(x.token_len, kDefaultBudget);
  EXPECT_EQ(x.token_len, CountTokens(x.rendered));
  EXPECT_EQ(x.rendered,
            BuildBounded("put a mug in desk 1", "You arrive at desk 1.", std::nullopt, SmallBlock())
                .rendered);
}

TEST(BoundedTest, HeadersInOrder) {
  const BoundedInput x = BuildBounded("put a mug in desk 1", "You arrive at desk 1.",
                                      OneStep{"You are in a room.", "go to desk 1"}, SmallBlock());
  const size_t task = x.rendered.find("TASK:"), state = x.rendered.find("STATE:"),
               prev = x.rendered.find("PREV:"), obs = x.rendered.find("OBS:");
  ASSERT_NE(obs, std::string::npos);
  EXPECT_LT(task, state);
  EXPECT_LT(state, prev);
  EXPECT_LT(prev, obs);
}

TEST(BoundedTest, LongObservationFillsBudgetExactly) {
  const StateBlock block = SmallBlock();
  const BoundedInput x =
      BuildBounded("put a mug in desk 1", Words(1000), OneStep{Words(50, "shelf"), "look"}, block);
  EXPECT_TRUE(x.truncated);
  EXPECT_EQ(x.token_len, kDefaultBudget);
  EXPECT_EQ(CountTokens(x.rendered), kDefaultBudget);
  EXPECT_NE(x.rendered.find(block.Text()), std::string::npos);
  EXPECT_NE(x.rendered.find("TASK: put a mug in desk 1"), std::string::npos);
}

TEST(BoundedTest, BudgetErrors) {
  EXPECT_THROW(BuildBounded("g", "o", std::nullopt, SmallBlock(), kMinBudget - 1), UsageError);
  EXPECT_THROW(BuildBounded(Words(200, "mug"), "o", std::nullopt, SmallBlock(), 100), UsageError);
}

TEST(BoundedTest, ParseBackRecoversSections) {
  const auto t = RunExpert(Family::kShopPurchase, 4);
  BoundedSession s(Family::kShopPurchase, t.instruction);
  std::optional<OneStep> prev;
  for (const auto &[obs, action] : t.steps) {
    const BoundedInput &x = s.Observe(obs);
    const BoundedSections back = ParseBounded(x.rendered);
    EXPECT_EQ(back.instruction, t.instruction);
    EXPECT_EQ(back.state_lines, x.state_block.lines);
    EXPECT_EQ(back.observation, obs);
    EXPECT_EQ(back.one_step, prev);
    prev = OneStep{obs, action};
    s.Act(action);
  }
}

// Random instructions, observations and budgets never exceed the budget,
// and truncation only ever touches the observation fields.
TEST(BoundedTest, BudgetLawFuzz) {
  Rng rng(404);
  const std::vector<std::string> vocab = {"mug",  "1",    "shelf", "[b3]",  "click[Buy",
                                          "Now]", ".",    "you",   "see",   "a",
                                          ",",    "open", "red |", "$12.00"};
  auto text = [&](int max_words) {
    std::string out;
    const int n = rng.UniformInt(0, max_words);
    for (int i = 0; i < n; ++i) out += (i ? " " : "") + rng.Pick(vocab);
    return out;
  };
  for (int trial = 0; trial < 10000; ++trial) {
    const size_t budget = static_cast<size_t>(rng.UniformInt(static_cast<int>(kMinBudget), 500));
    const std::string g = "put a " + text(6) + " in desk 1";
    std::optional<OneStep> q;
    if (rng.Uniform() < 0.7) q = OneStep{text(400), text(6)};
    try {
      const BoundedInput x = BuildBounded(g, text(800), q, SmallBlock(), budget);
      ASSERT_LE(x.token_len, budget);
      ASSERT_EQ(x.token_len, CountTokens(x.rendered));
      ASSERT_NE(x.rendered.find("TASK: " + Trim(g)), std::string::npos);
      ASSERT_NE(x.rendered.find(SmallBlock().Text()), std::string::npos);
    } catch (const UsageError &) {
      // Fixed parts alone exceed the budget.
      ASSERT_GT(CountTokens(g) + SmallBlock().token_len, budget - 8);
    }
  }
}

TEST(ReactTest, OneStepKeepsLastPair) {
  std::vector<std::pair<std::string, std::string>> history;
  for (int i = 0; i < 10; ++i)
    history.push_back({"obs " + std::to_string(i), "act " + std::to_string(i)});
  const ReactContext c = BuildReact("put a mug in desk 1", SkillText(Family::kHouseholdPick),
                                    history, "now", ReactMode::kOneStep);
  ASSERT_EQ(c.history.size(), 1u);
  EXPECT_EQ(c.history[0].second, "act 9");
  EXPECT_EQ(c.rendered.find("act 8"), std::string::npos);
  EXPECT_NE(c.rendered.find("act 9"), std::string::npos);
}

TEST(ReactTest, EmptyHistoryIsTaskAndSkill) {
  const std::string &skill = SkillText(Family::kHouseholdPick);
  const ReactContext c = BuildReact("put a mug in desk 1", skill, {}, "", ReactMode::kFull);
  EXPECT_EQ(c.token_len, CountTokens(skill) + CountTokens("TASK: put a mug in desk 1"));
  EXPECT_GE(CountTokens(skill), 100u);
}

TEST(ReactTest, FullGrowsUntilCap) {
  std::vector<std::pair<std::string, std::string>> history;
  std::vector<size_t> lens;
  for (int i = 0; i < 400; ++i) {
    history.push_back({"You arrive at cabinet " + std::to_string(i) + ". It is closed.", "look"});
    lens.push_back(
        BuildReact("g", SkillText(Family::kShopPurchase), history, "", ReactMode::kFull).token_len);
  }
  EXPECT_GT(lens[19], lens[4]);
  bool capped = false;
  for (size_t i = 1; i < lens.size(); ++i) {
    ASSERT_LE(lens[i], kReactFullCap);
    if (!capped && lens[i] <= lens[i - 1]) capped = true;
    if (!capped) {
      ASSERT_GT(lens[i], lens[i - 1]);
    }
  }
  EXPECT_TRUE(capped);
  EXPECT_GT(lens.back(), kReactFullCap - 40);
}

TEST(ReportTest, ArithmeticOracle) {
  const TokenReport r = ReportFromTurns({{{100, 5}, {120, 7}}});
  EXPECT_DOUBLE_EQ(r.avg_steps, 2.0);
  EXPECT_DOUBLE_EQ(r.prompt_tokens_per_turn, 110.0);
  EXPECT_DOUBLE_EQ(r.completion_tokens_per_turn, 6.0);
  EXPECT_DOUBLE_EQ(r.total_tokens_per_episode, 232.0);
  EXPECT_DOUBLE_EQ(ReportFromTurns({{{10, 0}}}).completion_tokens_per_turn, 0.0);
  EXPECT_THROW(ReportFromTurns({}), DataError);
  EXPECT_THROW(EpisodeTokenReport({}, ContextBuilder::kBounded), DataError);
}

TEST(ReportTest, BoundedBelowOneStepOnHouseholdEpisodes) {
  std::vector<Trajectory> traces;
  for (uint64_t seed = 0; seed < 1000; ++seed)
    traces.push_back(RunExpert(Family::kHouseholdPick, seed));
  const TokenReport bounded = EpisodeTokenReport(traces, ContextBuilder::kBounded);
  const TokenReport one = EpisodeTokenReport(traces, ContextBuilder::kReactOneStep);
  const TokenReport full = EpisodeTokenReport(traces, ContextBuilder::kReactFull);
  EXPECT_LT(bounded.prompt_tokens_per_turn, one.prompt_tokens_per_turn);
  EXPECT_LE(bounded.prompt_tokens_per_turn, 0.5 * full.prompt_tokens_per_turn);
  for (const TokenReport &r : {bounded, one, full}) {
    EXPECT_GE(r.total_tokens_per_episode, r.prompt_tokens_per_turn);
    EXPECT_DOUBLE_EQ(r.avg_steps, bounded.avg_steps);
    EXPECT_DOUBLE_EQ(r.completion_tokens_per_turn, bounded.completion_tokens_per_turn);
  }
}

// Bounded prompts do not grow with the step index: the second-half mean
// stays below 1.2x the first-half mean. Single turns swing more than 20%
// because one observation is a large share of a short prompt, and late turns
// are often shorter once the search lists are dropped.
TEST(ReportTest, BoundedFlatWhileFullGrows) {
  size_t long_episodes = 0;
  for (Family f : AllFamilies()) {
    for (uint64_t seed = 0; seed < 300; ++seed) {
      const Trajectory t = RunExpert(f, seed);
      if (t.steps.size() < 10) continue;
      ++long_episodes;
      const auto bounded = TraceTokens(t, ContextBuilder::kBounded);
      const auto full = TraceTokens(t, ContextBuilder::kReactFull);
      const size_t half = bounded.size() / 2;
      double early = 0.0, late = 0.0;
      for (size_t i = 0; i < half; ++i) early += bounded[i].prompt;
      for (size_t i = half; i < bounded.size(); ++i) late += bounded[i].prompt;
      early /= half;
      late /= bounded.size() - half;
      EXPECT_LE(late, 1.2 * early) << FamilyName(f) << " seed " << seed;
      for (size_t i = 1; i < full.size(); ++i) EXPECT_GT(full[i].prompt, full[i - 1].prompt);
    }
  }
  EXPECT_GT(long_episodes, 100u);
}

TEST(ReportTest, JsonAndTableRows) {
  const std::vector<std::pair<std::string, TokenReport>> cols = {
      {"bounded", ReportFromTurns({{{100, 5}, {120, 7}}})}};
  const auto j = nlohmann::json::parse(TokenReportJson(cols));
  EXPECT_DOUBLE_EQ(j["bounded"]["total_tokens_per_episode"].get<double>(), 232.0);
  const std::string table = TokenReportTable(cols);
  for (const char *row :
       {"Avg. Steps", "Prompt Tok./Turn", "Completion Tok./Turn", "Total Tok./Episode"}) {
    EXPECT_NE(table.find(row), std::string::npos) << row;
  }
}

}  // namespace
}  // namespace skillforge
