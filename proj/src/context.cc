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

#include <cstdio>

#include "json.hpp"
#include "skillforge/text.h"

namespace skillforge {
namespace {

constexpr const char *kNoPrev = "(none)";

std::string RenderBounded(const std::string &instruction, const std::string &observation,
                          const std::optional<OneStep> &one_step, const StateBlock &block) {
  std::string out = "TASK: " + instruction + "\nSTATE:";
  for (const auto &line : block.lines) out += "\n" + line;
  if (one_step) {
    out += "\nPREV: " + one_step->observation + "\n-> " + one_step->action;
  } else {
    out += std::string("\nPREV: ") + kNoPrev;
  }
  out += "\nOBS: " + observation;
  return out;
}

const char *kHouseholdCore =
    "You are a household robot working in a single room. Each turn you read the latest "
    "observation and reply with exactly one action. Valid actions are: go to X, open X, "
    "close X, take X from Y, put X in/on Y, examine X, look, and use X with Y where the "
    "task needs it. Search receptacles where the object usually lives first, such as "
    "countertops, cabinets, drawers, shelves and tables, and open closed containers to "
    "see inside. Do not revisit places you already checked. Once you hold the object, ";

}  // namespace

BoundedInput BuildBounded(const std::string &instruction, const std::string &observation,
                          const std::optional<OneStep> &one_step, const StateBlock &state_block,
                          size_t budget) {
  if (budget < kMinBudget) {
    throw UsageError("budget " + std::to_string(budget) + " is below the minimum of " +
                     std::to_string(kMinBudget));
  }
  BoundedInput in;
  in.instruction = instruction;
  in.observation = observation;
  in.one_step = one_step;
  in.state_block = state_block;
  in.budget = budget;

  std::optional<OneStep> bare = one_step;
  if (bare) bare->observation.clear();
  const size_t fixed = CountTokens(RenderBounded(instruction, "", bare, state_block));
  if (fixed > budget) {
    throw UsageError("budget " + std::to_string(budget) +
                     " cannot hold the task and state block (" + std::to_string(fixed) +
                     " tokens)");
  }
  const size_t avail = budget - fixed;
  const size_t obs_tokens = CountTokens(observation);
  const size_t prev_tokens = one_step ? CountTokens(one_step->observation) : 0;
  if (obs_tokens + prev_tokens > avail) {
    in.truncated = true;
    if (obs_tokens >= avail) {
      in.observation = TruncateTokens(observation, avail);
      if (in.one_step) in.one_step->observation.clear();
    } else {
      in.one_step->observation = TruncateTokens(one_step->observation, avail - obs_tokens);
    }
  }
  in.rendered = RenderBounded(in.instruction, in.observation, in.one_step, state_block);
  in.token_len = CountTokens(in.rendered);
  return in;
}

BoundedSections ParseBounded(const std::string &rendered) {
  BoundedSections s;
  const size_t state_at = rendered.find("\nSTATE:");
  const size_t prev_at = rendered.rfind("\nPREV: ");
  const size_t obs_at = rendered.rfind("\nOBS: ");
  if (!StartsWith(rendered, "TASK: ") || state_at == std::string::npos ||
      prev_at == std::string::npos || obs_at == std::string::npos || prev_at < state_at ||
      obs_at < prev_at) {
    throw DataError("rendered input is missing a section header");
  }
  s.instruction = rendered.substr(6, state_at - 6);
  const std::string state = rendered.substr(state_at + 7, prev_at - state_at - 7);
  for (const auto &line : Split(state, "\n")) {
    if (!line.empty()) s.state_lines.push_back(line);
  }
  const std::string prev = rendered.substr(prev_at + 7, obs_at - prev_at - 7);
  const size_t arrow = prev.rfind("\n-> ");
  if (arrow != std::string::npos) {
    s.one_step = OneStep{prev.substr(0, arrow), prev.substr(arrow + 4)};
  } else if (prev != kNoPrev) {
    throw DataError("malformed PREV section");
  }
  s.observation = rendered.substr(obs_at + 6);
  return s;
}

ReactContext BuildReact(const std::string &instruction, const std::string &skill_text,
                        const std::vector<std::pair<std::string, std::string>> &history,
                        const std::string &observation, ReactMode mode) {
  ReactContext ctx;
  ctx.skill_text = skill_text;
  ctx.mode = mode;
  if (mode == ReactMode::kOneStep) {
    if (!history.empty()) ctx.history.push_back(history.back());
  } else {
    ctx.history = history;
  }
  auto render = [&](size_t first) {
    std::string out = skill_text + "\nTASK: " + instruction;
    for (size_t i = first; i < ctx.history.size(); ++i) {
      out += "\nObservation: " + ctx.history[i].first + "\nAction: " + ctx.history[i].second;
    }
    if (!observation.empty()) out += "\nObservation: " + observation;
    return out;
  };
  size_t first = 0;
  std::string text = render(first);
  size_t tokens = CountTokens(text);
  while (mode == ReactMode::kFull && tokens > kReactFullCap && first < ctx.history.size()) {
    ++first;
    text = render(first);
    tokens = CountTokens(text);
  }
  ctx.history.erase(ctx.history.begin(), ctx.history.begin() + static_cast<long>(first));
  ctx.rendered = std::move(text);
  ctx.token_len = tokens;
  return ctx;
}

const std::string &SkillText(Family family) {
  static const std::string kPick =
      std::string(kHouseholdCore) +
      "go straight to the destination named in the task, open it if it is closed, and put "
      "the object in or on it. Avoid looking around or wandering once the object is in "
      "hand, and never place it in a different receptacle of the same type.";
  static const std::string kClean =
      std::string(kHouseholdCore) +
      "carry it to the sinkbasin and clean it there with: clean X with sinkbasin. Then go "
      "to the destination named in the task, open it if it is closed, and put the clean "
      "object in or on it. Avoid wandering once the object is in hand.";
  static const std::string kHeat =
      std::string(kHouseholdCore) +
      "carry it to the microwave and heat it there with: heat X with microwave. Then go to "
      "the destination named in the task, open it if it is closed, and put the hot object "
      "in or on it. Avoid wandering once the object is in hand.";
  static const std::string kCool =
      std::string(kHouseholdCore) +
      "carry it to the fridge and cool it there with: cool X with fridge. Then go to the "
      "destination named in the task, open it if it is closed, and put the cold object in "
      "or on it. Avoid wandering once the object is in hand.";
  static const std::string kExamine =
      std::string(kHouseholdCore) +
      "go to the receptacle where the desklamp stands, as named in the task, and examine "
      "the object you are holding there. Avoid wandering once the object is in hand, and "
      "do not put the object down.";
  static const std::string kShop =
      "You are a shopping assistant on a web store. Each turn you read the current page and "
      "reply with exactly one action. On the search page, type a query with search[query] "
      "that names the product attributes and category from the request. On a results page, "
      "click[product id] to open the product that matches every requested attribute and is "
      "under the price limit, or click[Back to Search] to try another query. On a product "
      "page, click each requested option value, such as a color or size, exactly once. "
      "Check the title and price before buying; use click[< Prev] to return to the results "
      "if the product does not match. When every requested option is selected, finish with "
      "click[Buy Now]. Do not buy before all options are chosen, and do not reopen products "
      "you already rejected.";
  switch (family) {
    case Family::kHouseholdPick:
      return kPick;
    case Family::kHouseholdClean:
      return kClean;
    case Family::kHouseholdHeat:
      return kHeat;
    case Family::kHouseholdCool:
      return kCool;
    case Family::kHouseholdExamine:
      return kExamine;
    case Family::kShopPurchase:
      break;
  }
  return kShop;
}

BoundedSession::BoundedSession(Family family, const std::string &instruction, size_t budget)
    : instruction_(instruction),
      budget_(budget),
      state_(tracker::Init(family, instruction)),
      previous_(state_) {}

const BoundedInput &BoundedSession::Observe(const std::string &observation) {
  previous_ = state_;
  state_ = tracker::Update(state_, last_action_, observation);
  std::optional<OneStep> q;
  if (last_action_) q = OneStep{*last_observation_, *last_action_};
  input_ = BuildBounded(instruction_, observation, q, tracker::Render(state_), budget_);
  last_observation_ = observation;
  return input_;
}

void BoundedSession::Act(const std::string &action) { last_action_ = action; }

std::string ContextBuilderName(ContextBuilder builder) {
  switch (builder) {
    case ContextBuilder::kBounded:
      return "bounded";
    case ContextBuilder::kReactOneStep:
      return "react_1step";
    case ContextBuilder::kReactFull:
      return "react_full";
  }
  return "bounded";
}

TokenReport ReportFromTurns(const std::vector<std::vector<TurnTokens>> &episodes) {
  if (episodes.empty()) throw DataError("token report needs at least one episode");
  TokenReport r;
  double turns = 0;
  double prompt = 0;
  double completion = 0;
  for (const auto &episode : episodes) {
    turns += static_cast<double>(episode.size());
    for (const TurnTokens &t : episode) {
      prompt += static_cast<double>(t.prompt);
      completion += static_cast<double>(t.completion);
    }
  }
  const double n = static_cast<double>(episodes.size());
  r.avg_steps = turns / n;
  r.prompt_tokens_per_turn = turns > 0 ? prompt / turns : 0.0;
  r.completion_tokens_per_turn = turns > 0 ? completion / turns : 0.0;
  r.total_tokens_per_episode = (prompt + completion) / n;
  return r;
}

std::vector<TurnTokens> TraceTokens(const Trajectory &trace, ContextBuilder builder,
                                    size_t budget) {
  const Family family = ParseFamily(trace.family);
  std::vector<TurnTokens> turns;
  if (builder == ContextBuilder::kBounded) {
    BoundedSession session(family, trace.instruction, budget);
    for (const auto &[obs, action] : trace.steps) {
      turns.push_back({session.Observe(obs).token_len, CountTokens(action)});
      session.Act(action);
    }
    return turns;
  }
  const ReactMode mode =
      builder == ContextBuilder::kReactFull ? ReactMode::kFull : ReactMode::kOneStep;
  std::vector<std::pair<std::string, std::string>> history;
  for (const auto &[obs, action] : trace.steps) {
    const ReactContext ctx = BuildReact(trace.instruction, SkillText(family), history, obs, mode);
    turns.push_back({ctx.token_len, CountTokens(action)});
    history.push_back({obs, action});
  }
  return turns;
}

TokenReport EpisodeTokenReport(const std::vector<Trajectory> &traces, ContextBuilder builder,
                               size_t budget) {
  if (traces.empty()) throw DataError("token report needs at least one trace");
  std::vector<std::vector<TurnTokens>> episodes;
  episodes.reserve(traces.size());
  for (const Trajectory &t : traces) episodes.push_back(TraceTokens(t, builder, budget));
  return ReportFromTurns(episodes);
}

std::string TokenReportJson(const std::vector<std::pair<std::string, TokenReport>> &columns) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto &[name, r] : columns) {
    j[name] = {{"avg_steps", r.avg_steps},
               {"prompt_tokens_per_turn", r.prompt_tokens_per_turn},
               {"completion_tokens_per_turn", r.completion_tokens_per_turn},
               {"total_tokens_per_episode", r.total_tokens_per_episode}};
  }
  return j.dump(2);
}

std::string TokenReportTable(const std::vector<std::pair<std::string, TokenReport>> &columns) {
  const char *labels[] = {"Avg. Steps", "Prompt Tok./Turn", "Completion Tok./Turn",
                          "Total Tok./Episode"};
  char buf[64];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%-22s", "Metric");
  out += buf;
  for (const auto &c : columns) {
    std::snprintf(buf, sizeof(buf), "%14s", c.first.c_str());
    out += buf;
  }
  out += "\n";
  for (int row = 0; row < 4; ++row) {
    std::snprintf(buf, sizeof(buf), "%-22s", labels[row]);
    out += buf;
    for (const auto &c : columns) {
      const TokenReport &r = c.second;
      const double v = row == 0   ? r.avg_steps
                       : row == 1 ? r.prompt_tokens_per_turn
                       : row == 2 ? r.completion_tokens_per_turn
                                  : r.total_tokens_per_episode;
      std::snprintf(buf, sizeof(buf), "%14.1f", v);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace skillforge
