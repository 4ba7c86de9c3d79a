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

// Shaped step rewards. Rules are data: each names a conjunction of trigger
// atoms evaluated over (previous tracker state, action, outcome, next
// tracker state, episode memory).

#ifndef SKILLFORGE_REWARD_H_
#define SKILLFORGE_REWARD_H_

#include <set>
#include <string>
#include <vector>

#include "skillforge/tracker.h"

namespace skillforge {

enum class RuleKind { kProgress, kError };

struct Rule {
  std::string id;
  RuleKind kind = RuleKind::kProgress;
  // All atoms must hold. An atom prefixed with '!' is negated.
  std::vector<std::string> trigger;
  double magnitude = 0.0;
  bool one_time = false;
};

struct RuleSet {
  std::string family;  // family name, or "household" for the shared row
  std::vector<Rule> rules;
  double env_success_bonus = 0.0;
  double step_cost = 0.0;
  std::vector<std::string> hinted_types;

  std::string ToJson() const;
  // Validates ids, magnitudes and atom names; throws DataError.
  static RuleSet FromJson(const std::string &text);
};

// Throws UsageError for families without shipped rules.
RuleSet BuiltinRules(Family family);

// Trigger atoms understood by the engine.
const std::vector<std::string> &KnownAtoms();

struct StepOutcome {
  Outcomes outcomes;
  double env_signal = 0.0;
};

// Per-episode scoring memory, owned by the caller.
struct EpisodeMemory {
  std::set<std::string> fired_once;
  int max_rank = 0;
  bool last_no_progress = false;
  std::set<std::string> visited_types;
  std::set<std::string> opened;
  std::set<std::string> clicked;  // "query|product"
  std::set<std::string> detail_pages;
  std::set<std::string> credited_options;  // required values already rewarded
  std::vector<std::string> pages;          // page identifiers, consecutive duplicates collapsed
};

struct RewardToggles {
  bool progress = true;
  bool error = true;
  bool step_cost = true;
};

// Listed first in `fired` when the success bonus is paid.
inline constexpr const char *kEnvSuccessId = "env_success";

struct RewardBreakdown {
  double env = 0.0;
  double progress = 0.0;
  double error = 0.0;
  double step_cost = 0.0;
  double total = 0.0;
  std::vector<std::string> fired;  // env_success, then rules in declaration order

  std::string ToJson() const;
};

// Scores one transition and advances `memory`. Disabled components are
// reported as zero and their rules are not listed in `fired`.
RewardBreakdown ScoreStep(const RuleSet &rules, const TrackerState &prev, const std::string &action,
                          const StepOutcome &outcome, const TrackerState &next,
                          EpisodeMemory *memory, const RewardToggles &toggles = {});

// Suffix-discounted returns. Throws DataError on empty input or gamma
// outside (0, 1].
std::vector<double> EpisodeReturns(const std::vector<double> &rewards, double gamma);

inline constexpr double kDefaultGamma = 0.98;

}  // namespace skillforge

#endif  // SKILLFORGE_REWARD_H_
