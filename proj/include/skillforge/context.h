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

// Model inputs and token accounting. The bounded input carries the task, the
// tracker's state block, the previous observation/action pair and the
// current observation; the ReAct contexts carry a skill blurb plus history.

#ifndef SKILLFORGE_CONTEXT_H_
#define SKILLFORGE_CONTEXT_H_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "skillforge/envsim.h"
#include "skillforge/tracker.h"

namespace skillforge {

inline constexpr size_t kDefaultBudget = 350;
inline constexpr size_t kMinBudget = 64;
inline constexpr size_t kReactFullCap = 4096;

struct OneStep {
  std::string observation;
  std::string action;

  bool operator==(const OneStep &) const = default;
};

struct BoundedInput {
  std::string instruction;
  std::string observation;
  std::optional<OneStep> one_step;  // empty at the first step
  StateBlock state_block;
  std::string rendered;
  size_t token_len = 0;
  size_t budget = kDefaultBudget;
  bool truncated = false;
};

// Assembles x_t. Over budget, the observation fields are cut from their ends
// (previous observation first) until the text fits. Throws UsageError when
// budget < kMinBudget or when the fixed parts alone exceed it.
BoundedInput BuildBounded(const std::string &instruction, const std::string &observation,
                          const std::optional<OneStep> &one_step, const StateBlock &state_block,
                          size_t budget = kDefaultBudget);

// The four sections recovered from a rendered bounded input.
struct BoundedSections {
  std::string instruction;
  std::vector<std::string> state_lines;
  std::optional<OneStep> one_step;
  std::string observation;
};
BoundedSections ParseBounded(const std::string &rendered);

enum class ReactMode { kOneStep, kFull };

struct ReactContext {
  std::string skill_text;
  std::vector<std::pair<std::string, std::string>> history;  // kept (observation, action)
  ReactMode mode = ReactMode::kFull;
  std::string rendered;
  size_t token_len = 0;
};

// `history` holds completed (observation, action) pairs; `observation` is
// the current one and may be empty.
ReactContext BuildReact(const std::string &instruction, const std::string &skill_text,
                        const std::vector<std::pair<std::string, std::string>> &history,
                        const std::string &observation, ReactMode mode);

// The per-family skill blurb used by the ReAct baselines.
const std::string &SkillText(Family family);

// Threads tracker state and the one-step context through an episode. Offline
// replay and live rollouts both build their inputs through this class.
class BoundedSession {
 public:
  BoundedSession(Family family, const std::string &instruction, size_t budget = kDefaultBudget);

  // Consumes the observation o_t and returns x_t.
  const BoundedInput &Observe(const std::string &observation);
  // Records a_t.
  void Act(const std::string &action);

  const TrackerState &tracker_state() const { return state_; }
  const TrackerState &previous_tracker_state() const { return previous_; }
  const std::optional<std::string> &last_action() const { return last_action_; }
  const BoundedInput &input() const { return input_; }

 private:
  std::string instruction_;
  size_t budget_;
  TrackerState state_;
  TrackerState previous_;
  std::optional<std::string> last_action_;
  std::optional<std::string> last_observation_;
  BoundedInput input_;
};

struct TokenReport {
  double avg_steps = 0.0;
  double prompt_tokens_per_turn = 0.0;
  double completion_tokens_per_turn = 0.0;
  double total_tokens_per_episode = 0.0;
};

struct TurnTokens {
  size_t prompt = 0;
  size_t completion = 0;
};

enum class ContextBuilder { kBounded, kReactOneStep, kReactFull };
std::string ContextBuilderName(ContextBuilder builder);

// Averages over episodes; per-turn figures average over all turns. Throws
// DataError on empty input.
TokenReport ReportFromTurns(const std::vector<std::vector<TurnTokens>> &episodes);

// Per-turn prompt and completion counts of one trace under a builder.
std::vector<TurnTokens> TraceTokens(const Trajectory &trace, ContextBuilder builder,
                                    size_t budget = kDefaultBudget);

TokenReport EpisodeTokenReport(const std::vector<Trajectory> &traces, ContextBuilder builder,
                               size_t budget = kDefaultBudget);

std::string TokenReportJson(const std::vector<std::pair<std::string, TokenReport>> &columns);
std::string TokenReportTable(const std::vector<std::pair<std::string, TokenReport>> &columns);

}  // namespace skillforge

#endif  // SKILLFORGE_CONTEXT_H_
