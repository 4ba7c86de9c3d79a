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

// Deterministic task trackers. A tracker reads only the instruction, the
// observations, and the previous action; it never sees environment internals.
//
//   TrackerState s = tracker::Init(family, instruction);
//   s = tracker::Update(s, std::nullopt, first_observation);
//   StateBlock b = tracker::Render(s);

#ifndef SKILLFORGE_TRACKER_H_
#define SKILLFORGE_TRACKER_H_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "skillforge/common.h"

namespace skillforge {

inline constexpr size_t kStateBlockBudget = 120;

enum class Subgoal {
  // Household.
  kFindObject,
  kTakeObject,
  kReachDest,
  kPlaceObject,
  // Shopping.
  kSearch,
  kSelectItem,
  kSelectOptions,
  kPurchase,
  // Both.
  kDone,
};

std::string SubgoalName(Subgoal subgoal);

// Position of a subgoal in its family's phase order (done is last).
int SubgoalRank(Subgoal subgoal);

struct Outcomes {
  bool succeeded = false;  // the observation reports an effect
  bool no_effect = false;  // "Nothing happens."
  bool purchase_confirmed = false;
  bool acquired = false;  // an object was picked up

  bool operator==(const Outcomes &) const = default;
};

struct ParseResult {
  std::vector<std::string> entities;   // objects or product ids
  std::vector<std::string> locations;  // receptacles
  std::vector<std::string> options;    // option values visible or selected
  Outcomes outcomes;

  bool operator==(const ParseResult &) const = default;
};

struct TrackerState {
  Family family = Family::kHouseholdPick;

  // Household.
  std::string target_class;   // from the instruction
  std::string target_object;  // bound to the first visible instance
  std::string destination;
  std::optional<std::string> holding;
  std::string location;   // empty: middle of the room
  std::string target_at;  // where an unheld target was last seen
  std::vector<std::string> checked_locations;
  std::vector<std::string> searched_containers;
  bool needs_transformation = false;
  bool transformation_done = false;

  // Shopping.
  std::string category;
  std::vector<std::string> attributes;
  std::vector<std::pair<std::string, std::string>> required_options;  // (dim, value)
  double price_ceiling = 0.0;
  std::string page;  // search | results | detail | done
  std::string query;
  std::optional<std::string> inspected_product;
  std::vector<std::pair<std::string, std::string>> selected_options;  // (dim, value)
  std::vector<std::string> remaining_options;
  std::vector<std::string> mismatches;  // goal terms the inspected product lacks

  Subgoal current_subgoal = Subgoal::kFindObject;
  int no_progress_count = 0;

  bool operator==(const TrackerState &) const = default;

  // Canonical JSON with a fixed key order.
  std::string ToJson() const;
};

struct StateBlock {
  std::vector<std::string> lines;  // "key: value"
  size_t token_len = 0;

  std::string Text() const;
};

namespace tracker {

// Throws DataError naming the missing slot when the instruction does not
// match the family's instruction grammar.
TrackerState Init(Family family, const std::string &instruction);

ParseResult Parse(Family family, const std::string &instruction, const std::string &observation,
                  const std::optional<std::string> &prev_action);

TrackerState Update(const TrackerState &state, const std::optional<std::string> &prev_action,
                    const std::string &observation);

StateBlock Render(const TrackerState &state);

}  // namespace tracker
}  // namespace skillforge

#endif  // SKILLFORGE_TRACKER_H_
