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

// Deterministic desk-scale text environments: a household world with
// pick/clean/heat/cool/examine tasks and a small shopping site. Every episode
// is a pure function of (family, seed, action sequence).

#ifndef SKILLFORGE_ENVSIM_H_
#define SKILLFORGE_ENVSIM_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "skillforge/common.h"

namespace skillforge {

inline constexpr const char *kNothingHappens = "Nothing happens.";

// ---------------------------------------------------------------------------
// Household world.

struct Receptacle {
  std::string name;  // "cabinet 2"
  std::string type;  // "cabinet"
  bool openable = false;
};

struct HouseholdHidden {
  std::vector<Receptacle> receptacles;  // room listing order
  std::map<std::string, std::vector<std::string>> contents;
  std::string target_class;
  std::string destination;
  std::string tool;  // "sinkbasin 1" etc.; empty for pick and examine
  std::vector<std::string> hinted_types;
};

// ---------------------------------------------------------------------------
// Shopping world.

struct OptionDim {
  std::string name;  // "color"
  std::vector<std::string> values;
};

struct Product {
  std::string id;  // "b17"
  std::string title;
  std::string category;
  std::vector<std::string> attributes;
  double price = 0.0;
  std::vector<OptionDim> options;
};

// The built-in catalog: 60 products over 10 categories.
const std::vector<Product> &Catalog();
const Product *FindProduct(const std::string &id);

struct ShopGoal {
  std::string category;
  std::vector<std::string> attributes;
  std::vector<std::pair<std::string, std::string>> options;  // (dim, value)
  double price_ceiling = 0.0;
};

struct ShopHidden {
  std::string target_id;
  ShopGoal goal;
};

// Goal-attribute match fraction of buying `product` with `selected` options:
// the mean of category match, attribute fraction, option fraction, and the
// price test.
double PurchaseScore(const ShopGoal &goal, const Product &product,
                     const std::map<std::string, std::string> &selected);

// Queries the search page accepts for a goal, shortest first.
std::vector<std::string> GoalQueries(const ShopGoal &goal);

// Products whose title or attributes contain every query word, by id.
std::vector<const Product *> SearchCatalog(const std::string &query);

// ---------------------------------------------------------------------------

struct EpisodeSpec {
  Family family = Family::kHouseholdPick;
  uint64_t seed = 0;
  std::string instruction;
  std::variant<HouseholdHidden, ShopHidden> hidden;

  // Canonical serialization; equal specs serialize to equal bytes.
  std::string Serialize() const;
};

struct ObjectFlags {
  bool clean = false;
  bool hot = false;
  bool cold = false;
  bool open = false;  // receptacles only

  bool operator==(const ObjectFlags &) const = default;
};

enum class ShopPageKind { kNone, kSearch, kResults, kDetail };

struct ShopPage {
  ShopPageKind kind = ShopPageKind::kNone;
  std::string query;
  std::vector<std::string> results;  // product ids on a results page
  std::string product_id;            // detail page

  bool operator==(const ShopPage &) const = default;
};

struct EnvState {
  std::shared_ptr<const EpisodeSpec> spec;
  // Household.
  std::string agent_location;  // empty: middle of the room
  std::optional<std::string> holding;
  std::map<std::string, ObjectFlags> object_states;
  std::map<std::string, std::vector<std::string>> contents;
  // Shopping.
  ShopPage shop_page;
  std::map<std::string, std::string> selected_options;  // dim -> value
  // Common.
  int step_index = 0;
  bool done = false;
  bool success = false;
  double env_score = 0.0;
};

struct StepResult {
  EnvState state;
  std::string observation;
  double env_signal = 0.0;
  bool done = false;
};

struct ResetResult {
  EnvState state;
  std::string observation;
};

// A parsed action. `verb` is empty when the text does not parse under the
// family grammar.
struct ParsedAction {
  std::string verb;  // go, take, put, open, close, examine, look, clean,
                     // heat, cool, search, click
  std::string object;
  std::string target;

  bool valid() const { return !verb.empty(); }
};

ParsedAction ParseAction(Family family, const std::string &action);

int StepCap(Family family);

// Family hint list: receptacle types where objects are likely found.
const std::vector<std::string> &HintedLocationTypes(Family family);

EpisodeSpec GenerateEpisode(Family family, uint64_t seed);
ResetResult Reset(const EpisodeSpec &spec);
StepResult Step(const EnvState &state, const std::string &action);
std::vector<std::string> AdmissibleActions(const EnvState &state);
std::string ExpertAction(const EnvState &state);

// A recorded episode. `final_observation` is the observation returned by the
// last action and `admissible` holds each step's candidate actions; both are
// optional in the JSONL form.
struct Trajectory {
  std::string family;
  std::string instruction;
  std::vector<std::pair<std::string, std::string>> steps;  // (observation, action)
  bool success = false;
  double env_score = 0.0;
  std::string final_observation;
  std::vector<std::vector<std::string>> admissible;

  bool operator==(const Trajectory &) const = default;
};

// Runs the expert from reset; throws InvariantError if it fails.
Trajectory RunExpert(Family family, uint64_t seed);

}  // namespace skillforge

#endif  // SKILLFORGE_ENVSIM_H_
