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

#include "skillforge/envsim.h"

#include "envsim_internal.h"
#include "json.hpp"

namespace skillforge {

ParsedAction ParseAction(Family family, const std::string &action) {
  return IsHousehold(family) ? household::Parse(action) : shop::Parse(action);
}

int StepCap(Family family) { return IsHousehold(family) ? 30 : 15; }

const std::vector<std::string> &HintedLocationTypes(Family family) {
  // Never lists a family's tool type: the tool is not a search location.
  static const std::vector<std::string> kPick = {"countertop", "cabinet",     "drawer",
                                                 "shelf",      "diningtable", "sidetable"};
  static const std::vector<std::string> kKitchen = {"countertop", "cabinet", "diningtable", "shelf",
                                                    "drawer"};
  static const std::vector<std::string> kExamine = {"drawer", "shelf", "cabinet", "bed", "sofa"};
  static const std::vector<std::string> kNone;
  switch (family) {
    case Family::kHouseholdPick:
      return kPick;
    case Family::kHouseholdClean:
    case Family::kHouseholdHeat:
    case Family::kHouseholdCool:
      return kKitchen;
    case Family::kHouseholdExamine:
      return kExamine;
    case Family::kShopPurchase:
      break;
  }
  return kNone;
}

EpisodeSpec GenerateEpisode(Family family, uint64_t seed) {
  return IsHousehold(family) ? household::Generate(family, seed) : shop::Generate(seed);
}

ResetResult Reset(const EpisodeSpec &spec) {
  return IsHousehold(spec.family) ? household::Reset(spec) : shop::Reset(spec);
}

StepResult Step(const EnvState &state, const std::string &action) {
  if (state.done) throw InvariantError("step called on a finished episode");
  const Family family = state.spec->family;
  const ParsedAction parsed = ParseAction(family, action);
  StepResult out;
  if (parsed.valid()) {
    out = IsHousehold(family) ? household::Apply(state, parsed) : shop::Apply(state, parsed);
  } else {
    out.state = state;
    out.observation = kNothingHappens;
  }
  out.state.step_index = state.step_index + 1;
  if (out.done) out.state.done = true;
  if (out.state.step_index >= StepCap(family)) {
    out.state.done = true;
    out.done = true;
  }
  return out;
}

std::vector<std::string> AdmissibleActions(const EnvState &state) {
  return IsHousehold(state.spec->family) ? household::Admissible(state) : shop::Admissible(state);
}

std::string ExpertAction(const EnvState &state) {
  return IsHousehold(state.spec->family) ? household::Expert(state) : shop::Expert(state);
}

Trajectory RunExpert(Family family, uint64_t seed) {
  const EpisodeSpec spec = GenerateEpisode(family, seed);
  ResetResult reset = Reset(spec);
  Trajectory traj;
  traj.family = FamilyName(family);
  traj.instruction = spec.instruction;
  EnvState state = std::move(reset.state);
  std::string observation = std::move(reset.observation);
  while (!state.done) {
    const std::string action = ExpertAction(state);
    traj.steps.push_back({observation, action});
    traj.admissible.push_back(AdmissibleActions(state));
    StepResult r = Step(state, action);
    if (r.observation == kNothingHappens) {
      throw InvariantError("expert action '" + action + "' had no effect (" + FamilyName(family) +
                           ", seed " + std::to_string(seed) + ")");
    }
    state = std::move(r.state);
    observation = std::move(r.observation);
  }
  if (!state.success) {
    throw InvariantError("expert failed on " + FamilyName(family) + " seed " +
                         std::to_string(seed));
  }
  traj.success = true;
  traj.env_score = state.env_score;
  traj.final_observation = observation;
  return traj;
}

std::string EpisodeSpec::Serialize() const {
  nlohmann::ordered_json j;
  j["family"] = FamilyName(family);
  j["seed"] = seed;
  j["instruction"] = instruction;
  if (const auto *h = std::get_if<HouseholdHidden>(&hidden)) {
    nlohmann::ordered_json recs = nlohmann::ordered_json::array();
    for (const Receptacle &r : h->receptacles) {
      recs.push_back({{"name", r.name}, {"type", r.type}, {"openable", r.openable}});
    }
    nlohmann::ordered_json contents = nlohmann::ordered_json::object();
    for (const auto &[name, items] : h->contents) contents[name] = items;
    j["hidden"] = {
        {"receptacles", recs},           {"contents", contents}, {"target_class", h->target_class},
        {"destination", h->destination}, {"tool", h->tool},      {"hinted_types", h->hinted_types}};
  } else {
    const auto &s = std::get<ShopHidden>(hidden);
    nlohmann::ordered_json options = nlohmann::ordered_json::array();
    for (const auto &[dim, value] : s.goal.options) options.push_back({dim, value});
    j["hidden"] = {{"target_id", s.target_id},
                   {"category", s.goal.category},
                   {"attributes", s.goal.attributes},
                   {"options", options},
                   {"price_ceiling", s.goal.price_ceiling}};
  }
  return j.dump();
}

}  // namespace skillforge
