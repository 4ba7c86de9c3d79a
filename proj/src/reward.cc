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

#include "skillforge/reward.h"

#include <algorithm>
#include <functional>
#include <map>

#include "json.hpp"
#include "skillforge/envsim.h"
#include "skillforge/text.h"

namespace skillforge {
namespace {

constexpr const char *kHouseholdRules = R"({
  "env_success_bonus": 3.0,
  "step_cost": 0.01,
  "rules": [
    {"id": "subgoal_advance", "kind": "progress", "magnitude": 1.0,
     "trigger": ["subgoal_advanced"]},
    {"id": "new_hinted_location_type", "kind": "progress", "magnitude": 0.02,
     "trigger": ["search_phase", "moved_to_new_hinted_type"]},
    {"id": "open_new_hinted_container", "kind": "progress", "magnitude": 0.05,
     "trigger": ["search_phase", "opened_new_hinted_container"]},
    {"id": "reach_destination", "kind": "progress", "magnitude": 0.2, "one_time": true,
     "trigger": ["reached_destination"]},
    {"id": "open_destination", "kind": "progress", "magnitude": 0.2, "one_time": true,
     "trigger": ["holding_target", "opened_destination"]},
    {"id": "correct_placement", "kind": "progress", "magnitude": 0.5, "one_time": true,
     "trigger": ["placed_correctly"]},
    {"id": "invalid_action", "kind": "error", "magnitude": 0.3,
     "trigger": ["unparseable_action"]},
    {"id": "no_effect_action", "kind": "error", "magnitude": 0.2,
     "trigger": ["no_effect", "admissible_available"]},
    {"id": "repeated_no_progress", "kind": "error", "magnitude": 0.2,
     "trigger": ["repeated_no_progress"]},
    {"id": "late_stage_regression", "kind": "error", "magnitude": 0.3,
     "trigger": ["late_stage_regression"]},
    {"id": "look_during_placement", "kind": "error", "magnitude": 0.2,
     "trigger": ["placement_phase", "looked"]},
    {"id": "wrong_destination_instance", "kind": "error", "magnitude": 0.3,
     "trigger": ["holding_target", "moved_to_wrong_destination_instance"]},
    {"id": "revisit_location", "kind": "error", "magnitude": 0.1,
     "trigger": ["moved_to_checked_location"]},
    {"id": "reopen_searched_container", "kind": "error", "magnitude": 0.1,
     "trigger": ["opened_searched_container"]},
    {"id": "wander_after_search", "kind": "error", "magnitude": 0.15,
     "trigger": ["holding_target", "moved_off_route"]}
  ]
})";

constexpr const char *kShopRules = R"({
  "family": "shop.purchase",
  "env_success_bonus": 3.0,
  "step_cost": 0.01,
  "rules": [
    {"id": "required_option", "kind": "progress", "magnitude": 0.15,
     "trigger": ["selected_required_option"]},
    {"id": "options_filled", "kind": "progress", "magnitude": 0.10, "one_time": true,
     "trigger": ["options_filled"]},
    {"id": "wrong_option", "kind": "error", "magnitude": 0.10,
     "trigger": ["selected_wrong_option"]},
    {"id": "premature_purchase", "kind": "error", "magnitude": 0.25,
     "trigger": ["premature_purchase"]},
    {"id": "page_loop", "kind": "error", "magnitude": 0.10,
     "trigger": ["page_loop"]},
    {"id": "clicked_visited_product", "kind": "error", "magnitude": 0.08,
     "trigger": ["clicked_visited_product"]},
    {"id": "revisited_detail_page", "kind": "error", "magnitude": 0.08,
     "trigger": ["revisited_detail_page"]}
  ]
})";

std::string ClassOf(const std::string &name) {
  const size_t space = name.rfind(' ');
  return space == std::string::npos ? name : name.substr(0, space);
}

bool HoldingTarget(const TrackerState &s) {
  return s.holding && !s.target_object.empty() && *s.holding == s.target_object;
}

std::string ToolType(Family family) {
  switch (family) {
    case Family::kHouseholdClean:
      return "sinkbasin";
    case Family::kHouseholdHeat:
      return "microwave";
    case Family::kHouseholdCool:
      return "fridge";
    default:
      return "";
  }
}

std::string PageId(const TrackerState &s) {
  if (s.page == "results") return "results:" + s.query;
  if (s.page == "detail") return "detail:" + s.inspected_product.value_or("");
  return s.page;
}

// Everything an atom may look at.
struct Context {
  const RuleSet &rules;
  const TrackerState &prev;
  const TrackerState &next;
  const std::string &action;
  const ParsedAction parsed;
  const StepOutcome &outcome;
  const EpisodeMemory &memory;
  std::vector<std::string> pages;  // memory.pages after this step
  bool page_changed = false;

  bool Effective() const { return !outcome.outcomes.no_effect && parsed.valid(); }
  bool Moved() const { return Effective() && parsed.verb == "go"; }
  bool Opened() const { return Effective() && parsed.verb == "open"; }
  bool Hinted(const std::string &type) const {
    return std::find(rules.hinted_types.begin(), rules.hinted_types.end(), type) !=
           rules.hinted_types.end();
  }
  // Value inside click[...], or empty.
  std::string Clicked() const {
    return parsed.valid() && parsed.verb == "click" ? parsed.target : "";
  }
};

template <typename T>
bool Contains(const std::vector<T> &items, const T &item) {
  return std::find(items.begin(), items.end(), item) != items.end();
}

using Atom = std::function<bool(const Context &)>;

const std::map<std::string, Atom> &Atoms() {
  static const std::map<std::string, Atom> kAtoms = {
      // Shared.
      {"subgoal_advanced",
       [](const Context &c) { return SubgoalRank(c.next.current_subgoal) > c.memory.max_rank; }},
      {"unparseable_action", [](const Context &c) { return !c.parsed.valid(); }},
      {"no_effect",
       [](const Context &c) { return c.parsed.valid() && c.outcome.outcomes.no_effect; }},
      // Candidate actions always exist in these environments.
      {"admissible_available", [](const Context &) { return true; }},
      {"repeated_no_progress",
       [](const Context &c) {
         return c.next.no_progress_count > c.prev.no_progress_count && c.memory.last_no_progress;
       }},
      // Household.
      {"search_phase",
       [](const Context &c) { return c.prev.current_subgoal == Subgoal::kFindObject; }},
      {"placement_phase",
       [](const Context &c) { return c.prev.current_subgoal == Subgoal::kPlaceObject; }},
      {"holding_target", [](const Context &c) { return HoldingTarget(c.prev); }},
      {"looked", [](const Context &c) { return c.parsed.valid() && c.parsed.verb == "look"; }},
      {"moved_to_new_hinted_type",
       [](const Context &c) {
         if (!c.Moved()) return false;
         const std::string type = ClassOf(c.parsed.target);
         return c.Hinted(type) && c.memory.visited_types.count(type) == 0;
       }},
      {"opened_new_hinted_container",
       [](const Context &c) {
         return c.Opened() && c.Hinted(ClassOf(c.parsed.target)) &&
                c.memory.opened.count(c.parsed.target) == 0;
       }},
      {"reached_destination",
       [](const Context &c) {
         return c.Moved() && c.parsed.target == c.next.destination &&
                c.next.current_subgoal == Subgoal::kPlaceObject;
       }},
      {"opened_destination",
       [](const Context &c) { return c.Opened() && c.parsed.target == c.next.destination; }},
      {"placed_correctly",
       [](const Context &c) {
         return c.Effective() && (c.parsed.verb == "put" || c.parsed.verb == "examine") &&
                c.prev.current_subgoal == Subgoal::kPlaceObject &&
                c.next.current_subgoal == Subgoal::kDone;
       }},
      {"late_stage_regression",
       [](const Context &c) {
         const int before = SubgoalRank(c.prev.current_subgoal);
         return before >= SubgoalRank(Subgoal::kReachDest) &&
                c.prev.current_subgoal != Subgoal::kDone &&
                SubgoalRank(c.next.current_subgoal) < before;
       }},
      {"moved_to_wrong_destination_instance",
       [](const Context &c) {
         return c.Moved() && c.parsed.target != c.next.destination &&
                ClassOf(c.parsed.target) == ClassOf(c.next.destination);
       }},
      {"moved_to_checked_location",
       [](const Context &c) {
         return c.Moved() && Contains(c.prev.checked_locations, c.parsed.target);
       }},
      {"opened_searched_container",
       [](const Context &c) {
         return c.Opened() && Contains(c.prev.searched_containers, c.parsed.target);
       }},
      {"moved_off_route",
       [](const Context &c) {
         if (!c.Moved()) return false;
         const std::string type = ClassOf(c.parsed.target);
         if (c.parsed.target == c.next.destination || type == ClassOf(c.next.destination)) {
           return false;
         }
         const bool tool_needed = c.prev.needs_transformation && !c.prev.transformation_done;
         return !(tool_needed && type == ToolType(c.prev.family));
       }},
      // Shopping.
      {"selected_required_option",
       [](const Context &c) {
         const std::string v = c.Clicked();
         return !v.empty() && c.prev.page == "detail" && Contains(c.prev.remaining_options, v) &&
                !Contains(c.next.remaining_options, v) && c.memory.credited_options.count(v) == 0;
       }},
      {"options_filled",
       [](const Context &c) {
         return c.prev.current_subgoal == Subgoal::kSelectOptions &&
                c.next.current_subgoal == Subgoal::kPurchase;
       }},
      {"selected_wrong_option",
       [](const Context &c) {
         const std::string v = c.Clicked();
         if (v.empty() || c.prev.page != "detail" || c.outcome.outcomes.no_effect) return false;
         if (v == "Buy Now" || v == "< Prev") return false;
         for (const auto &req : c.prev.required_options) {
           if (req.second == v) return false;
         }
         return true;
       }},
      {"premature_purchase",
       [](const Context &c) {
         return c.Clicked() == "Buy Now" && !c.outcome.outcomes.no_effect &&
                !c.prev.remaining_options.empty();
       }},
      {"page_loop",
       [](const Context &c) {
         const auto &p = c.pages;
         return c.page_changed && p.size() >= 3 && p[p.size() - 1] == p[p.size() - 3];
       }},
      {"clicked_visited_product",
       [](const Context &c) {
         const std::string v = c.Clicked();
         return !v.empty() && c.prev.page == "results" && c.next.page == "detail" &&
                c.memory.clicked.count(c.prev.query + "|" + v) > 0;
       }},
      {"revisited_detail_page",
       [](const Context &c) {
         return c.page_changed && c.next.page == "detail" &&
                c.memory.detail_pages.count(PageId(c.next)) > 0;
       }},
  };
  return kAtoms;
}

RuleKind ParseKind(const std::string &kind) {
  if (kind == "progress") return RuleKind::kProgress;
  if (kind == "error") return RuleKind::kError;
  throw DataError("unknown rule kind '" + kind + "'");
}

}  // namespace

const std::vector<std::string> &KnownAtoms() {
  static const std::vector<std::string> kNames = [] {
    std::vector<std::string> names;
    for (const auto &[name, atom] : Atoms()) names.push_back(name);
    return names;
  }();
  return kNames;
}

std::string RuleSet::ToJson() const {
  nlohmann::ordered_json j;
  j["family"] = family;
  j["env_success_bonus"] = env_success_bonus;
  j["step_cost"] = step_cost;
  if (!hinted_types.empty()) j["hinted_types"] = hinted_types;
  nlohmann::ordered_json rs = nlohmann::ordered_json::array();
  for (const Rule &r : rules) {
    rs.push_back({{"id", r.id},
                  {"kind", r.kind == RuleKind::kProgress ? "progress" : "error"},
                  {"magnitude", r.magnitude},
                  {"one_time", r.one_time},
                  {"trigger", r.trigger}});
  }
  j["rules"] = rs;
  return j.dump(2);
}

RuleSet RuleSet::FromJson(const std::string &text) {
  RuleSet set;
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    set.family = j.value("family", "");
    set.env_success_bonus = j.at("env_success_bonus").get<double>();
    set.step_cost = j.at("step_cost").get<double>();
    if (j.contains("hinted_types")) {
      set.hinted_types = j.at("hinted_types").get<std::vector<std::string>>();
    }
    for (const auto &r : j.at("rules")) {
      Rule rule;
      rule.id = r.at("id").get<std::string>();
      rule.kind = ParseKind(r.at("kind").get<std::string>());
      rule.magnitude = r.at("magnitude").get<double>();
      rule.one_time = r.value("one_time", false);
      rule.trigger = r.at("trigger").get<std::vector<std::string>>();
      set.rules.push_back(std::move(rule));
    }
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("rule set: ") + e.what());
  }
  if (set.step_cost < 0) throw DataError("rule set: step_cost must be nonnegative");
  std::set<std::string> ids;
  for (const Rule &r : set.rules) {
    if (!ids.insert(r.id).second) throw DataError("rule set: duplicate rule id '" + r.id + "'");
    if (r.id == kEnvSuccessId) throw DataError("rule set: rule id '" + r.id + "' is reserved");
    if (!(r.magnitude > 0)) throw DataError("rule set: rule '" + r.id + "' needs magnitude > 0");
    if (r.trigger.empty()) throw DataError("rule set: rule '" + r.id + "' has no trigger");
    for (const auto &atom : r.trigger) {
      const std::string name = StartsWith(atom, "!") ? atom.substr(1) : atom;
      if (Atoms().count(name) == 0) {
        throw DataError("rule set: rule '" + r.id + "' uses unknown atom '" + name + "'");
      }
    }
  }
  return set;
}

RuleSet BuiltinRules(Family family) {
  if (family == Family::kShopPurchase) return RuleSet::FromJson(kShopRules);
  if (!IsHousehold(family)) throw UsageError("no rules for family " + FamilyName(family));
  RuleSet set = RuleSet::FromJson(kHouseholdRules);
  set.family = FamilyName(family);
  set.hinted_types = HintedLocationTypes(family);
  return set;
}

std::string RewardBreakdown::ToJson() const {
  nlohmann::ordered_json j;
  j["env"] = env;
  j["progress"] = progress;
  j["error"] = error;
  j["step_cost"] = step_cost;
  j["total"] = total;
  j["fired"] = fired;
  return j.dump();
}

RewardBreakdown ScoreStep(const RuleSet &rules, const TrackerState &prev, const std::string &action,
                          const StepOutcome &outcome, const TrackerState &next,
                          EpisodeMemory *memory, const RewardToggles &toggles) {
  Context c{rules,   prev,    next, action, ParseAction(prev.family, action),
            outcome, *memory, {},   false};
  c.pages = memory->pages;
  if (!IsHousehold(prev.family)) {
    if (c.pages.empty()) c.pages.push_back(PageId(prev));
    const std::string id = PageId(next);
    if (c.pages.back() != id) {
      c.pages.push_back(id);
      c.page_changed = true;
    }
  }

  RewardBreakdown b;
  if (outcome.env_signal >= 1.0 && rules.env_success_bonus > 0) {
    b.env = rules.env_success_bonus;
    b.fired.push_back(kEnvSuccessId);
  }
  for (const Rule &r : rules.rules) {
    const bool enabled = r.kind == RuleKind::kProgress ? toggles.progress : toggles.error;
    if (!enabled) continue;
    if (r.one_time && memory->fired_once.count(r.id) > 0) continue;
    bool hit = true;
    for (const auto &atom : r.trigger) {
      const bool negate = StartsWith(atom, "!");
      const bool value = Atoms().at(negate ? atom.substr(1) : atom)(c);
      if (value == negate) {
        hit = false;
        break;
      }
    }
    if (!hit) continue;
    b.fired.push_back(r.id);
    if (r.kind == RuleKind::kProgress) {
      b.progress += r.magnitude;
    } else {
      b.error += r.magnitude;
    }
  }
  if (toggles.step_cost) b.step_cost = rules.step_cost;
  b.total = b.env + b.progress - b.error - b.step_cost;

  // Advance the memory.
  for (const Rule &r : rules.rules) {
    if (r.one_time && std::find(b.fired.begin(), b.fired.end(), r.id) != b.fired.end()) {
      memory->fired_once.insert(r.id);
    }
  }
  memory->max_rank = std::max(memory->max_rank, SubgoalRank(next.current_subgoal));
  memory->last_no_progress = next.no_progress_count > prev.no_progress_count;
  if (c.Moved()) memory->visited_types.insert(ClassOf(c.parsed.target));
  if (c.Opened()) memory->opened.insert(c.parsed.target);
  if (prev.page == "results" && next.page == "detail" && !c.Clicked().empty()) {
    memory->clicked.insert(prev.query + "|" + c.Clicked());
  }
  if (next.page == "detail") memory->detail_pages.insert(PageId(next));
  if (Atoms().at("selected_required_option")(c)) memory->credited_options.insert(c.Clicked());
  memory->pages = std::move(c.pages);
  return b;
}

std::vector<double> EpisodeReturns(const std::vector<double> &rewards, double gamma) {
  if (rewards.empty()) throw DataError("returns need at least one reward");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw DataError("gamma must lie in (0, 1]");
  std::vector<double> out(rewards.size());
  double acc = 0.0;
  for (size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    out[i] = acc;
  }
  return out;
}

}  // namespace skillforge
