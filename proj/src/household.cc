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

#include <algorithm>
#include <set>

#include "envsim_internal.h"
#include "skillforge/text.h"

namespace skillforge {
namespace household {
namespace {

const std::set<std::string> kOpenableTypes = {"cabinet", "drawer", "fridge", "microwave", "safe"};

const std::vector<std::string> kFillerTypes = {"garbagecan", "bed", "sofa", "armchair", "toilet"};

const std::vector<std::string> &ObjectClasses(Family family) {
  static const std::vector<std::string> kPick = {
      "mug",     "apple",  "book", "cellphone", "pen",  "bowl",   "plate",        "knife",
      "soapbar", "tomato", "cd",   "keychain",  "vase", "pillow", "remotecontrol"};
  static const std::vector<std::string> kClean = {"mug",    "bowl", "plate", "knife", "apple",
                                                  "tomato", "cup",  "fork",  "spoon", "pan"};
  static const std::vector<std::string> kHeat = {"mug", "cup",    "apple", "potato",
                                                 "egg", "tomato", "bread", "plate"};
  static const std::vector<std::string> kCool = {"mug",    "cup",   "apple",   "potato", "egg",
                                                 "tomato", "bread", "lettuce", "pan"};
  static const std::vector<std::string> kExamine = {"book",     "cellphone", "pen",        "cd",
                                                    "keychain", "pencil",    "creditcard", "watch"};
  switch (family) {
    case Family::kHouseholdClean:
      return kClean;
    case Family::kHouseholdHeat:
      return kHeat;
    case Family::kHouseholdCool:
      return kCool;
    case Family::kHouseholdExamine:
      return kExamine;
    default:
      return kPick;
  }
}

const std::vector<std::string> &DestinationTypes(Family family) {
  static const std::vector<std::string> kPlace = {"desk",        "dresser", "garbagecan",
                                                  "safe",        "shelf",   "countertop",
                                                  "diningtable", "cabinet", "coffeetable"};
  static const std::vector<std::string> kLamp = {"desk", "sidetable", "dresser"};
  return family == Family::kHouseholdExamine ? kLamp : kPlace;
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

// "cabinet 12" -> ("cabinet", 12)
std::pair<std::string, int> SplitName(const std::string &name) {
  const size_t space = name.rfind(' ');
  if (space == std::string::npos) return {name, 0};
  return {name.substr(0, space), std::atoi(name.c_str() + space + 1)};
}

const HouseholdHidden &Hidden(const EnvState &state) {
  return std::get<HouseholdHidden>(state.spec->hidden);
}

const Receptacle *FindReceptacle(const HouseholdHidden &hidden, const std::string &name) {
  for (const Receptacle &r : hidden.receptacles) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

bool IsOpen(const EnvState &state, const std::string &receptacle) {
  auto it = state.object_states.find(receptacle);
  return it != state.object_states.end() && it->second.open;
}

// Contents are visible when the receptacle is open or not openable.
bool Accessible(const EnvState &state, const Receptacle &r) {
  return !r.openable || IsOpen(state, r.name);
}

const std::vector<std::string> &ContentsOf(const EnvState &state, const std::string &name) {
  static const std::vector<std::string> kEmpty;
  auto it = state.contents.find(name);
  return it == state.contents.end() ? kEmpty : it->second;
}

std::string ContentsSentence(const EnvState &state, const Receptacle &r) {
  const auto &items = ContentsOf(state, r.name);
  const std::string listing = items.empty() ? "nothing" : FormatItemList(items);
  if (r.openable) return "The " + r.name + " is open. In it, you see " + listing + ".";
  return "On the " + r.name + ", you see " + listing + ".";
}

std::string DescribeReceptacle(const EnvState &state, const Receptacle &r) {
  if (r.openable && !IsOpen(state, r.name)) return "The " + r.name + " is closed.";
  return ContentsSentence(state, r);
}

bool Takeable(const std::string &object) { return SplitName(object).first != "desklamp"; }

std::string ObjectClass(const std::string &object) { return SplitName(object).first; }

bool TransformSatisfied(Family family, const ObjectFlags &flags) {
  switch (family) {
    case Family::kHouseholdClean:
      return flags.clean;
    case Family::kHouseholdHeat:
      return flags.hot;
    case Family::kHouseholdCool:
      return flags.cold;
    default:
      return true;
  }
}

std::string TransformVerb(Family family) {
  switch (family) {
    case Family::kHouseholdClean:
      return "clean";
    case Family::kHouseholdHeat:
      return "heat";
    case Family::kHouseholdCool:
      return "cool";
    default:
      return "";
  }
}

std::string VerbTool(const std::string &verb) {
  if (verb == "clean") return "sinkbasin";
  if (verb == "heat") return "microwave";
  if (verb == "cool") return "fridge";
  return "";
}

// The expert's search order: hinted receptacles other than the destination
// and the tool, by hint rank then instance number.
std::vector<std::string> SearchOrder(const HouseholdHidden &hidden) {
  std::vector<std::pair<std::pair<size_t, int>, std::string>> keyed;
  for (const Receptacle &r : hidden.receptacles) {
    if (r.name == hidden.destination || r.name == hidden.tool) continue;
    auto rank = std::find(hidden.hinted_types.begin(), hidden.hinted_types.end(), r.type);
    if (rank == hidden.hinted_types.end()) continue;
    keyed.push_back(
        {{static_cast<size_t>(rank - hidden.hinted_types.begin()), SplitName(r.name).second},
         r.name});
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::string> order;
  for (auto &k : keyed) order.push_back(k.second);
  return order;
}

std::string Article(const std::string &word) {
  const char c = word.empty() ? 'x' : word[0];
  return (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') ? "an" : "a";
}

}  // namespace

EpisodeSpec Generate(Family family, uint64_t seed) {
  Rng rng(MixSeed({0x484f555345ULL, static_cast<uint64_t>(family), seed}));
  HouseholdHidden hidden;
  hidden.hinted_types = HintedLocationTypes(family);

  const std::string dest_type = rng.Pick(DestinationTypes(family));
  const std::string tool_type = ToolType(family);
  const int type_count = rng.UniformInt(3, 6);

  std::vector<std::string> types = {dest_type};
  if (!tool_type.empty()) types.push_back(tool_type);
  {
    std::vector<std::string> hinted;
    for (const auto &t : hidden.hinted_types) {
      if (t != dest_type) hinted.push_back(t);
    }
    types.push_back(rng.Pick(hinted));
  }
  std::vector<std::string> pool = hidden.hinted_types;
  pool.insert(pool.end(), kFillerTypes.begin(), kFillerTypes.end());
  while (static_cast<int>(types.size()) < type_count) {
    const std::string &t = rng.Pick(pool);
    if (std::find(types.begin(), types.end(), t) == types.end()) types.push_back(t);
  }

  // One instance per type, then extra instances on any non-tool type.
  std::map<std::string, int> instances;
  for (const auto &t : types) instances[t] = 1;
  const int total = rng.UniformInt(std::max(4, type_count), 10);
  std::vector<std::string> growable;
  for (const auto &t : types) {
    if (t != tool_type) growable.push_back(t);
  }
  for (int n = type_count; n < total; ++n) instances[rng.Pick(growable)] += 1;

  for (const auto &[type, count] : instances) {
    for (int i = 1; i <= count; ++i) {
      hidden.receptacles.push_back(
          {type + " " + std::to_string(i), type, kOpenableTypes.count(type) > 0});
    }
  }
  std::sort(hidden.receptacles.begin(), hidden.receptacles.end(),
            [](const Receptacle &a, const Receptacle &b) {
              auto sa = SplitName(a.name), sb = SplitName(b.name);
              return sa < sb;
            });

  hidden.destination = dest_type + " " + std::to_string(rng.UniformInt(1, instances[dest_type]));
  if (!tool_type.empty()) hidden.tool = tool_type + " 1";

  // Target placement candidates: hinted, not destination, not tool.
  std::vector<std::string> target_spots = SearchOrder(hidden);
  std::vector<std::string> other_spots;
  for (const Receptacle &r : hidden.receptacles) {
    if (r.name != hidden.destination && r.name != hidden.tool) other_spots.push_back(r.name);
  }

  const auto &classes = ObjectClasses(family);
  hidden.target_class = rng.Pick(classes);
  std::map<std::string, int> next_index;
  auto new_object = [&](const std::string &cls) {
    return cls + " " + std::to_string(++next_index[cls]);
  };
  for (const auto &r : hidden.receptacles) hidden.contents[r.name];

  const int target_count = rng.Uniform() < 0.2 ? 2 : 1;
  for (int i = 0; i < target_count; ++i) {
    hidden.contents[rng.Pick(target_spots)].push_back(new_object(hidden.target_class));
  }
  std::vector<std::string> distractor_classes;
  for (Family f : AllFamilies()) {
    if (!IsHousehold(f)) continue;
    for (const auto &c : ObjectClasses(f)) {
      if (c != hidden.target_class &&
          std::find(distractor_classes.begin(), distractor_classes.end(), c) ==
              distractor_classes.end()) {
        distractor_classes.push_back(c);
      }
    }
  }
  const int distractors = rng.UniformInt(2, 12 - target_count - 2);
  for (int i = 0; i < distractors; ++i) {
    hidden.contents[rng.Pick(other_spots)].push_back(new_object(rng.Pick(distractor_classes)));
  }
  if (family == Family::kHouseholdExamine) {
    hidden.contents[hidden.destination].push_back("desklamp 1");
  }

  EpisodeSpec spec;
  spec.family = family;
  spec.seed = seed;
  const std::string &cls = hidden.target_class;
  const std::string a = Article(cls);
  switch (family) {
    case Family::kHouseholdPick:
      spec.instruction = "put " + a + " " + cls + " in " + hidden.destination;
      break;
    case Family::kHouseholdClean:
    case Family::kHouseholdHeat:
    case Family::kHouseholdCool:
      spec.instruction =
          TransformVerb(family) + " " + a + " " + cls + " and put it in " + hidden.destination;
      break;
    case Family::kHouseholdExamine:
      spec.instruction =
          "examine " + a + " " + cls + " under the desklamp on " + hidden.destination;
      break;
    default:
      break;
  }
  spec.hidden = std::move(hidden);
  return spec;
}

std::string RoomListing(const EnvState &state) {
  std::vector<std::string> names;
  for (const Receptacle &r : Hidden(state).receptacles) names.push_back(r.name);
  return "You are in the middle of a room. Looking quickly around you, you see " +
         FormatItemList(names) + ".";
}

ResetResult Reset(const EpisodeSpec &spec) {
  ResetResult out;
  EnvState &s = out.state;
  s.spec = std::make_shared<const EpisodeSpec>(spec);
  const auto &hidden = std::get<HouseholdHidden>(spec.hidden);
  s.contents = hidden.contents;
  for (const Receptacle &r : hidden.receptacles) {
    if (r.openable) s.object_states[r.name] = ObjectFlags{};
  }
  for (const auto &[rec, items] : hidden.contents) {
    for (const auto &o : items) s.object_states[o] = ObjectFlags{};
  }
  out.observation = RoomListing(s);
  return out;
}

ParsedAction Parse(const std::string &action) {
  ParsedAction p;
  const std::string a = Trim(action);
  auto rest = [&](std::string_view prefix) { return a.substr(prefix.size()); };
  auto nonempty = [](const std::string &s) { return !s.empty() && Trim(s) == s; };
  if (a == "look") {
    p.verb = "look";
  } else if (StartsWith(a, "go to ")) {
    if (nonempty(rest("go to "))) p = {"go", "", rest("go to ")};
  } else if (StartsWith(a, "open ")) {
    if (nonempty(rest("open "))) p = {"open", "", rest("open ")};
  } else if (StartsWith(a, "close ")) {
    if (nonempty(rest("close "))) p = {"close", "", rest("close ")};
  } else if (StartsWith(a, "examine ")) {
    if (nonempty(rest("examine "))) p = {"examine", "", rest("examine ")};
  } else if (StartsWith(a, "take ")) {
    const std::string body = rest("take ");
    const size_t pos = body.find(" from ");
    if (pos != std::string::npos && pos > 0 && pos + 6 < body.size()) {
      p = {"take", body.substr(0, pos), body.substr(pos + 6)};
    }
  } else if (StartsWith(a, "put ")) {
    const std::string body = rest("put ");
    const size_t pos = body.find(" in/on ");
    if (pos != std::string::npos && pos > 0 && pos + 7 < body.size()) {
      p = {"put", body.substr(0, pos), body.substr(pos + 7)};
    }
  } else {
    for (const char *verb : {"clean", "heat", "cool"}) {
      const std::string prefix = std::string(verb) + " ";
      if (!StartsWith(a, prefix)) continue;
      const std::string body = a.substr(prefix.size());
      const size_t pos = body.find(" with ");
      if (pos != std::string::npos && pos > 0 && pos + 6 < body.size()) {
        p = {verb, body.substr(0, pos), body.substr(pos + 6)};
      }
    }
  }
  return p;
}

StepResult Apply(const EnvState &state, const ParsedAction &action) {
  const HouseholdHidden &hidden = Hidden(state);
  const Family family = state.spec->family;
  StepResult out;
  out.state = state;
  EnvState &s = out.state;
  out.observation = kNothingHappens;
  const Receptacle *here = FindReceptacle(hidden, state.agent_location);

  if (action.verb == "look") {
    if (here == nullptr) {
      out.observation = RoomListing(state);
    } else {
      out.observation = "You are facing the " + here->name + ". Next to it, you see nothing.";
    }
  } else if (action.verb == "go") {
    const Receptacle *dest = FindReceptacle(hidden, action.target);
    if (dest != nullptr && dest->name != state.agent_location) {
      s.agent_location = dest->name;
      out.observation = "You arrive at " + dest->name + ". " + DescribeReceptacle(state, *dest);
    }
  } else if (action.verb == "open") {
    if (here != nullptr && here->name == action.target && here->openable &&
        !IsOpen(state, here->name)) {
      s.object_states[here->name].open = true;
      out.observation = "You open the " + here->name + ". " + ContentsSentence(s, *here);
    }
  } else if (action.verb == "close") {
    if (here != nullptr && here->name == action.target && here->openable &&
        IsOpen(state, here->name)) {
      s.object_states[here->name].open = false;
      out.observation = "You close the " + here->name + ".";
    }
  } else if (action.verb == "take") {
    if (here != nullptr && here->name == action.target && Accessible(state, *here) &&
        !state.holding && Takeable(action.object)) {
      auto &items = s.contents[here->name];
      auto it = std::find(items.begin(), items.end(), action.object);
      if (it != items.end()) {
        items.erase(it);
        s.holding = action.object;
        out.observation = "You pick up the " + action.object + " from the " + here->name + ".";
      }
    }
  } else if (action.verb == "put") {
    if (here != nullptr && here->name == action.target && Accessible(state, *here) &&
        state.holding && *state.holding == action.object) {
      s.contents[here->name].push_back(action.object);
      s.holding.reset();
      out.observation = "You put the " + action.object + " in/on the " + here->name + ".";
      if (family != Family::kHouseholdExamine && here->name == hidden.destination &&
          ObjectClass(action.object) == hidden.target_class &&
          TransformSatisfied(family, s.object_states[action.object])) {
        out.done = true;
        out.env_signal = 1.0;
        s.success = true;
        s.env_score = 1.0;
      }
    }
  } else if (action.verb == "examine") {
    if (here != nullptr && here->name == action.target) {
      out.observation = DescribeReceptacle(state, *here);
    } else if (state.holding && *state.holding == action.target) {
      if (family == Family::kHouseholdExamine && here != nullptr &&
          here->name == hidden.destination && ObjectClass(action.target) == hidden.target_class) {
        out.observation = "You examine the " + action.target + " under the desklamp 1.";
        out.done = true;
        out.env_signal = 1.0;
        s.success = true;
        s.env_score = 1.0;
      } else {
        out.observation = "This is a normal " + action.target + ".";
      }
    }
  } else if (action.verb == "clean" || action.verb == "heat" || action.verb == "cool") {
    if (here != nullptr && here->name == action.target && here->type == VerbTool(action.verb) &&
        state.holding && *state.holding == action.object) {
      ObjectFlags &flags = s.object_states[action.object];
      if (action.verb == "clean") flags.clean = true;
      if (action.verb == "heat") flags.hot = true;
      if (action.verb == "cool") flags.cold = true;
      out.observation =
          "You " + action.verb + " the " + action.object + " using the " + here->name + ".";
    }
  }
  return out;
}

std::vector<std::string> Admissible(const EnvState &state) {
  const HouseholdHidden &hidden = Hidden(state);
  std::vector<std::string> actions;
  for (const Receptacle &r : hidden.receptacles) {
    if (r.name != state.agent_location) actions.push_back("go to " + r.name);
  }
  const Receptacle *here = FindReceptacle(hidden, state.agent_location);
  if (here != nullptr) {
    if (here->openable) {
      actions.push_back((IsOpen(state, here->name) ? "close " : "open ") + here->name);
    }
    if (Accessible(state, *here)) {
      if (!state.holding) {
        for (const auto &o : ContentsOf(state, here->name)) {
          if (Takeable(o)) actions.push_back("take " + o + " from " + here->name);
        }
      } else {
        actions.push_back("put " + *state.holding + " in/on " + here->name);
      }
    }
    if (state.holding) {
      for (const char *verb : {"clean", "heat", "cool"}) {
        if (here->type == VerbTool(verb)) {
          actions.push_back(std::string(verb) + " " + *state.holding + " with " + here->name);
        }
      }
    }
    actions.push_back("examine " + here->name);
  }
  if (state.holding) actions.push_back("examine " + *state.holding);
  actions.push_back("look");
  return actions;
}

std::string Expert(const EnvState &state) {
  const HouseholdHidden &hidden = Hidden(state);
  const Family family = state.spec->family;
  const Receptacle *here = FindReceptacle(hidden, state.agent_location);
  const bool holding_target = state.holding && ObjectClass(*state.holding) == hidden.target_class;

  if (!holding_target) {
    if (here != nullptr && Accessible(state, *here) && !state.holding) {
      for (const auto &o : ContentsOf(state, here->name)) {
        if (ObjectClass(o) == hidden.target_class) return "take " + o + " from " + here->name;
      }
    }
    const std::vector<std::string> order = SearchOrder(hidden);
    auto pos = std::find(order.begin(), order.end(), state.agent_location);
    if (pos != order.end() && here->openable && !IsOpen(state, here->name)) {
      return "open " + here->name;
    }
    if (pos == order.end()) return "go to " + order.front();
    if (pos + 1 != order.end()) return "go to " + *(pos + 1);
    return "look";  // unreachable: the target is always on the search path
  }

  const std::string &object = *state.holding;
  auto flags = state.object_states.find(object);
  const bool transformed =
      flags != state.object_states.end() && TransformSatisfied(family, flags->second);
  if (!transformed) {
    if (state.agent_location != hidden.tool) return "go to " + hidden.tool;
    return TransformVerb(family) + " " + object + " with " + hidden.tool;
  }
  if (state.agent_location != hidden.destination) return "go to " + hidden.destination;
  if (here->openable && !IsOpen(state, here->name)) return "open " + here->name;
  if (family == Family::kHouseholdExamine) return "examine " + object;
  return "put " + object + " in/on " + here->name;
}

}  // namespace household
}  // namespace skillforge
