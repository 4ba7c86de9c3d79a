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

#include "skillforge/tracker.h"

#include <algorithm>
#include <cstdlib>

#include "json.hpp"
#include "skillforge/text.h"

namespace skillforge {
namespace {

constexpr const char *kNothing = "Nothing happens.";

template <typename T>
bool Contains(const std::vector<T> &items, const T &item) {
  return std::find(items.begin(), items.end(), item) != items.end();
}

void AddUnique(std::vector<std::string> *items, const std::string &item) {
  if (!Contains(*items, item)) items->push_back(item);
}

std::string ClassOf(const std::string &object) {
  const size_t space = object.rfind(' ');
  return space == std::string::npos ? object : object.substr(0, space);
}

// Returns the text between `prefix` and the first occurrence of `stop` after
// it, or nullopt when `text` does not start with `prefix`.
std::optional<std::string> Between(const std::string &text, const std::string &prefix,
                                   const std::string &stop) {
  if (!StartsWith(text, prefix)) return std::nullopt;
  const size_t end = text.find(stop, prefix.size());
  if (end == std::string::npos) return std::nullopt;
  return text.substr(prefix.size(), end - prefix.size());
}

// ---------------------------------------------------------------------------
// Household observations.

struct HouseholdFacts {
  enum Kind {
    kOther,
    kNothing,
    kArrive,
    kOpen,
    kClose,
    kTake,
    kPut,
    kTransform,
    kExamined,
    kRoom
  } kind = kOther;
  std::string object;
  std::string receptacle;
  std::string verb;  // clean / heat / cool
  bool contents_visible = false;
  std::vector<std::string> visible;
  std::vector<std::string> room;
};

// Parses the contents clause of an arrival or open observation.
void ParseContents(const std::string &rest, const std::string &receptacle, HouseholdFacts *f) {
  const std::string in_it = "The " + receptacle + " is open. In it, you see ";
  const std::string on_it = "On the " + receptacle + ", you see ";
  std::string list;
  if (StartsWith(rest, in_it)) {
    list = rest.substr(in_it.size());
  } else if (StartsWith(rest, on_it)) {
    list = rest.substr(on_it.size());
  } else {
    return;
  }
  f->contents_visible = true;
  list = StripSuffix(list, ".");
  if (list != "nothing") f->visible = SplitItemList(list);
}

HouseholdFacts ParseHouseholdObservation(const std::string &obs) {
  HouseholdFacts f;
  if (obs == kNothing) {
    f.kind = HouseholdFacts::kNothing;
    return f;
  }
  const std::string room = "You are in the middle of a room. Looking quickly around you, you see ";
  if (StartsWith(obs, room)) {
    f.kind = HouseholdFacts::kRoom;
    f.room = SplitItemList(StripSuffix(obs.substr(room.size()), "."));
    return f;
  }
  if (auto r = Between(obs, "You arrive at ", ". ")) {
    f.kind = HouseholdFacts::kArrive;
    f.receptacle = *r;
    ParseContents(obs.substr(std::string("You arrive at ").size() + r->size() + 2), *r, &f);
    return f;
  }
  if (auto r = Between(obs, "You open the ", ". ")) {
    f.kind = HouseholdFacts::kOpen;
    f.receptacle = *r;
    ParseContents(obs.substr(std::string("You open the ").size() + r->size() + 2), *r, &f);
    return f;
  }
  if (auto r = Between(obs, "You close the ", ".")) {
    f.kind = HouseholdFacts::kClose;
    f.receptacle = *r;
    return f;
  }
  if (auto o = Between(obs, "You pick up the ", " from the ")) {
    f.kind = HouseholdFacts::kTake;
    f.object = *o;
    const size_t at = std::string("You pick up the ").size() + o->size() + 10;
    f.receptacle = StripSuffix(obs.substr(at), ".");
    return f;
  }
  if (auto o = Between(obs, "You put the ", " in/on the ")) {
    f.kind = HouseholdFacts::kPut;
    f.object = *o;
    const size_t at = std::string("You put the ").size() + o->size() + 11;
    f.receptacle = StripSuffix(obs.substr(at), ".");
    return f;
  }
  for (const char *verb : {"clean", "heat", "cool"}) {
    const std::string prefix = std::string("You ") + verb + " the ";
    if (auto o = Between(obs, prefix, " using the ")) {
      f.kind = HouseholdFacts::kTransform;
      f.verb = verb;
      f.object = *o;
      f.receptacle = StripSuffix(obs.substr(prefix.size() + o->size() + 11), ".");
      return f;
    }
  }
  if (auto o = Between(obs, "You examine the ", " under the desklamp")) {
    f.kind = HouseholdFacts::kExamined;
    f.object = *o;
    return f;
  }
  return f;
}

std::string FamilyVerb(Family family) {
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

std::string ToolFor(Family family) {
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

bool HoldingTarget(const TrackerState &s) {
  return s.holding && !s.target_object.empty() && *s.holding == s.target_object;
}

Subgoal DeriveHouseholdSubgoal(const TrackerState &s) {
  if (HoldingTarget(s)) {
    const bool ready = !s.needs_transformation || s.transformation_done;
    return ready && s.location == s.destination ? Subgoal::kPlaceObject : Subgoal::kReachDest;
  }
  if (!s.target_at.empty()) return Subgoal::kTakeObject;
  return Subgoal::kFindObject;
}

void NoteVisible(TrackerState *s, const std::string &where, const std::vector<std::string> &items) {
  bool target_here = false;
  for (const auto &item : items) {
    if (ClassOf(item) != s->target_class) continue;
    if (s->target_object.empty()) s->target_object = item;
    if (item == s->target_object) target_here = true;
  }
  if (target_here && !HoldingTarget(*s)) {
    s->target_at = where;
  } else if (s->target_at == where) {
    s->target_at.clear();  // trust the latest observation
  }
}

TrackerState UpdateHousehold(const TrackerState &state, const std::string &obs) {
  TrackerState s = state;
  const HouseholdFacts f = ParseHouseholdObservation(obs);
  switch (f.kind) {
    case HouseholdFacts::kArrive:
      s.location = f.receptacle;
      AddUnique(&s.checked_locations, f.receptacle);
      if (f.contents_visible) NoteVisible(&s, f.receptacle, f.visible);
      break;
    case HouseholdFacts::kOpen:
      AddUnique(&s.searched_containers, f.receptacle);
      if (f.contents_visible) NoteVisible(&s, f.receptacle, f.visible);
      break;
    case HouseholdFacts::kTake:
      s.holding = f.object;
      if (ClassOf(f.object) == s.target_class && s.target_object.empty()) {
        s.target_object = f.object;
      }
      if (f.object == s.target_object) s.target_at.clear();
      break;
    case HouseholdFacts::kPut:
      s.holding.reset();
      if (f.object == s.target_object) {
        const bool ready = !s.needs_transformation || s.transformation_done;
        if (ready && f.receptacle == s.destination && s.family != Family::kHouseholdExamine) {
          s.current_subgoal = Subgoal::kDone;
          return s;
        }
        s.target_at = f.receptacle;
      }
      break;
    case HouseholdFacts::kTransform:
      if (f.object == s.target_object && f.verb == FamilyVerb(s.family)) {
        s.transformation_done = true;
      }
      break;
    case HouseholdFacts::kExamined:
      if (s.family == Family::kHouseholdExamine && f.object == s.target_object &&
          s.location == s.destination) {
        s.current_subgoal = Subgoal::kDone;
        return s;
      }
      break;
    default:
      break;
  }
  s.current_subgoal = DeriveHouseholdSubgoal(s);
  return s;
}

// ---------------------------------------------------------------------------
// Shopping observations.

struct ShopFacts {
  enum Kind {
    kOther,
    kNothing,
    kSearchPage,
    kResults,
    kDetail,
    kSelected,
    kPurchased
  } kind = kOther;
  std::string query;
  std::vector<std::string> products;
  std::string product;
  std::string title;
  double price = 0.0;
  std::vector<std::string> options;
  std::string dim;
  std::string value;
};

ShopFacts ParseShopObservation(const std::string &obs) {
  ShopFacts f;
  if (obs == kNothing) {
    f.kind = ShopFacts::kNothing;
  } else if (StartsWith(obs, "You are on the search page.")) {
    f.kind = ShopFacts::kSearchPage;
  } else if (auto q = Between(obs, "Search results for ", ":")) {
    f.kind = ShopFacts::kResults;
    f.query = *q;
    size_t pos = 0;
    while ((pos = obs.find('[', pos)) != std::string::npos) {
      const size_t end = obs.find(']', pos);
      if (end == std::string::npos) break;
      f.products.push_back(obs.substr(pos + 1, end - pos - 1));
      pos = end;
    }
  } else if (auto id = Between(obs, "Product [", "] ")) {
    f.kind = ShopFacts::kDetail;
    f.product = *id;
    const size_t title_at = std::string("Product [").size() + id->size() + 2;
    const size_t price_at = obs.find(". Price: $", title_at);
    if (price_at != std::string::npos) {
      f.title = obs.substr(title_at, price_at - title_at);
      f.price = std::atof(obs.c_str() + price_at + 10);
    }
    const size_t opts = obs.find("Options: ");
    if (opts != std::string::npos) {
      const std::string body = StripSuffix(obs.substr(opts + 9), ".");
      if (body != "none") {
        for (const auto &dim : Split(body, "; ")) {
          const size_t colon = dim.find(": ");
          if (colon == std::string::npos) continue;
          for (const auto &v : Split(dim.substr(colon + 2), " | ")) f.options.push_back(v);
        }
      }
    }
    f.products.push_back(*id);
  } else if (auto sel = Between(obs, "You selected ", ".")) {
    const size_t colon = sel->find(": ");
    if (colon != std::string::npos) {
      f.kind = ShopFacts::kSelected;
      f.dim = sel->substr(0, colon);
      f.value = sel->substr(colon + 2);
    }
  } else if (StartsWith(obs, "Thank you for shopping with us.")) {
    f.kind = ShopFacts::kPurchased;
  }
  return f;
}

void RecomputeRemaining(TrackerState *s) {
  s->remaining_options.clear();
  for (const auto &req : s->required_options) {
    if (!Contains(s->selected_options, req)) s->remaining_options.push_back(req.second);
  }
}

Subgoal DeriveShopSubgoal(const TrackerState &s) {
  if (s.page == "done") return Subgoal::kDone;
  if (s.page == "results") return Subgoal::kSelectItem;
  if (s.page == "detail") {
    return s.remaining_options.empty() ? Subgoal::kPurchase : Subgoal::kSelectOptions;
  }
  return Subgoal::kSearch;
}

TrackerState UpdateShop(const TrackerState &state, const std::string &obs) {
  TrackerState s = state;
  const ShopFacts f = ParseShopObservation(obs);
  switch (f.kind) {
    case ShopFacts::kSearchPage:
      s.page = "search";
      s.inspected_product.reset();
      s.selected_options.clear();
      s.mismatches.clear();
      break;
    case ShopFacts::kResults:
      s.page = "results";
      s.query = f.query;
      s.inspected_product.reset();
      s.selected_options.clear();
      s.mismatches.clear();
      break;
    case ShopFacts::kDetail: {
      s.page = "detail";
      s.inspected_product = f.product;
      s.selected_options.clear();
      s.mismatches.clear();
      const auto words = Split(f.title, " ");
      for (const auto &a : s.attributes) {
        if (!Contains(words, a)) s.mismatches.push_back(a);
      }
      if (!Contains(words, s.category)) s.mismatches.push_back(s.category);
      for (const auto &[dim, value] : s.required_options) {
        if (!Contains(f.options, value)) s.mismatches.push_back(value);
      }
      if (f.price > s.price_ceiling) s.mismatches.push_back("price");
      break;
    }
    case ShopFacts::kSelected: {
      bool replaced = false;
      for (auto &sel : s.selected_options) {
        if (sel.first == f.dim) {
          sel.second = f.value;
          replaced = true;
        }
      }
      if (!replaced) s.selected_options.push_back({f.dim, f.value});
      break;
    }
    case ShopFacts::kPurchased:
      s.page = "done";
      break;
    default:
      break;
  }
  RecomputeRemaining(&s);
  s.current_subgoal = DeriveShopSubgoal(s);
  return s;
}

// Instruction grammar for shopping:
//   i am looking for a|an <attrs> <category>[ with d: v, d: v,] and price
//   lower than <p> dollars
void InitShop(const std::string &instruction, TrackerState *s) {
  const std::string lead = "i am looking for ";
  if (!StartsWith(instruction, lead)) throw DataError("instruction missing slot: product phrase");
  std::string rest = instruction.substr(lead.size());
  const std::string price_mark = " and price lower than ";
  const size_t price_at = rest.find(price_mark);
  if (price_at == std::string::npos) throw DataError("instruction missing slot: price ceiling");
  const std::string price = rest.substr(price_at + price_mark.size());
  if (!EndsWith(price, " dollars")) throw DataError("instruction missing slot: price ceiling");
  char *end = nullptr;
  const std::string number = StripSuffix(price, " dollars");
  s->price_ceiling = std::strtod(number.c_str(), &end);
  if (number.empty() || *end != '\0') throw DataError("instruction missing slot: price ceiling");
  rest = rest.substr(0, price_at);

  std::string phrase = rest;
  const size_t with_at = rest.find(" with ");
  if (with_at != std::string::npos) {
    phrase = rest.substr(0, with_at);
    std::string opts = StripSuffix(rest.substr(with_at + 6), ",");
    for (const auto &part : Split(opts, ", ")) {
      const size_t colon = part.find(": ");
      if (colon == std::string::npos) throw DataError("instruction missing slot: option value");
      s->required_options.push_back({part.substr(0, colon), part.substr(colon + 2)});
    }
  }
  phrase = StripArticle(phrase);
  std::vector<std::string> words = Split(phrase, " ");
  if (phrase.empty() || words.empty()) throw DataError("instruction missing slot: category");
  s->category = words.back();
  words.pop_back();
  s->attributes = words;
  s->page = "search";
  s->current_subgoal = Subgoal::kSearch;
  RecomputeRemaining(s);
}

void InitHousehold(Family family, const std::string &instruction, TrackerState *s) {
  std::string rest;
  std::string sep;
  switch (family) {
    case Family::kHouseholdPick:
      if (!StartsWith(instruction, "put ")) throw DataError("instruction missing slot: verb");
      rest = instruction.substr(4);
      sep = " in ";
      break;
    case Family::kHouseholdClean:
    case Family::kHouseholdHeat:
    case Family::kHouseholdCool: {
      const std::string verb = FamilyVerb(family) + " ";
      if (!StartsWith(instruction, verb)) throw DataError("instruction missing slot: verb");
      rest = instruction.substr(verb.size());
      sep = " and put it in ";
      s->needs_transformation = true;
      break;
    }
    case Family::kHouseholdExamine:
      if (!StartsWith(instruction, "examine ")) throw DataError("instruction missing slot: verb");
      rest = instruction.substr(8);
      sep = " under the desklamp on ";
      break;
    default:
      break;
  }
  const size_t at = rest.find(sep);
  if (at == std::string::npos) throw DataError("instruction missing slot: destination");
  s->target_class = StripArticle(rest.substr(0, at));
  s->destination = Trim(rest.substr(at + sep.size()));
  if (s->target_class.empty()) throw DataError("instruction missing slot: target object");
  if (s->destination.empty()) throw DataError("instruction missing slot: destination");
  s->current_subgoal = Subgoal::kFindObject;
}

// Fields compared by the no-progress test: everything except counters and
// the agent's position, so revisiting a place without new evidence is a
// fixed point.
bool SameProgress(const TrackerState &a, const TrackerState &b) {
  TrackerState x = a;
  TrackerState y = b;
  x.no_progress_count = y.no_progress_count = 0;
  x.location = y.location;
  return x == y;
}

std::string JoinValues(const std::vector<std::pair<std::string, std::string>> &pairs) {
  std::vector<std::string> values;
  for (const auto &p : pairs) values.push_back(p.second);
  return Join(values, ", ");
}

}  // namespace

std::string SubgoalName(Subgoal subgoal) {
  switch (subgoal) {
    case Subgoal::kFindObject:
      return "find_object";
    case Subgoal::kTakeObject:
      return "take_object";
    case Subgoal::kReachDest:
      return "reach_dest";
    case Subgoal::kPlaceObject:
      return "place_object";
    case Subgoal::kSearch:
      return "search";
    case Subgoal::kSelectItem:
      return "select_item";
    case Subgoal::kSelectOptions:
      return "select_options";
    case Subgoal::kPurchase:
      return "purchase";
    case Subgoal::kDone:
      return "done";
  }
  return "done";
}

int SubgoalRank(Subgoal subgoal) {
  switch (subgoal) {
    case Subgoal::kFindObject:
    case Subgoal::kSearch:
      return 0;
    case Subgoal::kTakeObject:
    case Subgoal::kSelectItem:
      return 1;
    case Subgoal::kReachDest:
    case Subgoal::kSelectOptions:
      return 2;
    case Subgoal::kPlaceObject:
    case Subgoal::kPurchase:
      return 3;
    case Subgoal::kDone:
      return 4;
  }
  return 4;
}

std::string StateBlock::Text() const { return Join(lines, "\n"); }

std::string TrackerState::ToJson() const {
  nlohmann::ordered_json j;
  j["family"] = FamilyName(family);
  j["current_subgoal"] = SubgoalName(current_subgoal);
  j["no_progress_count"] = no_progress_count;
  if (IsHousehold(family)) {
    j["target_class"] = target_class;
    j["target_object"] = target_object;
    j["destination"] = destination;
    j["holding"] = holding ? nlohmann::ordered_json(*holding) : nlohmann::ordered_json(nullptr);
    j["location"] = location;
    j["target_at"] = target_at;
    j["checked_locations"] = checked_locations;
    j["searched_containers"] = searched_containers;
    j["needs_transformation"] = needs_transformation;
    j["transformation_done"] = transformation_done;
  } else {
    j["category"] = category;
    j["attributes"] = attributes;
    nlohmann::ordered_json req = nlohmann::ordered_json::array();
    for (const auto &[d, v] : required_options) req.push_back({d, v});
    j["required_options"] = req;
    j["price_ceiling"] = price_ceiling;
    j["page"] = page;
    j["query"] = query;
    j["inspected_product"] = inspected_product ? nlohmann::ordered_json(*inspected_product)
                                               : nlohmann::ordered_json(nullptr);
    nlohmann::ordered_json sel = nlohmann::ordered_json::array();
    for (const auto &[d, v] : selected_options) sel.push_back({d, v});
    j["selected_options"] = sel;
    j["remaining_options"] = remaining_options;
    j["mismatches"] = mismatches;
  }
  return j.dump();
}

namespace tracker {

TrackerState Init(Family family, const std::string &instruction) {
  TrackerState s;
  s.family = family;
  if (IsHousehold(family)) {
    InitHousehold(family, instruction, &s);
  } else {
    InitShop(instruction, &s);
  }
  return s;
}

ParseResult Parse(Family family, const std::string &instruction, const std::string &observation,
                  const std::optional<std::string> &prev_action) {
  (void)prev_action;
  (void)instruction;
  ParseResult r;
  if (observation == kNothing) {
    r.outcomes.no_effect = true;
    return r;
  }
  if (IsHousehold(family)) {
    const HouseholdFacts f = ParseHouseholdObservation(observation);
    switch (f.kind) {
      case HouseholdFacts::kOther:
        return r;
      case HouseholdFacts::kRoom:
        r.locations = f.room;
        break;
      case HouseholdFacts::kTake:
        r.outcomes.acquired = true;
        [[fallthrough]];
      default:
        if (!f.receptacle.empty()) r.locations.push_back(f.receptacle);
        if (!f.object.empty()) r.entities.push_back(f.object);
        for (const auto &v : f.visible) AddUnique(&r.entities, v);
        break;
    }
  } else {
    const ShopFacts f = ParseShopObservation(observation);
    switch (f.kind) {
      case ShopFacts::kOther:
        return r;
      case ShopFacts::kResults:
      case ShopFacts::kDetail:
        r.entities = f.products;
        r.options = f.options;
        break;
      case ShopFacts::kSelected:
        r.options = {f.value};
        break;
      case ShopFacts::kPurchased:
        r.outcomes.purchase_confirmed = true;
        break;
      default:
        break;
    }
  }
  r.outcomes.succeeded = true;
  return r;
}

TrackerState Update(const TrackerState &state, const std::optional<std::string> &prev_action,
                    const std::string &observation) {
  (void)prev_action;
  if (observation == kNothing || state.current_subgoal == Subgoal::kDone) {
    TrackerState s = state;
    ++s.no_progress_count;
    return s;
  }
  TrackerState next = IsHousehold(state.family) ? UpdateHousehold(state, observation)
                                                : UpdateShop(state, observation);
  if (SameProgress(state, next)) ++next.no_progress_count;
  return next;
}

StateBlock Render(const TrackerState &s) {
  StateBlock b;
  auto add = [&b](const std::string &key, const std::string &value) {
    b.lines.push_back(key + ": " + value);
  };
  add("subgoal", SubgoalName(s.current_subgoal));
  if (IsHousehold(s.family)) {
    add("target", s.target_object.empty() ? s.target_class : s.target_object);
    add("destination", s.destination);
    if (!s.location.empty()) add("location", s.location);
    if (s.holding) add("holding", *s.holding);
    if (s.needs_transformation) {
      add("transformed", s.transformation_done ? "yes" : "no");
      if (!s.transformation_done) add("tool", ToolFor(s.family));
    }
    const bool searching =
        s.current_subgoal == Subgoal::kFindObject || s.current_subgoal == Subgoal::kTakeObject;
    if (s.current_subgoal == Subgoal::kTakeObject) add("seen_at", s.target_at);
    if (searching && !s.checked_locations.empty()) {
      add("checked", Join(s.checked_locations, ", "));
    }
    if (searching && !s.searched_containers.empty()) {
      add("searched", Join(s.searched_containers, ", "));
    }
  } else {
    if (!s.query.empty() && s.current_subgoal != Subgoal::kSearch) add("query", s.query);
    if (s.inspected_product) add("product", *s.inspected_product);
    if (!s.selected_options.empty()) add("selected", JoinValues(s.selected_options));
    if (!s.remaining_options.empty() && s.current_subgoal != Subgoal::kDone) {
      add("remaining", Join(s.remaining_options, ", "));
    }
    if (!s.mismatches.empty()) add("mismatch", Join(s.mismatches, ", "));
  }
  // Lists are the only unbounded fields; trim the last line's list to fit.
  size_t total = 0;
  for (const auto &line : b.lines) total += CountTokens(line);
  while (total > kStateBlockBudget && !b.lines.empty()) {
    const size_t last = CountTokens(b.lines.back());
    const size_t over = total - kStateBlockBudget;
    if (last > over + 2) {
      b.lines.back() = TruncateTokens(b.lines.back(), last - over);
      total = total - last + CountTokens(b.lines.back());
    } else {
      total -= last;
      b.lines.pop_back();
    }
  }
  b.token_len = total;
  return b;
}

}  // namespace tracker
}  // namespace skillforge
