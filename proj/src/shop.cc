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
#include <cmath>
#include <cstdio>
#include <set>

#include "envsim_internal.h"
#include "skillforge/text.h"

namespace skillforge {
namespace {

struct CategorySpec {
  const char *name;
  std::vector<std::string> attributes;
  std::vector<std::string> option_dims;
  double base_price;
};

const std::vector<CategorySpec> &Categories() {
  static const std::vector<CategorySpec> kCategories = {
      {"shirt", {"cotton", "linen", "slim", "casual", "organic"}, {"color", "size"}, 18},
      {"jacket",
       {"waterproof", "insulated", "lightweight", "hooded", "windproof"},
       {"color", "size", "style"},
       45},
      {"sneakers",
       {"running", "leather", "breathable", "lightweight", "waterproof"},
       {"color", "size"},
       40},
      {"backpack", {"waterproof", "laptop", "hiking", "lightweight", "leather"}, {"color"}, 30},
      {"headphones", {"wireless", "bluetooth", "foldable", "waterproof", "studio"}, {"color"}, 35},
      {"mug", {"ceramic", "insulated", "travel", "glass", "large"}, {"color"}, 8},
      {"lamp", {"led", "dimmable", "desk", "wooden", "modern"}, {"color", "style"}, 22},
      {"watch", {"digital", "analog", "waterproof", "leather", "smart"}, {"color", "style"}, 50},
      {"blanket", {"fleece", "wool", "weighted", "cotton", "knitted"}, {"color", "size"}, 25},
      {"bottle", {"stainless", "insulated", "glass", "leakproof", "sport"}, {"color", "size"}, 10},
  };
  return kCategories;
}

const std::vector<std::string> &DimValues(const std::string &dim) {
  static const std::vector<std::string> kColor = {"black", "white", "red", "blue", "green", "gray"};
  static const std::vector<std::string> kSize = {"small", "medium", "large", "xlarge"};
  static const std::vector<std::string> kStyle = {"classic", "modern", "vintage", "sporty"};
  if (dim == "color") return kColor;
  if (dim == "size") return kSize;
  return kStyle;
}

const std::vector<std::string> kBrands = {"acme",  "zenith", "nova",   "orbit",
                                          "pixel", "summit", "vertex", "lumen"};

std::vector<Product> BuildCatalog() {
  Rng rng(0x5348'4f50'4341'5447ULL);
  std::vector<Product> catalog;
  int next_id = 1;
  for (const CategorySpec &cat : Categories()) {
    // Six products per category, each with a distinct attribute pair.
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < static_cast<int>(cat.attributes.size()); ++i) {
      for (int j = i + 1; j < static_cast<int>(cat.attributes.size()); ++j) pairs.push_back({i, j});
    }
    rng.Shuffle(pairs);
    for (int k = 0; k < 6; ++k) {
      Product p;
      char id[16];
      std::snprintf(id, sizeof(id), "b%02d", next_id++);
      p.id = id;
      p.category = cat.name;
      p.attributes = {cat.attributes[pairs[k].first], cat.attributes[pairs[k].second]};
      p.title = rng.Pick(kBrands) + " " + p.attributes[0] + " " + p.attributes[1] + " " + cat.name;
      p.price = std::round((cat.base_price * (0.6 + 0.9 * rng.Uniform())) * 100.0) / 100.0;
      // Some products drop their last option dimension, so goals range over
      // zero to three required options.
      int dims = static_cast<int>(cat.option_dims.size());
      if (rng.Uniform() < (dims == 1 ? 0.1 : 0.25)) dims -= 1;
      for (int d = 0; d < dims; ++d) {
        OptionDim od;
        od.name = cat.option_dims[d];
        std::vector<std::string> values = DimValues(od.name);
        rng.Shuffle(values);
        const int count = rng.UniformInt(2, std::min<int>(4, values.size()));
        values.resize(count);
        // Keep the canonical value order for display.
        std::vector<std::string> ordered;
        for (const auto &v : DimValues(od.name)) {
          if (std::find(values.begin(), values.end(), v) != values.end()) ordered.push_back(v);
        }
        od.values = ordered;
        p.options.push_back(od);
      }
      catalog.push_back(std::move(p));
    }
  }
  return catalog;
}

std::set<std::string> ProductWords(const Product &p) {
  std::set<std::string> words;
  for (const auto &w : Split(p.title, " ")) words.insert(w);
  for (const auto &a : p.attributes) words.insert(a);
  return words;
}

const ShopHidden &Hidden(const EnvState &state) { return std::get<ShopHidden>(state.spec->hidden); }

std::string SearchPageText() {
  return "You are on the search page. Type a query with search[...].";
}

std::string ResultsText(const std::string &query, const std::vector<std::string> &ids) {
  std::string out = "Search results for " + query + ":";
  if (ids.empty()) return out + " no products found.";
  for (size_t i = 0; i < ids.size(); ++i) {
    const Product *p = FindProduct(ids[i]);
    out += (i == 0 ? " [" : "; [") + p->id + "] " + p->title + " $" + FormatPrice(p->price);
  }
  return out + ".";
}

std::string DetailText(const Product &p) {
  std::string out =
      "Product [" + p.id + "] " + p.title + ". Price: $" + FormatPrice(p.price) + ". Options:";
  if (p.options.empty()) return out + " none.";
  for (size_t i = 0; i < p.options.size(); ++i) {
    out += (i == 0 ? " " : "; ") + p.options[i].name + ": " + Join(p.options[i].values, " | ");
  }
  return out + ".";
}

constexpr size_t kMaxResults = 5;

}  // namespace

const std::vector<Product> &Catalog() {
  static const std::vector<Product> kCatalog = BuildCatalog();
  return kCatalog;
}

const Product *FindProduct(const std::string &id) {
  for (const Product &p : Catalog()) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

double PurchaseScore(const ShopGoal &goal, const Product &product,
                     const std::map<std::string, std::string> &selected) {
  const double category = product.category == goal.category ? 1.0 : 0.0;
  double attributes = 1.0;
  if (!goal.attributes.empty()) {
    int hit = 0;
    for (const auto &a : goal.attributes) {
      if (std::find(product.attributes.begin(), product.attributes.end(), a) !=
          product.attributes.end()) {
        ++hit;
      }
    }
    attributes = static_cast<double>(hit) / static_cast<double>(goal.attributes.size());
  }
  double options = 1.0;
  if (!goal.options.empty()) {
    int hit = 0;
    for (const auto &[dim, value] : goal.options) {
      auto it = selected.find(dim);
      if (it != selected.end() && it->second == value) ++hit;
    }
    options = static_cast<double>(hit) / static_cast<double>(goal.options.size());
  }
  const double price = product.price <= goal.price_ceiling ? 1.0 : 0.0;
  return (category + attributes + options + price) / 4.0;
}

std::vector<std::string> GoalQueries(const ShopGoal &goal) {
  std::vector<std::string> queries = {goal.category};
  for (const auto &a : goal.attributes) queries.push_back(a + " " + goal.category);
  if (goal.attributes.size() > 1) {
    queries.push_back(Join(goal.attributes, " ") + " " + goal.category);
  }
  return queries;
}

std::vector<const Product *> SearchCatalog(const std::string &query) {
  std::vector<const Product *> hits;
  const std::vector<std::string> words = Split(query, " ");
  for (const Product &p : Catalog()) {
    const auto pw = ProductWords(p);
    bool all = true;
    for (const auto &w : words) {
      if (!w.empty() && pw.count(w) == 0) all = false;
    }
    if (all) hits.push_back(&p);
  }
  return hits;
}

namespace shop {

EpisodeSpec Generate(uint64_t seed) {
  Rng rng(MixSeed({0x53484f50ULL, seed}));
  const auto &catalog = Catalog();
  const Product &target = catalog[static_cast<size_t>(rng.UniformInt(0, catalog.size() - 1))];
  ShopHidden hidden;
  hidden.target_id = target.id;
  hidden.goal.category = target.category;
  hidden.goal.attributes = target.attributes;
  for (const OptionDim &d : target.options) {
    hidden.goal.options.push_back({d.name, rng.Pick(d.values)});
  }
  hidden.goal.price_ceiling = std::ceil((target.price + 5.0) / 10.0) * 10.0;

  EpisodeSpec spec;
  spec.family = Family::kShopPurchase;
  spec.seed = seed;
  const std::string phrase = Join(hidden.goal.attributes, " ") + " " + hidden.goal.category;
  const char c = phrase[0];
  const bool vowel = c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
  std::string text = std::string("i am looking for ") + (vowel ? "an " : "a ") + phrase;
  if (!hidden.goal.options.empty()) {
    std::vector<std::string> parts;
    for (const auto &[dim, value] : hidden.goal.options) parts.push_back(dim + ": " + value);
    text += " with " + Join(parts, ", ") + ",";
  }
  text += " and price lower than " + FormatPrice(hidden.goal.price_ceiling) + " dollars";
  spec.instruction = text;
  spec.hidden = std::move(hidden);
  return spec;
}

ResetResult Reset(const EpisodeSpec &spec) {
  ResetResult out;
  out.state.spec = std::make_shared<const EpisodeSpec>(spec);
  out.state.shop_page.kind = ShopPageKind::kSearch;
  out.observation = SearchPageText();
  return out;
}

ParsedAction Parse(const std::string &action) {
  ParsedAction p;
  const std::string a = Trim(action);
  if (!EndsWith(a, "]")) return p;
  for (const char *verb : {"search", "click"}) {
    const std::string prefix = std::string(verb) + "[";
    if (StartsWith(a, prefix) && a.size() > prefix.size() + 1) {
      const std::string arg = a.substr(prefix.size(), a.size() - prefix.size() - 1);
      if (Trim(arg) == arg && arg.find_first_of("[]") == std::string::npos) {
        p.verb = verb;
        p.target = arg;
      }
    }
  }
  return p;
}

StepResult Apply(const EnvState &state, const ParsedAction &action) {
  const ShopHidden &hidden = Hidden(state);
  StepResult out;
  out.state = state;
  EnvState &s = out.state;
  out.observation = kNothingHappens;
  const ShopPage &page = state.shop_page;

  if (action.verb == "search") {
    if (page.kind != ShopPageKind::kSearch) return out;
    const auto queries = GoalQueries(hidden.goal);
    if (std::find(queries.begin(), queries.end(), action.target) == queries.end()) return out;
    ShopPage next;
    next.kind = ShopPageKind::kResults;
    next.query = action.target;
    for (const Product *p : SearchCatalog(action.target)) {
      if (next.results.size() < kMaxResults) next.results.push_back(p->id);
    }
    s.shop_page = next;
    out.observation = ResultsText(next.query, next.results);
    return out;
  }
  if (action.verb != "click") return out;

  if (page.kind == ShopPageKind::kResults) {
    if (action.target == "Back to Search") {
      s.shop_page = ShopPage{ShopPageKind::kSearch, "", {}, ""};
      out.observation = SearchPageText();
      return out;
    }
    if (std::find(page.results.begin(), page.results.end(), action.target) == page.results.end()) {
      return out;
    }
    s.shop_page.kind = ShopPageKind::kDetail;
    s.shop_page.product_id = action.target;
    s.selected_options.clear();
    out.observation = DetailText(*FindProduct(action.target));
    return out;
  }
  if (page.kind == ShopPageKind::kDetail) {
    const Product &product = *FindProduct(page.product_id);
    if (action.target == "< Prev") {
      s.shop_page.kind = ShopPageKind::kResults;
      s.shop_page.product_id.clear();
      s.selected_options.clear();
      out.observation = ResultsText(page.query, page.results);
      return out;
    }
    if (action.target == "Buy Now") {
      const double score = PurchaseScore(hidden.goal, product, state.selected_options);
      s.env_score = score;
      s.success = score == 1.0;
      s.shop_page = ShopPage{};
      out.observation =
          "Thank you for shopping with us. Your purchase score is " + FormatPrice(score) + ".";
      out.done = true;
      out.env_signal = score;
      return out;
    }
    for (const OptionDim &d : product.options) {
      if (std::find(d.values.begin(), d.values.end(), action.target) != d.values.end()) {
        s.selected_options[d.name] = action.target;
        out.observation = "You selected " + d.name + ": " + action.target + ".";
        return out;
      }
    }
  }
  return out;
}

std::vector<std::string> Admissible(const EnvState &state) {
  const ShopPage &page = state.shop_page;
  std::vector<std::string> actions;
  switch (page.kind) {
    case ShopPageKind::kSearch:
      for (const auto &q : GoalQueries(Hidden(state).goal)) actions.push_back("search[" + q + "]");
      break;
    case ShopPageKind::kResults:
      for (const auto &id : page.results) actions.push_back("click[" + id + "]");
      actions.push_back("click[Back to Search]");
      break;
    case ShopPageKind::kDetail: {
      const Product &product = *FindProduct(page.product_id);
      for (const OptionDim &d : product.options) {
        for (const auto &v : d.values) actions.push_back("click[" + v + "]");
      }
      actions.push_back("click[Buy Now]");
      actions.push_back("click[< Prev]");
      break;
    }
    case ShopPageKind::kNone:
      break;
  }
  return actions;
}

std::string Expert(const EnvState &state) {
  const ShopHidden &hidden = Hidden(state);
  const ShopPage &page = state.shop_page;
  switch (page.kind) {
    case ShopPageKind::kSearch:
      return "search[" + GoalQueries(hidden.goal).back() + "]";
    case ShopPageKind::kResults:
      if (std::find(page.results.begin(), page.results.end(), hidden.target_id) !=
          page.results.end()) {
        return "click[" + hidden.target_id + "]";
      }
      return "click[Back to Search]";
    case ShopPageKind::kDetail:
      if (page.product_id != hidden.target_id) return "click[< Prev]";
      for (const auto &[dim, value] : hidden.goal.options) {
        auto it = state.selected_options.find(dim);
        if (it == state.selected_options.end() || it->second != value) {
          return "click[" + value + "]";
        }
      }
      return "click[Buy Now]";
    case ShopPageKind::kNone:
      break;
  }
  return "click[Buy Now]";
}

}  // namespace shop
}  // namespace skillforge
