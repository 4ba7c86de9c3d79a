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

#include "skillforge/harness.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "skillforge/text.h"

namespace skillforge {
namespace {

using Json = nlohmann::json;
using OJson = nlohmann::ordered_json;

// Reads the keys of `j` into fields, rejecting unknown keys.
class Reader {
 public:
  Reader(const Json &j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw DataError(where_ + ": expected an object");
  }
  ~Reader() = default;

  template <typename T>
  void Get(const char *key, T *out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      *out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception &) {
      throw DataError(where_ + "." + key + " has the wrong type");
    }
  }

  const Json *Sub(const char *key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void Finish() const {
    for (const auto &[key, value] : j_.items()) {
      if (seen_.count(key) == 0) throw DataError(where_ + ": unknown key \"" + key + "\"");
    }
  }

 private:
  const Json &j_;
  std::string where_;
  std::set<std::string> seen_;
};

Json ReadJsonFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return Json::parse(buf.str());
  } catch (const nlohmann::json::exception &e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
}

void MergeLayer(Json *into, const Json &layer, Family family) {
  if (!layer.is_object()) throw DataError("config layer must be an object");
  for (const auto &[key, value] : layer.items()) {
    if (key != "defaults" && key != "families") {
      throw DataError("config: unknown top-level key \"" + key + "\"");
    }
  }
  if (layer.contains("defaults")) into->merge_patch(layer.at("defaults"));
  if (layer.contains("families")) {
    const Json &fams = layer.at("families");
    if (!fams.is_object()) throw DataError("config: families must be an object");
    for (const auto &[name, value] : fams.items()) ParseFamily(name);
    if (fams.contains(FamilyName(family))) into->merge_patch(fams.at(FamilyName(family)));
  }
}

double Mean(const std::vector<double> &xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace

int ExitCodeFor(const std::exception &e) {
  if (dynamic_cast<const UsageError *>(&e)) return kExitUsage;
  if (dynamic_cast<const DataError *>(&e)) return kExitData;
  return kExitInternal;
}

OJson RunConfig::ToJson() const {
  OJson j;
  j["family"] = family;
  j["seed"] = seed;
  j["budget"] = budget;
  j["expert_count"] = expert_count;
  j["sweep_counts"] = sweep_counts;
  j["policy"] = {{"dim", policy.dim},
                 {"rank", policy.rank},
                 {"alpha", policy.alpha},
                 {"hash_seed", policy.hash_seed},
                 {"base_seed", policy.base_seed},
                 {"a_std", policy.a_std}};
  j["sft"] = {{"learning_rate", sft.learning_rate},
              {"epochs", sft.epochs},
              {"batch_size", sft.batch_size},
              {"drop_state_block", sft.drop_state_block}};
  j["rl"] = {{"group_size", rl.group_size},
             {"gamma", rl.gamma},
             {"beta", rl.beta},
             {"epsilon", rl.epsilon},
             {"rollout_temperature", rl.rollout_temperature},
             {"rollout_top_p", rl.rollout_top_p},
             {"learning_rate", rl.learning_rate},
             {"episodes", rl.episodes},
             {"exact_kl", rl.exact_kl},
             {"drop_state_block", rl.drop_state_block},
             {"reward",
              {{"progress", rl.toggles.progress},
               {"error", rl.toggles.error},
               {"step_cost", rl.toggles.step_cost}}}};
  j["eval"] = {{"episodes", eval.episodes},
               {"temperature", eval.temperature},
               {"top_p", eval.top_p},
               {"seeds", eval.seeds},
               {"drop_state_block", eval.drop_state_block}};
  return j;
}

RunConfig RunConfig::FromJson(const Json &j) {
  RunConfig c;
  Reader top(j, "config");
  top.Get("family", &c.family);
  top.Get("seed", &c.seed);
  top.Get("budget", &c.budget);
  top.Get("expert_count", &c.expert_count);
  top.Get("sweep_counts", &c.sweep_counts);
  if (const Json *p = top.Sub("policy")) {
    Reader r(*p, "config.policy");
    r.Get("dim", &c.policy.dim);
    r.Get("rank", &c.policy.rank);
    r.Get("alpha", &c.policy.alpha);
    r.Get("hash_seed", &c.policy.hash_seed);
    r.Get("base_seed", &c.policy.base_seed);
    r.Get("a_std", &c.policy.a_std);
    r.Finish();
  }
  if (const Json *p = top.Sub("sft")) {
    Reader r(*p, "config.sft");
    r.Get("learning_rate", &c.sft.learning_rate);
    r.Get("epochs", &c.sft.epochs);
    r.Get("batch_size", &c.sft.batch_size);
    r.Get("drop_state_block", &c.sft.drop_state_block);
    r.Finish();
  }
  if (const Json *p = top.Sub("rl")) {
    Reader r(*p, "config.rl");
    r.Get("group_size", &c.rl.group_size);
    r.Get("gamma", &c.rl.gamma);
    r.Get("beta", &c.rl.beta);
    r.Get("epsilon", &c.rl.epsilon);
    r.Get("rollout_temperature", &c.rl.rollout_temperature);
    r.Get("rollout_top_p", &c.rl.rollout_top_p);
    r.Get("learning_rate", &c.rl.learning_rate);
    r.Get("episodes", &c.rl.episodes);
    r.Get("exact_kl", &c.rl.exact_kl);
    r.Get("drop_state_block", &c.rl.drop_state_block);
    if (const Json *w = r.Sub("reward")) {
      Reader rw(*w, "config.rl.reward");
      rw.Get("progress", &c.rl.toggles.progress);
      rw.Get("error", &c.rl.toggles.error);
      rw.Get("step_cost", &c.rl.toggles.step_cost);
      rw.Finish();
    }
    r.Finish();
  }
  if (const Json *p = top.Sub("eval")) {
    Reader r(*p, "config.eval");
    r.Get("episodes", &c.eval.episodes);
    r.Get("temperature", &c.eval.temperature);
    r.Get("top_p", &c.eval.top_p);
    r.Get("seeds", &c.eval.seeds);
    r.Get("drop_state_block", &c.eval.drop_state_block);
    r.Finish();
  }
  top.Finish();
  if (c.policy.dim <= 0 || c.policy.rank <= 0 || c.policy.rank > c.policy.dim) {
    throw DataError("config.policy: invalid dim or rank");
  }
  if (!(c.policy.a_std >= 0)) throw DataError("config.policy.a_std must be non-negative");
  c.sft.seed = c.seed;
  c.rl.seed = c.seed;
  c.rl.budget = c.budget;
  c.eval.budget = c.budget;
  return c;
}

const Json &BuiltinConfig() {
  static const Json config = [] {
    Json defaults = Json::parse(RunConfig{}.ToJson().dump());
    defaults.erase("family");
    Json j;
    j["defaults"] = defaults;
    // Shopping converges much faster than household search; a short SFT
    // schedule leaves the policy in the regime where RL refinement shows.
    j["families"] = {{"shop.purchase", {{"sft", {{"learning_rate", 3.0}, {"epochs", 4}}}}}};
    return j;
  }();
  return config;
}

RunConfig ResolveConfig(Family family, const std::optional<std::string> &config_path,
                        const Json &cli_overrides) {
  Json j = Json::object();
  MergeLayer(&j, BuiltinConfig(), family);
  if (config_path) {
    const Json file = ReadJsonFile(*config_path);
    if (file.is_object() && file.contains("config") && file.contains("command")) {
      j = file.at("config");  // a run manifest
    } else {
      MergeLayer(&j, file, family);
    }
  }
  if (!cli_overrides.is_null()) j.merge_patch(cli_overrides);
  j["family"] = FamilyName(family);
  return RunConfig::FromJson(j);
}

OJson RunManifest::ToJson() const {
  OJson j;
  j["command"] = command;
  j["argv"] = argv;
  j["version"] = version;
  j["config"] = config;
  j["seeds"] = seeds;
  j["inputs"] = inputs;
  j["artifacts"] = artifacts;
  return j;
}

void RunManifest::Write(const std::string &path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out << ToJson().dump(2) << '\n';
  if (!out) throw DataError("write failed for " + path);
}

PolicyModel MakePolicyModel(const PolicySettings &settings) {
  FeatureMap f;
  f.d_in = settings.dim;
  f.d_out = settings.dim;
  f.hash_seed = settings.hash_seed;
  return PolicyModel(f, settings.base_seed);
}

Adapter InitAdapter(const RunConfig &config, const std::string &family, uint64_t seed) {
  return Adapter::Init(family, config.policy.dim, config.policy.dim, config.policy.rank,
                       config.policy.alpha, MixSeed({0xada9'7e55ULL, seed}), config.policy.a_std);
}

std::vector<Trajectory> GenerateExperts(Family family, size_t count, uint64_t seed) {
  std::vector<Trajectory> out;
  out.reserve(count);
  for (size_t i = 0; i < count; ++i) out.push_back(RunExpert(family, ExpertTaskSeed(seed, i)));
  return out;
}

std::string VariantName(Variant v) {
  switch (v) {
    case Variant::kFull:
      return "full";
    case Variant::kNoStateBlock:
      return "no_state_block";
    case Variant::kTerminalOnly:
      return "terminal_only";
    case Variant::kNoProgress:
      return "no_progress";
    case Variant::kNoError:
      return "no_error";
    case Variant::kNoStepCost:
      return "no_step_cost";
  }
  return "full";
}

Variant ParseVariant(const std::string &name) {
  for (Variant v : {Variant::kFull, Variant::kNoStateBlock, Variant::kTerminalOnly,
                    Variant::kNoProgress, Variant::kNoError, Variant::kNoStepCost}) {
    if (VariantName(v) == name) return v;
  }
  throw UsageError("unknown variant: " + name);
}

const std::vector<Variant> &AblationVariants() {
  static const std::vector<Variant> variants = {Variant::kNoStateBlock, Variant::kTerminalOnly,
                                                Variant::kNoProgress, Variant::kNoError,
                                                Variant::kNoStepCost};
  return variants;
}

RunConfig ApplyVariant(RunConfig config, Variant v) {
  switch (v) {
    case Variant::kFull:
      break;
    case Variant::kNoStateBlock:
      config.sft.drop_state_block = true;
      config.rl.drop_state_block = true;
      config.eval.drop_state_block = true;
      break;
    case Variant::kTerminalOnly:
      config.rl.toggles = {false, false, false};
      break;
    case Variant::kNoProgress:
      config.rl.toggles.progress = false;
      break;
    case Variant::kNoError:
      config.rl.toggles.error = false;
      break;
    case Variant::kNoStepCost:
      config.rl.toggles.step_cost = false;
      break;
  }
  return config;
}

OJson PipelineResult::ToJson() const {
  OJson j;
  j["variant"] = variant;
  OJson seeds = OJson::array();
  for (const auto &s : per_seed) {
    OJson row;
    row["seed"] = s.seed;
    row["sft_success"] = s.sft_success;
    if (std::isnan(s.rl_success)) {
      row["rl_success"] = nullptr;
    } else {
      row["rl_success"] = s.rl_success;
    }
    seeds.push_back(std::move(row));
  }
  j["per_seed"] = seeds;
  j["sft_mean"] = sft_mean;
  if (std::isnan(rl_mean)) {
    j["rl_mean"] = nullptr;
  } else {
    j["rl_mean"] = rl_mean;
  }
  return j;
}

PipelineResult RunPipeline(const RunConfig &config, Family family,
                           const std::vector<uint64_t> &train_seeds, bool with_rl,
                           std::ostream *log) {
  if (train_seeds.empty()) throw UsageError("at least one training seed is required");
  const PolicyModel model = MakePolicyModel(config.policy);
  const RuleSet rules = BuiltinRules(family);
  PipelineResult result;
  std::vector<double> sft_all, rl_all;
  for (uint64_t seed : train_seeds) {
    const auto trajectories = GenerateExperts(family, config.expert_count, seed);
    const SftCorpus corpus = BuildSftCorpus(trajectories, family, config.budget);
    SftConfig sft = config.sft;
    sft.seed = seed;
    const Adapter sft_adapter =
        SftTrain(model, corpus.samples, InitAdapter(config, FamilyName(family), seed), sft, log);
    SeedOutcome out;
    out.seed = seed;
    out.sft_success = Evaluate(model, sft_adapter, family, config.eval).success_mean;
    out.rl_success = std::numeric_limits<double>::quiet_NaN();
    if (with_rl) {
      RlConfig rl = config.rl;
      rl.seed = seed;
      const Adapter rl_adapter = RlTrain(model, family, rules, sft_adapter, rl, log);
      out.rl_success = Evaluate(model, rl_adapter, family, config.eval).success_mean;
      rl_all.push_back(out.rl_success);
    }
    sft_all.push_back(out.sft_success);
    result.per_seed.push_back(out);
  }
  result.sft_mean = Mean(sft_all);
  result.rl_mean = with_rl ? Mean(rl_all) : std::numeric_limits<double>::quiet_NaN();
  return result;
}

std::vector<SweepRow> RunSweep(const RunConfig &config, Family family,
                               const std::vector<size_t> &counts,
                               const std::vector<uint64_t> &train_seeds) {
  if (counts.empty()) throw UsageError("sweep needs at least one count");
  if (train_seeds.empty()) throw UsageError("at least one training seed is required");
  const size_t max_count = *std::max_element(counts.begin(), counts.end());
  const PolicyModel model = MakePolicyModel(config.policy);
  std::vector<SweepRow> rows(counts.size());
  for (size_t i = 0; i < counts.size(); ++i) rows[i].count = counts[i];
  for (uint64_t seed : train_seeds) {
    const auto pool = GenerateExperts(family, max_count, seed);
    for (size_t i = 0; i < counts.size(); ++i) {
      const std::vector<Trajectory> subset(pool.begin(),
                                           pool.begin() + static_cast<std::ptrdiff_t>(counts[i]));
      const SftCorpus corpus = BuildSftCorpus(subset, family, config.budget);
      SftConfig sft = config.sft;
      sft.seed = seed;
      double success = 0.0;
      if (!corpus.samples.empty()) {
        const Adapter a =
            SftTrain(model, corpus.samples, InitAdapter(config, FamilyName(family), seed), sft);
        success = Evaluate(model, a, family, config.eval).success_mean;
      }
      rows[i].per_seed.push_back(success);
    }
  }
  for (auto &row : rows) row.success_mean = Mean(row.per_seed);
  return rows;
}

std::vector<uint64_t> ParseSeedList(const std::string &text) {
  std::vector<uint64_t> out;
  for (const auto &part : Split(text, ",")) {
    const std::string t = Trim(part);
    if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos) {
      throw UsageError("invalid seed list: " + text);
    }
    try {
      out.push_back(std::stoull(t));
    } catch (const std::exception &) {
      throw UsageError("invalid seed list: " + text);
    }
  }
  if (out.empty()) throw UsageError("empty seed list");
  return out;
}

}  // namespace skillforge
