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

// Pipeline orchestration shared by the command-line tool and the acceptance
// checks: layered configuration, run manifests, and the end-to-end
// train/evaluate, ablation and data-efficiency drivers.

#ifndef SKILLFORGE_HARNESS_H_
#define SKILLFORGE_HARNESS_H_

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "skillforge/rl.h"

namespace skillforge {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitInternal = 4;

// Maps UsageError to 2, DataError to 3 and anything else to 4.
int ExitCodeFor(const std::exception &e);

struct PolicySettings {
  int dim = kDefaultDim;
  int rank = kDefaultRank;
  double alpha = kDefaultAlpha;
  uint64_t hash_seed = kDefaultHashSeed;
  uint64_t base_seed = kDefaultBaseSeed;
  double a_std = DefaultAStd(kDefaultDim);
};

struct RunConfig {
  std::string family;
  uint64_t seed = 0;
  size_t budget = kDefaultBudget;
  size_t expert_count = 200;
  std::vector<size_t> sweep_counts = {5, 25, 100, 400};
  PolicySettings policy;
  SftConfig sft;
  RlConfig rl;
  EvalConfig eval;

  nlohmann::ordered_json ToJson() const;
  // Throws DataError on unknown keys or wrong types.
  static RunConfig FromJson(const nlohmann::json &j);
};

// The built-in layered config:
//   {"defaults": {...}, "families": {"<family>": {...}}}
const nlohmann::json &BuiltinConfig();

// Resolves defaults <- family overrides <- file <- cli. The optional file
// has the same layered shape, or is a run manifest, whose resolved config
// is used as is. Objects merge key by key.
RunConfig ResolveConfig(Family family, const std::optional<std::string> &config_path,
                        const nlohmann::json &cli_overrides);

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::ordered_json config;
  std::vector<uint64_t> seeds;
  std::vector<std::string> inputs;
  std::vector<std::string> artifacts;
  std::string version = kVersion;

  nlohmann::ordered_json ToJson() const;
  void Write(const std::string &path) const;
};

PolicyModel MakePolicyModel(const PolicySettings &settings);
Adapter InitAdapter(const RunConfig &config, const std::string &family, uint64_t seed);

// Expert trajectories for task seeds ExpertTaskSeed(seed, 0..count-1).
// Throws InvariantError if any expert rollout fails.
std::vector<Trajectory> GenerateExperts(Family family, size_t count, uint64_t seed);

enum class Variant { kFull, kNoStateBlock, kTerminalOnly, kNoProgress, kNoError, kNoStepCost };

std::string VariantName(Variant v);
Variant ParseVariant(const std::string &name);  // throws UsageError
// The five ablation variants, in CLI order.
const std::vector<Variant> &AblationVariants();

// Applies a variant's switches to a copy of `config`.
RunConfig ApplyVariant(RunConfig config, Variant v);

struct SeedOutcome {
  uint64_t seed = 0;
  double sft_success = 0.0;
  double rl_success = 0.0;  // NaN when RL was skipped
};

struct PipelineResult {
  std::string variant;
  std::vector<SeedOutcome> per_seed;
  double sft_mean = 0.0;
  double rl_mean = 0.0;

  nlohmann::ordered_json ToJson() const;
};

// For each training seed: expert data, SFT, optional RL, and evaluation on
// the held-out seeds. Metrics JSONL lines go to `log` when given.
PipelineResult RunPipeline(const RunConfig &config, Family family,
                           const std::vector<uint64_t> &train_seeds, bool with_rl,
                           std::ostream *log = nullptr);

struct SweepRow {
  size_t count = 0;
  double success_mean = 0.0;
  std::vector<double> per_seed;
};

// SFT-only adapters on nested prefixes of one expert set per seed.
std::vector<SweepRow> RunSweep(const RunConfig &config, Family family,
                               const std::vector<size_t> &counts,
                               const std::vector<uint64_t> &train_seeds);

// Parses "0,1,2" style lists. Throws UsageError.
std::vector<uint64_t> ParseSeedList(const std::string &text);

}  // namespace skillforge

#endif  // SKILLFORGE_HARNESS_H_
