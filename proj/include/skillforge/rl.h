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

// Adapter training: supervised fitting on replayed expert steps, then
// group-normalized policy-gradient refinement against a frozen reference.
//
// The RL objective, averaged over every sampled step of every rollout, is
//
//   L = mean[ -A_t log pi(a_t) + beta (log pi(a_t) - log pi_ref(a_t)) ]
//
// where A_t is the group-normalized discounted return.

#ifndef SKILLFORGE_RL_H_
#define SKILLFORGE_RL_H_

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "skillforge/dataset.h"
#include "skillforge/envsim.h"
#include "skillforge/policy.h"
#include "skillforge/reward.h"

namespace skillforge {

inline constexpr double kDefaultEpsilon = 1e-8;

struct SftConfig {
  double learning_rate = 1.0;
  int epochs = 20;
  int batch_size = 16;
  uint64_t seed = 0;
  bool drop_state_block = false;

  void Validate() const;  // throws UsageError
};

struct RlConfig {
  int group_size = 4;
  double gamma = kDefaultGamma;
  double beta = 0.02;
  double epsilon = kDefaultEpsilon;
  double rollout_temperature = 0.8;
  double rollout_top_p = 0.95;
  double learning_rate = 0.2;
  int episodes = 400;  // rollouts in total, so episodes / group_size groups
  uint64_t seed = 0;
  bool exact_kl = false;  // penalize KL(pi || pi_ref) over the candidates
  bool drop_state_block = false;
  RewardToggles toggles;
  size_t budget = kDefaultBudget;

  void Validate() const;  // throws UsageError
};

// One scored decision: input features, candidate features, and the index of
// the target (expert or sampled) action.
struct FeatureStep {
  Eigen::VectorXd u;
  Eigen::MatrixXd V;
  size_t chosen = 0;
};

struct RlStep {
  FeatureStep step;
  double advantage = 0.0;
  double temperature = 1.0;
};

// Standardizes over the pooled steps of all rollouts with the population
// std. Throws UsageError when there are no steps.
std::vector<std::vector<double>> GroupAdvantages(
    const std::vector<std::vector<double>> &returns_per_rollout, double epsilon = kDefaultEpsilon);

// Mean negative log-likelihood at temperature 1, and its gradient.
double SftLoss(const BaseWeights &base, const Adapter &adapter,
               const std::vector<FeatureStep> &steps);
AdapterGrad SftLossGrad(const BaseWeights &base, const Adapter &adapter,
                        const std::vector<FeatureStep> &steps);

struct RlLossTerms {
  double policy = 0.0;     // mean -A log pi
  double reference = 0.0;  // mean beta * penalty
  double total() const { return policy + reference; }
};

// With `exact_kl` the penalty is the candidate-set KL(pi || pi_ref) instead
// of the sampled log ratio.
RlLossTerms RlLoss(const BaseWeights &base, const Adapter &adapter, const Adapter &reference,
                   const std::vector<RlStep> &steps, double beta, bool exact_kl = false);
AdapterGrad RlLossGrad(const BaseWeights &base, const Adapter &adapter, const Adapter &reference,
                       const std::vector<RlStep> &steps, double beta, bool exact_kl = false);

// Plain SGD step: A -= lr dA, B -= lr dB.
void ApplyGradient(Adapter *adapter, const AdapterGrad &grad, double learning_rate);

// Features for a replayed sample. Throws DataError naming the sample when
// it has no candidates or the expert action is not among them.
FeatureStep SampleFeatures(const FeatureMap &features, const SftSample &sample,
                           bool drop_state_block);

// Samples may mix families (the unified module). Writes one JSON line per
// epoch to `metrics` when given.
Adapter SftTrain(const PolicyModel &model, const std::vector<SftSample> &samples,
                 const Adapter &init, const SftConfig &config, std::ostream *metrics = nullptr);

// ---------------------------------------------------------------------------
// Closed-loop episodes. Rollouts, evaluation and the sidecar-facing replay all
// build x_t through BoundedSession.

// Picks a candidate index for the current decision.
using ActionChooser =
    std::function<size_t(const BoundedInput &input, const std::vector<std::string> &candidates,
                         const EnvState &state, Rng &rng)>;

struct EpisodeStep {
  BoundedInput input;
  std::vector<std::string> candidates;
  size_t chosen = 0;
  std::string action;
  RewardBreakdown reward;
};

struct EpisodeRecord {
  uint64_t task_seed = 0;
  std::vector<EpisodeStep> steps;
  bool success = false;
  double env_score = 0.0;
};

EpisodeRecord RunEpisode(Family family, uint64_t task_seed, const ActionChooser &choose, Rng &rng,
                         const RuleSet &rules, const RewardToggles &toggles = {},
                         size_t budget = kDefaultBudget);

// Samples at `temperature` with nucleus `top_p`, or acts greedily when the
// temperature is 0. `model` must outlive the chooser.
ActionChooser AdapterChooser(const PolicyModel &model, const Adapter &adapter, double temperature,
                             double top_p = 1.0, bool drop_state_block = false);

// Adapter training loop. The SFT adapter is copied as the frozen reference.
// Writes one JSON line per update to `metrics` when given.
Adapter RlTrain(const PolicyModel &model, Family family, const RuleSet &rules,
                const Adapter &sft_adapter, const RlConfig &config,
                std::ostream *metrics = nullptr);

// Task seeds. Training, RL and evaluation draw from disjoint streams.
uint64_t ExpertTaskSeed(uint64_t seed, size_t index);
uint64_t RlTaskSeed(uint64_t seed, size_t group);
uint64_t EvalTaskSeed(size_t index);

struct EvalMetrics {
  size_t episodes = 0;
  double success_rate = 0.0;
  double mean_env_score = 0.0;
  double mean_steps = 0.0;
};

EvalMetrics EvaluateChooser(Family family, const std::vector<uint64_t> &task_seeds,
                            const ActionChooser &choose, uint64_t inference_seed,
                            size_t budget = kDefaultBudget);

struct EvalConfig {
  size_t episodes = 200;
  double temperature = 0.4;
  double top_p = 0.95;
  std::vector<uint64_t> seeds = {0, 1, 2};  // inference seeds
  bool drop_state_block = false;
  size_t budget = kDefaultBudget;
};

struct EvalReport {
  std::vector<uint64_t> seeds;
  std::vector<EvalMetrics> per_seed;
  double success_mean = 0.0;
  double success_std = 0.0;  // population std over seeds
  double env_score_mean = 0.0;
  double steps_mean = 0.0;

  std::string ToJson() const;
};

// Greedy or sampled closed-loop evaluation on the held-out task seeds.
EvalReport Evaluate(const PolicyModel &model, const Adapter &adapter, Family family,
                    const EvalConfig &config);

// Fraction of samples whose greedy choice is the expert action.
double Top1Agreement(const PolicyModel &model, const Adapter &adapter,
                     const std::vector<SftSample> &samples, bool drop_state_block = false);

}  // namespace skillforge

#endif  // SKILLFORGE_RL_H_
