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

#include "skillforge/rl.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "json.hpp"
#include "skillforge/tracker.h"

namespace skillforge {
namespace {

constexpr uint64_t kExpertStream = 0xe9e7ULL;
constexpr uint64_t kRlStream = 0x7a11ULL;
constexpr uint64_t kEvalStream = 0xe7a1'5eedULL;
constexpr size_t kSuccessWindow = 10;  // groups

ActionDistribution StepDistribution(const BaseWeights &base, const Adapter &adapter,
                                    const FeatureStep &s, double temperature) {
  std::vector<std::string> names(static_cast<size_t>(s.V.cols()));
  return Distribution(base, adapter, s.u, s.V, names, temperature);
}

Eigen::VectorXd OneHotMinusProbs(const ActionDistribution &d, size_t chosen) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(d.probs.size()));
  for (size_t j = 0; j < d.probs.size(); ++j) {
    w[static_cast<Eigen::Index>(j)] = (j == chosen ? 1.0 : 0.0) - d.probs[j];
  }
  return w;
}

// KL(p || q) over the candidates and its logit weights p_k (d_k - KL),
// where d_k = log p_k - log q_k.
double CandidateKl(const ActionDistribution &p, const ActionDistribution &q,
                   Eigen::VectorXd *weights) {
  const size_t n = p.probs.size();
  std::vector<double> d(n);
  double kl = 0.0;
  for (size_t j = 0; j < n; ++j) {
    d[j] = p.LogProb(j) - q.LogProb(j);
    kl += p.probs[j] * d[j];
  }
  if (weights) {
    weights->resize(static_cast<Eigen::Index>(n));
    for (size_t j = 0; j < n; ++j)
      (*weights)[static_cast<Eigen::Index>(j)] = p.probs[j] * (d[j] - kl);
  }
  return kl;
}

}  // namespace

void SftConfig::Validate() const {
  if (!(learning_rate > 0)) throw UsageError("sft learning_rate must be positive");
  if (epochs <= 0) throw UsageError("sft epochs must be positive");
  if (batch_size <= 0) throw UsageError("sft batch_size must be positive");
}

void RlConfig::Validate() const {
  if (group_size < 2) throw UsageError("rl group_size must be at least 2");
  if (!(gamma > 0 && gamma <= 1)) throw UsageError("rl gamma must be in (0, 1]");
  if (!(beta >= 0)) throw UsageError("rl beta must be non-negative");
  if (!(epsilon > 0)) throw UsageError("rl epsilon must be positive");
  if (!(rollout_temperature > 0)) throw UsageError("rl rollout_temperature must be positive");
  if (!(rollout_top_p > 0 && rollout_top_p <= 1))
    throw UsageError("rl rollout_top_p must be in (0, 1]");
  if (!(learning_rate > 0)) throw UsageError("rl learning_rate must be positive");
  if (episodes < group_size) throw UsageError("rl episodes must be at least group_size");
}

std::vector<std::vector<double>> GroupAdvantages(
    const std::vector<std::vector<double>> &returns_per_rollout, double epsilon) {
  size_t n = 0;
  double sum = 0.0;
  double lo = INFINITY, hi = -INFINITY;
  for (const auto &r : returns_per_rollout) {
    for (double g : r) {
      sum += g;
      lo = std::min(lo, g);
      hi = std::max(hi, g);
      ++n;
    }
  }
  if (n == 0) throw UsageError("group advantages need at least one step");
  std::vector<std::vector<double>> out;
  out.reserve(returns_per_rollout.size());
  if (lo == hi) {
    // The mean of equal values can be off by an ulp; a flat group has no signal.
    for (const auto &r : returns_per_rollout) out.emplace_back(r.size(), 0.0);
    return out;
  }
  const double mean = sum / static_cast<double>(n);
  double var = 0.0;
  for (const auto &r : returns_per_rollout) {
    for (double g : r) var += (g - mean) * (g - mean);
  }
  const double sd = std::sqrt(var / static_cast<double>(n));
  for (const auto &r : returns_per_rollout) {
    std::vector<double> a(r.size());
    for (size_t t = 0; t < r.size(); ++t) a[t] = (r[t] - mean) / (sd + epsilon);
    out.push_back(std::move(a));
  }
  return out;
}

double SftLoss(const BaseWeights &base, const Adapter &adapter,
               const std::vector<FeatureStep> &steps) {
  if (steps.empty()) return 0.0;
  double loss = 0.0;
  for (const auto &s : steps) loss -= StepDistribution(base, adapter, s, 1.0).LogProb(s.chosen);
  return loss / static_cast<double>(steps.size());
}

AdapterGrad SftLossGrad(const BaseWeights &base, const Adapter &adapter,
                        const std::vector<FeatureStep> &steps) {
  AdapterGrad g = AdapterGrad::Zero(adapter);
  if (steps.empty()) return g;
  for (const auto &s : steps) {
    const ActionDistribution d = StepDistribution(base, adapter, s, 1.0);
    g += GradFromLogitWeights(adapter, s.u, s.V, OneHotMinusProbs(d, s.chosen), 1.0);
  }
  g *= -1.0 / static_cast<double>(steps.size());
  return g;
}

RlLossTerms RlLoss(const BaseWeights &base, const Adapter &adapter, const Adapter &reference,
                   const std::vector<RlStep> &steps, double beta, bool exact_kl) {
  RlLossTerms terms;
  if (steps.empty()) return terms;
  for (const auto &s : steps) {
    const ActionDistribution p = StepDistribution(base, adapter, s.step, s.temperature);
    const ActionDistribution q = StepDistribution(base, reference, s.step, s.temperature);
    const double lp = p.LogProb(s.step.chosen);
    terms.policy -= s.advantage * lp;
    terms.reference += exact_kl ? CandidateKl(p, q, nullptr) : lp - q.LogProb(s.step.chosen);
  }
  const double n = static_cast<double>(steps.size());
  terms.policy /= n;
  terms.reference *= beta / n;
  return terms;
}

AdapterGrad RlLossGrad(const BaseWeights &base, const Adapter &adapter, const Adapter &reference,
                       const std::vector<RlStep> &steps, double beta, bool exact_kl) {
  AdapterGrad g = AdapterGrad::Zero(adapter);
  if (steps.empty()) return g;
  for (const auto &s : steps) {
    const ActionDistribution p = StepDistribution(base, adapter, s.step, s.temperature);
    const Eigen::VectorXd dlogp = OneHotMinusProbs(p, s.step.chosen);
    Eigen::VectorXd w;
    if (exact_kl) {
      const ActionDistribution q = StepDistribution(base, reference, s.step, s.temperature);
      Eigen::VectorXd kl_w;
      CandidateKl(p, q, &kl_w);
      w = -s.advantage * dlogp + beta * kl_w;
    } else {
      // The reference log-probability is a constant.
      w = (beta - s.advantage) * dlogp;
    }
    g += GradFromLogitWeights(adapter, s.step.u, s.step.V, w, s.temperature);
  }
  g *= 1.0 / static_cast<double>(steps.size());
  return g;
}

void ApplyGradient(Adapter *adapter, const AdapterGrad &grad, double learning_rate) {
  adapter->A -= learning_rate * grad.dA;
  adapter->B -= learning_rate * grad.dB;
}

FeatureStep SampleFeatures(const FeatureMap &features, const SftSample &sample,
                           bool drop_state_block) {
  const std::string name = sample.trajectory_id + " step " + std::to_string(sample.step_index);
  if (sample.candidates.empty()) throw DataError("sample " + name + " has no candidates");
  const auto it =
      std::find(sample.candidates.begin(), sample.candidates.end(), sample.expert_action);
  if (it == sample.candidates.end()) {
    throw DataError("sample " + name + ": expert action \"" + sample.expert_action +
                    "\" is not among its candidates");
  }
  FeatureStep s;
  s.u = features.Input(sample.input, drop_state_block);
  s.V = features.Actions(sample.candidates);
  s.chosen = static_cast<size_t>(it - sample.candidates.begin());
  return s;
}

Adapter SftTrain(const PolicyModel &model, const std::vector<SftSample> &samples,
                 const Adapter &init, const SftConfig &config, std::ostream *metrics) {
  config.Validate();
  if (samples.empty()) throw DataError("sft corpus is empty");
  std::vector<FeatureStep> steps;
  steps.reserve(samples.size());
  for (const auto &s : samples) {
    steps.push_back(SampleFeatures(model.features, s, config.drop_state_block));
  }
  Adapter adapter = init;
  std::vector<size_t> order(steps.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<FeatureStep> batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(MixSeed({0x5f7ULL, config.seed, static_cast<uint64_t>(epoch)}));
    rng.Shuffle(order);
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch_size)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(config.batch_size));
      batch.clear();
      for (size_t i = start; i < end; ++i) batch.push_back(steps[order[i]]);
      ApplyGradient(&adapter, SftLossGrad(model.base, adapter, batch), config.learning_rate);
    }
    if (metrics) {
      nlohmann::ordered_json j;
      j["stage"] = "sft";
      j["epoch"] = epoch + 1;
      j["loss"] = SftLoss(model.base, adapter, steps);
      *metrics << j.dump() << '\n';
    }
  }
  return adapter;
}

EpisodeRecord RunEpisode(Family family, uint64_t task_seed, const ActionChooser &choose, Rng &rng,
                         const RuleSet &rules, const RewardToggles &toggles, size_t budget) {
  const EpisodeSpec spec = GenerateEpisode(family, task_seed);
  ResetResult reset = Reset(spec);
  EnvState state = std::move(reset.state);
  BoundedSession session(family, spec.instruction, budget);
  session.Observe(reset.observation);
  EpisodeMemory memory;
  EpisodeRecord record;
  record.task_seed = task_seed;
  while (!state.done) {
    EpisodeStep step;
    step.input = session.input();
    step.candidates = AdmissibleActions(state);
    if (step.candidates.empty()) {
      throw InvariantError("no admissible actions at step " + std::to_string(state.step_index) +
                           " of task seed " + std::to_string(task_seed));
    }
    step.chosen = choose(step.input, step.candidates, state, rng);
    if (step.chosen >= step.candidates.size()) throw InvariantError("chooser index out of range");
    step.action = step.candidates[step.chosen];
    StepResult result = Step(state, step.action);
    session.Act(step.action);
    session.Observe(result.observation);
    const StepOutcome outcome{
        tracker::Parse(family, spec.instruction, result.observation, step.action).outcomes,
        result.env_signal};
    step.reward = ScoreStep(rules, session.previous_tracker_state(), step.action, outcome,
                            session.tracker_state(), &memory, toggles);
    state = std::move(result.state);
    record.steps.push_back(std::move(step));
  }
  record.success = state.success;
  record.env_score = state.env_score;
  return record;
}

ActionChooser AdapterChooser(const PolicyModel &model, const Adapter &adapter, double temperature,
                             double top_p, bool drop_state_block) {
  // The adapter is copied so a chooser is an immutable snapshot.
  return [&model, adapter, temperature, top_p, drop_state_block](
             const BoundedInput &input, const std::vector<std::string> &candidates,
             const EnvState &, Rng &rng) -> size_t {
    if (temperature <= 0) {
      return Greedy(Distribution(model.features, model.base, adapter, input, candidates, 1.0,
                                 drop_state_block));
    }
    return Sample(Distribution(model.features, model.base, adapter, input, candidates, temperature,
                               drop_state_block),
                  rng, top_p)
        .first;
  };
}

uint64_t ExpertTaskSeed(uint64_t seed, size_t index) {
  return MixSeed({kExpertStream, seed, static_cast<uint64_t>(index)});
}

uint64_t RlTaskSeed(uint64_t seed, size_t group) {
  return MixSeed({kRlStream, seed, static_cast<uint64_t>(group)});
}

uint64_t EvalTaskSeed(size_t index) { return MixSeed({kEvalStream, static_cast<uint64_t>(index)}); }

Adapter RlTrain(const PolicyModel &model, Family family, const RuleSet &rules,
                const Adapter &sft_adapter, const RlConfig &config, std::ostream *metrics) {
  config.Validate();
  const Adapter reference = sft_adapter;
  Adapter adapter = sft_adapter;
  const size_t k = static_cast<size_t>(config.group_size);
  const size_t groups = static_cast<size_t>(config.episodes) / k;
  Rng rng(MixSeed({kRlStream, config.seed, 0x5a3dULL}));
  std::deque<double> window;
  for (size_t g = 0; g < groups; ++g) {
    const uint64_t task_seed = RlTaskSeed(config.seed, g);
    const ActionChooser chooser = AdapterChooser(model, adapter, config.rollout_temperature,
                                                 config.rollout_top_p, config.drop_state_block);
    std::vector<EpisodeRecord> rollouts;
    std::vector<std::vector<double>> returns;
    double shaped = 0.0, env = 0.0;
    for (size_t i = 0; i < k; ++i) {
      try {
        rollouts.push_back(
            RunEpisode(family, task_seed, chooser, rng, rules, config.toggles, config.budget));
      } catch (const Error &e) {
        throw InvariantError("rollout " + std::to_string(i) + " of group " + std::to_string(g) +
                             ": " + e.what());
      }
      std::vector<double> rewards;
      for (const auto &s : rollouts.back().steps) {
        rewards.push_back(s.reward.total);
        shaped += s.reward.total;
        env += s.reward.env;
      }
      returns.push_back(EpisodeReturns(rewards, config.gamma));
      window.push_back(rollouts.back().success ? 1.0 : 0.0);
    }
    while (window.size() > kSuccessWindow * k) window.pop_front();
    const auto advantages = GroupAdvantages(returns, config.epsilon);

    std::vector<RlStep> steps;
    for (size_t i = 0; i < k; ++i) {
      for (size_t t = 0; t < rollouts[i].steps.size(); ++t) {
        const EpisodeStep &es = rollouts[i].steps[t];
        RlStep s;
        s.step.u = model.features.Input(es.input, config.drop_state_block);
        s.step.V = model.features.Actions(es.candidates);
        s.step.chosen = es.chosen;
        s.advantage = advantages[i][t];
        s.temperature = config.rollout_temperature;
        steps.push_back(std::move(s));
      }
    }
    const RlLossTerms terms =
        metrics ? RlLoss(model.base, adapter, reference, steps, config.beta, config.exact_kl)
                : RlLossTerms{};
    ApplyGradient(&adapter,
                  RlLossGrad(model.base, adapter, reference, steps, config.beta, config.exact_kl),
                  config.learning_rate);
    if (metrics) {
      nlohmann::ordered_json j;
      j["stage"] = "rl";
      j["update"] = g + 1;
      j["task_seed"] = task_seed;
      j["steps"] = steps.size();
      j["loss_policy"] = terms.policy;
      j["loss_reference"] = terms.reference;
      j["mean_shaped_reward"] = shaped / static_cast<double>(k);
      j["mean_env_reward"] = env / static_cast<double>(k);
      j["success_window"] =
          std::accumulate(window.begin(), window.end(), 0.0) / static_cast<double>(window.size());
      *metrics << j.dump() << '\n';
    }
  }
  return adapter;
}

EvalMetrics EvaluateChooser(Family family, const std::vector<uint64_t> &task_seeds,
                            const ActionChooser &choose, uint64_t inference_seed, size_t budget) {
  EvalMetrics m;
  if (task_seeds.empty()) return m;
  const RuleSet rules = BuiltinRules(family);
  Rng rng(MixSeed({kEvalStream, inference_seed}));
  double success = 0.0, score = 0.0, steps = 0.0;
  for (uint64_t seed : task_seeds) {
    const EpisodeRecord r = RunEpisode(family, seed, choose, rng, rules, {}, budget);
    success += r.success ? 1.0 : 0.0;
    score += r.env_score;
    steps += static_cast<double>(r.steps.size());
  }
  const double n = static_cast<double>(task_seeds.size());
  m.episodes = task_seeds.size();
  m.success_rate = success / n;
  m.mean_env_score = score / n;
  m.mean_steps = steps / n;
  return m;
}

EvalReport Evaluate(const PolicyModel &model, const Adapter &adapter, Family family,
                    const EvalConfig &config) {
  if (config.seeds.empty()) throw UsageError("evaluation needs at least one seed");
  std::vector<uint64_t> task_seeds(config.episodes);
  for (size_t i = 0; i < config.episodes; ++i) task_seeds[i] = EvalTaskSeed(i);
  const ActionChooser chooser =
      AdapterChooser(model, adapter, config.temperature, config.top_p, config.drop_state_block);
  EvalReport report;
  report.seeds = config.seeds;
  for (uint64_t s : config.seeds) {
    report.per_seed.push_back(EvaluateChooser(family, task_seeds, chooser, s, config.budget));
  }
  const double n = static_cast<double>(report.per_seed.size());
  for (const auto &m : report.per_seed) {
    report.success_mean += m.success_rate / n;
    report.env_score_mean += m.mean_env_score / n;
    report.steps_mean += m.mean_steps / n;
  }
  double var = 0.0;
  for (const auto &m : report.per_seed) {
    var += (m.success_rate - report.success_mean) * (m.success_rate - report.success_mean);
  }
  report.success_std = std::sqrt(var / n);
  return report;
}

std::string EvalReport::ToJson() const {
  nlohmann::ordered_json j;
  j["seeds"] = seeds;
  nlohmann::ordered_json per = nlohmann::ordered_json::array();
  for (size_t i = 0; i < per_seed.size(); ++i) {
    nlohmann::ordered_json m;
    m["seed"] = seeds[i];
    m["episodes"] = per_seed[i].episodes;
    m["success_rate"] = per_seed[i].success_rate;
    m["mean_env_score"] = per_seed[i].mean_env_score;
    m["mean_steps"] = per_seed[i].mean_steps;
    per.push_back(std::move(m));
  }
  j["per_seed"] = per;
  j["success_mean"] = success_mean;
  j["success_std"] = success_std;
  j["env_score_mean"] = env_score_mean;
  j["steps_mean"] = steps_mean;
  return j.dump();
}

double Top1Agreement(const PolicyModel &model, const Adapter &adapter,
                     const std::vector<SftSample> &samples, bool drop_state_block) {
  if (samples.empty()) return 0.0;
  size_t hits = 0;
  for (const auto &s : samples) {
    const FeatureStep f = SampleFeatures(model.features, s, drop_state_block);
    if (Greedy(StepDistribution(model.base, adapter, f, 1.0)) == f.chosen) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

}  // namespace skillforge
