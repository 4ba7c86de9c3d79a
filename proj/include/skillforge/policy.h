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

// The toy policy: a frozen bilinear scorer over hashed features plus a
// low-rank adapter. For input features u and candidate features v_j,
//
//   logit_j = u' W0 v_j + (alpha / r) v_j' B A u
//
// and the policy is softmax(logits / temperature) over the candidates.

#ifndef SKILLFORGE_POLICY_H_
#define SKILLFORGE_POLICY_H_

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "skillforge/common.h"
#include "skillforge/context.h"

namespace skillforge {

inline constexpr int kDefaultDim = 256;
inline constexpr int kDefaultRank = 8;
inline constexpr double kDefaultAlpha = 16.0;
inline constexpr uint64_t kDefaultHashSeed = 0x5eed'f00dULL;
inline constexpr uint64_t kDefaultBaseSeed = 0xba5eULL;

// Hashed bag-of-tokens features. Input tokens carry a section prefix, and
// state-block tokens also carry their field name, so the state block can be
// dropped as a unit.
struct FeatureMap {
  int d_in = kDefaultDim;
  int d_out = kDefaultDim;
  uint64_t hash_seed = kDefaultHashSeed;

  // L2-normalized; zero when there are no features.
  Eigen::VectorXd Input(const BoundedInput &input, bool drop_state_block = false) const;
  Eigen::VectorXd Action(const std::string &action) const;
  // Columns are the action features of `candidates`.
  Eigen::MatrixXd Actions(const std::vector<std::string> &candidates) const;

  // The raw feature strings, for inspection and tests.
  std::vector<std::string> InputFeatures(const BoundedInput &input,
                                         bool drop_state_block = false) const;
  std::vector<std::string> ActionFeatures(const std::string &action) const;
};

class BaseWeights {
 public:
  // Seeded Gaussian entries scaled by 1/sqrt(d_in).
  BaseWeights(int d_in, int d_out, uint64_t init_seed);
  // A fixed matrix, for tests.
  static BaseWeights FromMatrix(Eigen::MatrixXd w0, uint64_t init_seed = 0);

  const Eigen::MatrixXd &W0() const { return w0_; }
  uint64_t init_seed() const { return init_seed_; }
  // Hash of the exact bytes of W0.
  uint64_t Fingerprint() const;

 private:
  BaseWeights() = default;
  Eigen::MatrixXd w0_;  // d_in x d_out
  uint64_t init_seed_ = 0;
};

// The frozen side of the policy: feature map plus base weights.
struct PolicyModel {
  FeatureMap features;
  BaseWeights base;

  explicit PolicyModel(const FeatureMap &f = {}, uint64_t base_seed = kDefaultBaseSeed)
      : features(f), base(f.d_in, f.d_out, base_seed) {}
};

struct Adapter {
  std::string family;
  int rank = kDefaultRank;
  double alpha = kDefaultAlpha;
  Eigen::MatrixXd A;  // rank x d_in
  Eigen::MatrixXd B;  // d_out x rank

  double scale() const { return alpha / rank; }
  int d_in() const { return static_cast<int>(A.cols()); }
  int d_out() const { return static_cast<int>(B.rows()); }
  // The dense update (alpha / r) B A, d_out x d_in.
  Eigen::MatrixXd Delta() const { return scale() * B * A; }

  // A has N(0, a_std^2) entries and B is zero, so the adapter starts as a
  // no-op. DefaultAStd matches the variance of the usual uniform LoRA init.
  static Adapter Init(const std::string &family, int d_in, int d_out, int rank, double alpha,
                      uint64_t seed, double a_std);
};

inline double DefaultAStd(int d_in) { return 1.0 / std::sqrt(3.0 * d_in); }

struct AdapterGrad {
  Eigen::MatrixXd dA;
  Eigen::MatrixXd dB;

  AdapterGrad &operator+=(const AdapterGrad &other);
  AdapterGrad &operator*=(double k);
  static AdapterGrad Zero(const Adapter &adapter);
};

struct ActionDistribution {
  std::vector<std::string> candidates;
  std::vector<double> logits;  // before temperature
  std::vector<double> probs;
  double temperature = 1.0;

  double LogProb(size_t index) const;
};

// Candidate-feature matrix V has one column per candidate. Throws
// UsageError on an empty candidate list or temperature <= 0.
ActionDistribution Distribution(const BaseWeights &base, const Adapter &adapter,
                                const Eigen::VectorXd &u, const Eigen::MatrixXd &V,
                                const std::vector<std::string> &candidates, double temperature);

ActionDistribution Distribution(const FeatureMap &features, const BaseWeights &base,
                                const Adapter &adapter, const BoundedInput &input,
                                const std::vector<std::string> &candidates, double temperature,
                                bool drop_state_block = false);

// Returns (index, log-probability under the full distribution). With
// top_p < 1, draws from the smallest set of most likely candidates whose
// mass reaches top_p (ties keep candidate order).
std::pair<size_t, double> Sample(const ActionDistribution &dist, Rng &rng, double top_p = 1.0);
// Highest probability; ties go to the earliest candidate.
size_t Greedy(const ActionDistribution &dist);

// Gradient of sum_j weights_j * logit_j / temperature with respect to A
// and B. Every loss in the toolkit reduces to this form.
AdapterGrad GradFromLogitWeights(const Adapter &adapter, const Eigen::VectorXd &u,
                                 const Eigen::MatrixXd &V, const Eigen::VectorXd &weights,
                                 double temperature);

// Gradient of log pi(chosen). W0 is frozen and gets none.
AdapterGrad GradLogProb(const BaseWeights &base, const Adapter &adapter, const Eigen::VectorXd &u,
                        const Eigen::MatrixXd &V, size_t chosen, double temperature);

// Adapter files are JSON with dims, seeds and both factors. Loading checks
// the dims and hash seed against `features` and the base seed.
void SaveAdapter(const Adapter &adapter, const FeatureMap &features, uint64_t base_init_seed,
                 const std::string &path);
Adapter LoadAdapter(const std::string &path, const FeatureMap &features, uint64_t base_init_seed);

}  // namespace skillforge

#endif  // SKILLFORGE_POLICY_H_
