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

#include "skillforge/policy.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "skillforge/text.h"

namespace skillforge {
namespace {

constexpr const char *kAdapterFormat = "skillforge-adapter";
constexpr int kAdapterVersion = 1;
constexpr uint64_t kSignSalt = 0x9e3779b97f4a7c15ULL;

bool IsSeparator(const std::string &tok) {
  return tok == "," || tok == "." || tok == ":" || tok == "[" || tok == "]";
}

void AddTokens(const std::string &prefix, const std::string &text, std::vector<std::string> *out) {
  for (const auto &tok : Tokenize(ToLower(text))) {
    if (!IsSeparator(tok)) out->push_back(prefix + tok);
  }
}

// Adds the features of one section to `acc`, normalized to unit length, so
// every section weighs the same whatever its length.
void AccumulateSection(const std::vector<std::string> &features, int dim, uint64_t seed,
                       Eigen::VectorXd *acc) {
  if (features.empty()) return;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
  for (const auto &f : features) {
    const uint64_t h = HashString(f, seed);
    const double sign = (HashString(f, seed ^ kSignSalt) & 1) ? 1.0 : -1.0;
    v[static_cast<Eigen::Index>(h % static_cast<uint64_t>(dim))] += sign;
  }
  const double n = v.norm();
  if (n > 0) *acc += v / n;
}

void Normalize(Eigen::VectorXd *v) {
  const double n = v->norm();
  if (n > 0) *v /= n;
}

Eigen::MatrixXd MatrixFromJson(const nlohmann::json &j, Eigen::Index rows, Eigen::Index cols,
                               const std::string &name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw DataError("adapter: " + name + " has the wrong number of rows");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto &row = j[static_cast<size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw DataError("adapter: " + name + " has the wrong number of columns");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<size_t>(c)].get<double>();
  }
  return m;
}

nlohmann::json MatrixToJson(const Eigen::MatrixXd &m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

// ---------------------------------------------------------------------------
// Features.

std::vector<std::string> FeatureMap::InputFeatures(const BoundedInput &input,
                                                   bool drop_state_block) const {
  std::vector<std::string> f = {"bias"};
  AddTokens("t:", input.instruction, &f);
  if (!drop_state_block) {
    for (const auto &line : input.state_block.lines) {
      const size_t colon = line.find(": ");
      const std::string key = colon == std::string::npos ? line : line.substr(0, colon);
      f.push_back("s:" + key);
      if (colon != std::string::npos) AddTokens("s:" + key + ":", line.substr(colon + 2), &f);
    }
  }
  if (input.one_step) {
    AddTokens("p:", input.one_step->observation, &f);
    AddTokens("pa:", input.one_step->action, &f);
  } else {
    f.push_back("p:none");
  }
  AddTokens("o:", input.observation, &f);
  return f;
}

Eigen::VectorXd FeatureMap::Input(const BoundedInput &input, bool drop_state_block) const {
  // Sections are weighed equally: the bias, instruction, previous
  // observation, previous action, current observation, and each state field.
  std::map<std::string, std::vector<std::string>> sections;
  for (const auto &feat : InputFeatures(input, drop_state_block)) {
    size_t cut = feat.find(':');
    if (StartsWith(feat, "s:")) cut = feat.find(':', 2);
    sections[cut == std::string::npos ? feat : feat.substr(0, cut)].push_back(feat);
  }
  Eigen::VectorXd u = Eigen::VectorXd::Zero(d_in);
  for (const auto &[key, feats] : sections) AccumulateSection(feats, d_in, hash_seed, &u);
  Normalize(&u);
  return u;
}

std::vector<std::string> FeatureMap::ActionFeatures(const std::string &action) const {
  std::vector<std::string> f;
  const auto tokens = Tokenize(ToLower(action));
  if (tokens.empty()) return f;
  f.push_back("a:verb:" + tokens.front());
  for (const auto &tok : tokens) {
    if (!IsSeparator(tok)) f.push_back("a:" + tok);
  }
  return f;
}

Eigen::VectorXd FeatureMap::Action(const std::string &action) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d_out);
  AccumulateSection(ActionFeatures(action), d_out, hash_seed, &v);
  return v;
}

Eigen::MatrixXd FeatureMap::Actions(const std::vector<std::string> &candidates) const {
  Eigen::MatrixXd V(d_out, static_cast<Eigen::Index>(candidates.size()));
  for (size_t j = 0; j < candidates.size(); ++j) {
    V.col(static_cast<Eigen::Index>(j)) = Action(candidates[j]);
  }
  return V;
}

// ---------------------------------------------------------------------------
// Weights.

BaseWeights::BaseWeights(int d_in, int d_out, uint64_t init_seed) : init_seed_(init_seed) {
  Rng rng(MixSeed({0x57300ULL, init_seed}));
  w0_.resize(d_in, d_out);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_in));
  // Fill row by row so the stream order does not depend on storage order.
  for (int r = 0; r < d_in; ++r) {
    for (int c = 0; c < d_out; ++c) w0_(r, c) = rng.Normal() * scale;
  }
}

BaseWeights BaseWeights::FromMatrix(Eigen::MatrixXd w0, uint64_t init_seed) {
  BaseWeights b;
  b.w0_ = std::move(w0);
  b.init_seed_ = init_seed;
  return b;
}

uint64_t BaseWeights::Fingerprint() const {
  std::string bytes(reinterpret_cast<const char *>(w0_.data()),
                    static_cast<size_t>(w0_.size()) * sizeof(double));
  return HashString(bytes, static_cast<uint64_t>(w0_.rows()) * 131 + w0_.cols());
}

Adapter Adapter::Init(const std::string &family, int d_in, int d_out, int rank, double alpha,
                      uint64_t seed, double a_std) {
  if (rank <= 0 || rank > std::min(d_in, d_out)) throw UsageError("invalid adapter rank");
  Adapter a;
  a.family = family;
  a.rank = rank;
  a.alpha = alpha;
  a.A.resize(rank, d_in);
  Rng rng(MixSeed({0xada9ULL, seed}));
  for (int r = 0; r < rank; ++r) {
    for (int c = 0; c < d_in; ++c) a.A(r, c) = rng.Normal() * a_std;
  }
  a.B = Eigen::MatrixXd::Zero(d_out, rank);
  return a;
}

AdapterGrad &AdapterGrad::operator+=(const AdapterGrad &other) {
  dA += other.dA;
  dB += other.dB;
  return *this;
}

AdapterGrad &AdapterGrad::operator*=(double k) {
  dA *= k;
  dB *= k;
  return *this;
}

AdapterGrad AdapterGrad::Zero(const Adapter &adapter) {
  return {Eigen::MatrixXd::Zero(adapter.A.rows(), adapter.A.cols()),
          Eigen::MatrixXd::Zero(adapter.B.rows(), adapter.B.cols())};
}

// ---------------------------------------------------------------------------
// Distribution, sampling, gradients.

double ActionDistribution::LogProb(size_t index) const {
  // Recomputed from logits for accuracy at small probabilities.
  double m = -INFINITY;
  for (double z : logits) m = std::max(m, z / temperature);
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z / temperature - m);
  return logits[index] / temperature - m - std::log(sum);
}

ActionDistribution Distribution(const BaseWeights &base, const Adapter &adapter,
                                const Eigen::VectorXd &u, const Eigen::MatrixXd &V,
                                const std::vector<std::string> &candidates, double temperature) {
  if (candidates.empty()) throw UsageError("distribution needs at least one candidate");
  if (!(temperature > 0)) throw UsageError("temperature must be positive");
  const Eigen::VectorXd h = adapter.A * u;  // r
  const Eigen::VectorXd q = base.W0().transpose() * u + adapter.scale() * (adapter.B * h);
  const Eigen::VectorXd z = V.transpose() * q;
  ActionDistribution d;
  d.candidates = candidates;
  d.temperature = temperature;
  d.logits.assign(z.data(), z.data() + z.size());
  double m = -INFINITY;
  for (double x : d.logits) m = std::max(m, x / temperature);
  double sum = 0.0;
  d.probs.resize(d.logits.size());
  for (size_t j = 0; j < d.logits.size(); ++j) {
    d.probs[j] = std::exp(d.logits[j] / temperature - m);
    sum += d.probs[j];
  }
  for (double &p : d.probs) p /= sum;
  return d;
}

ActionDistribution Distribution(const FeatureMap &features, const BaseWeights &base,
                                const Adapter &adapter, const BoundedInput &input,
                                const std::vector<std::string> &candidates, double temperature,
                                bool drop_state_block) {
  return Distribution(base, adapter, features.Input(input, drop_state_block),
                      features.Actions(candidates), candidates, temperature);
}

std::pair<size_t, double> Sample(const ActionDistribution &dist, Rng &rng, double top_p) {
  if (!(top_p > 0 && top_p <= 1)) throw UsageError("top_p must be in (0, 1]");
  std::vector<size_t> order(dist.probs.size());
  std::iota(order.begin(), order.end(), 0);
  double mass = 1.0;
  if (top_p < 1.0) {
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return dist.probs[a] > dist.probs[b]; });
    size_t keep = 0;
    mass = 0.0;
    while (keep < order.size() && mass < top_p) mass += dist.probs[order[keep++]];
    order.resize(keep);
  }
  const double x = rng.Uniform() * mass;
  double acc = 0.0;
  size_t pick = order.back();
  for (size_t j : order) {
    acc += dist.probs[j];
    if (x < acc) {
      pick = j;
      break;
    }
  }
  return {pick, dist.LogProb(pick)};
}

size_t Greedy(const ActionDistribution &dist) {
  size_t best = 0;
  for (size_t j = 1; j < dist.logits.size(); ++j) {
    if (dist.logits[j] > dist.logits[best]) best = j;
  }
  return best;
}

AdapterGrad GradFromLogitWeights(const Adapter &adapter, const Eigen::VectorXd &u,
                                 const Eigen::MatrixXd &V, const Eigen::VectorXd &weights,
                                 double temperature) {
  // d/dB = s (V w) (A u)'   and   d/dA = s B' (V w) u'
  const Eigen::VectorXd vw = V * weights * (adapter.scale() / temperature);
  const Eigen::VectorXd h = adapter.A * u;
  return {(adapter.B.transpose() * vw) * u.transpose(), vw * h.transpose()};
}

AdapterGrad GradLogProb(const BaseWeights &base, const Adapter &adapter, const Eigen::VectorXd &u,
                        const Eigen::MatrixXd &V, size_t chosen, double temperature) {
  const std::vector<std::string> names(static_cast<size_t>(V.cols()));
  const ActionDistribution d = Distribution(base, adapter, u, V, names, temperature);
  Eigen::VectorXd w(V.cols());
  for (Eigen::Index j = 0; j < V.cols(); ++j) {
    w[j] = (static_cast<size_t>(j) == chosen ? 1.0 : 0.0) - d.probs[static_cast<size_t>(j)];
  }
  return GradFromLogitWeights(adapter, u, V, w, temperature);
}

// ---------------------------------------------------------------------------
// Files.

void SaveAdapter(const Adapter &adapter, const FeatureMap &features, uint64_t base_init_seed,
                 const std::string &path) {
  nlohmann::ordered_json j;
  j["format"] = kAdapterFormat;
  j["version"] = kAdapterVersion;
  j["family"] = adapter.family;
  j["d_in"] = adapter.d_in();
  j["d_out"] = adapter.d_out();
  j["r"] = adapter.rank;
  j["alpha"] = adapter.alpha;
  j["hash_seed"] = features.hash_seed;
  j["base_init_seed"] = base_init_seed;
  j["A"] = MatrixToJson(adapter.A);
  j["B"] = MatrixToJson(adapter.B);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump() << '\n';
  if (!out) throw DataError("write failed for " + path);
}

Adapter LoadAdapter(const std::string &path, const FeatureMap &features, uint64_t base_init_seed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::exception &e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kAdapterFormat ||
        j.at("version").get<int>() != kAdapterVersion) {
      throw DataError(path + ": not a version 1 adapter file");
    }
    const int d_in = j.at("d_in").get<int>();
    const int d_out = j.at("d_out").get<int>();
    if (d_in != features.d_in || d_out != features.d_out) {
      throw DataError(path + ": adapter dims do not match the feature map");
    }
    if (j.at("hash_seed").get<uint64_t>() != features.hash_seed) {
      throw DataError(path + ": adapter hash seed does not match the feature map");
    }
    if (j.at("base_init_seed").get<uint64_t>() != base_init_seed) {
      throw DataError(path + ": adapter was trained against a different base");
    }
    Adapter a;
    a.family = j.at("family").get<std::string>();
    a.rank = j.at("r").get<int>();
    a.alpha = j.at("alpha").get<double>();
    if (a.rank <= 0 || a.rank > std::min(d_in, d_out)) throw DataError(path + ": invalid rank");
    a.A = MatrixFromJson(j.at("A"), a.rank, d_in, "A");
    a.B = MatrixFromJson(j.at("B"), d_out, a.rank, "B");
    return a;
  } catch (const nlohmann::json::exception &e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace skillforge
