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

#ifndef SKILLFORGE_COMMON_H_
#define SKILLFORGE_COMMON_H_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace skillforge {

inline constexpr const char *kVersion = "0.3.0";

// Task families. The household families share one world and grammar; the
// shopping family has its own.
enum class Family {
  kHouseholdPick,
  kHouseholdClean,
  kHouseholdHeat,
  kHouseholdCool,
  kHouseholdExamine,
  kShopPurchase,
};

const std::vector<Family> &AllFamilies();
std::string FamilyName(Family family);
Family ParseFamily(std::string_view name);
bool IsHousehold(Family family);

// Base error. Every module throws a subclass so the CLI can map them onto
// exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: unknown family, malformed flags.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Malformed data: bad JSONL, unparseable instruction, schema violations.
class DataError : public Error {
 public:
  using Error::Error;
};

// A broken internal invariant (an expert that fails, a frozen base that moved).
class InvariantError : public Error {
 public:
  using Error::Error;
};

// Seeded generator. The engine is std::mt19937_64, whose output sequence is
// fixed by the standard; the distributions are implemented here because the
// standard library ones are not reproducible across implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t Next() { return engine_(); }

  // Uniform in [0, 1).
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [lo, hi].
  int UniformInt(int lo, int hi);

  double Normal();

  template <typename T>
  void Shuffle(std::vector<T> &items) {
    for (size_t i = items.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(UniformInt(0, static_cast<int>(i) - 1));
      std::swap(items[i - 1], items[j]);
    }
  }

  template <typename T>
  const T &Pick(const std::vector<T> &items) {
    return items[static_cast<size_t>(UniformInt(0, static_cast<int>(items.size()) - 1))];
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Mixes several integers into one seed (splitmix64 finalizer chain).
uint64_t MixSeed(std::initializer_list<uint64_t> parts);

// 64-bit FNV-1a over a string, offset by a seed.
uint64_t HashString(std::string_view text, uint64_t seed = 0);

}  // namespace skillforge

#endif  // SKILLFORGE_COMMON_H_
