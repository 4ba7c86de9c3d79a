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

#include "skillforge/common.h"

#include <cmath>

namespace skillforge {

const std::vector<Family> &AllFamilies() {
  static const std::vector<Family> kAll = {
      Family::kHouseholdPick, Family::kHouseholdClean,   Family::kHouseholdHeat,
      Family::kHouseholdCool, Family::kHouseholdExamine, Family::kShopPurchase,
  };
  return kAll;
}

std::string FamilyName(Family family) {
  switch (family) {
    case Family::kHouseholdPick:
      return "household.pick";
    case Family::kHouseholdClean:
      return "household.clean";
    case Family::kHouseholdHeat:
      return "household.heat";
    case Family::kHouseholdCool:
      return "household.cool";
    case Family::kHouseholdExamine:
      return "household.examine";
    case Family::kShopPurchase:
      return "shop.purchase";
  }
  return "unknown";
}

Family ParseFamily(std::string_view name) {
  for (Family f : AllFamilies()) {
    if (FamilyName(f) == name) return f;
  }
  throw UsageError("unknown family '" + std::string(name) + "'");
}

bool IsHousehold(Family family) { return family != Family::kShopPurchase; }

int Rng::UniformInt(int lo, int hi) {
  if (hi <= lo) return lo;
  const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
  // Rejection sampling keeps the draw unbiased.
  const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return lo + static_cast<int>(x % span);
}

double Rng::Normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = Uniform();
  } while (u1 <= 0.0);
  const double u2 = Uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(theta);
  has_spare_ = true;
  return radius * std::cos(theta);
}

uint64_t MixSeed(std::initializer_list<uint64_t> parts) {
  uint64_t h = 0x9E3779B97F4A7C15ULL;
  for (uint64_t p : parts) {
    uint64_t z = h ^ (p + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2));
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    h = z ^ (z >> 31);
  }
  return h;
}

uint64_t HashString(std::string_view text, uint64_t seed) {
  uint64_t h = 0xcbf29ce484222325ULL ^ (seed * 0x100000001b3ULL);
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  // Final avalanche so nearby strings land in unrelated buckets.
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return h;
}

}  // namespace skillforge
