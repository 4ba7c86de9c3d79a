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

#ifndef SKILLFORGE_SRC_ENVSIM_INTERNAL_H_
#define SKILLFORGE_SRC_ENVSIM_INTERNAL_H_

#include <string>
#include <vector>

#include "skillforge/envsim.h"

namespace skillforge {
namespace household {

EpisodeSpec Generate(Family family, uint64_t seed);
ResetResult Reset(const EpisodeSpec &spec);
// Applies one action; never touches step_index/done bookkeeping.
StepResult Apply(const EnvState &state, const ParsedAction &action);
std::vector<std::string> Admissible(const EnvState &state);
std::string Expert(const EnvState &state);
ParsedAction Parse(const std::string &action);
std::string RoomListing(const EnvState &state);

}  // namespace household

namespace shop {

EpisodeSpec Generate(uint64_t seed);
ResetResult Reset(const EpisodeSpec &spec);
StepResult Apply(const EnvState &state, const ParsedAction &action);
std::vector<std::string> Admissible(const EnvState &state);
std::string Expert(const EnvState &state);
ParsedAction Parse(const std::string &action);

}  // namespace shop
}  // namespace skillforge

#endif  // SKILLFORGE_SRC_ENVSIM_INTERNAL_H_
