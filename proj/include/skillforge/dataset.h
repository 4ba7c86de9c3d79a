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

// Step-level supervision from recorded trajectories, and the JSONL formats.

#ifndef SKILLFORGE_DATASET_H_
#define SKILLFORGE_DATASET_H_

#include <string>
#include <vector>

#include "skillforge/context.h"
#include "skillforge/envsim.h"

namespace skillforge {

// Raised when replay is asked to use an unsuccessful trajectory.
class RejectedTrajectoryError : public DataError {
 public:
  using DataError::DataError;
};

struct SftSample {
  std::string family;
  BoundedInput input;
  std::string expert_action;
  std::string trajectory_id;
  int step_index = 0;                   // 1-based
  std::vector<std::string> candidates;  // empty when the trajectory lacks them
};

struct CorpusStats {
  size_t trajectories = 0;
  size_t samples = 0;
  double mean_steps = 0.0;
};

struct SftCorpus {
  std::string family;
  std::vector<SftSample> samples;
  CorpusStats stats;
};

// One sample per step, in order. Throws RejectedTrajectoryError for failed
// trajectories unless `allow_failed` (a diagnostics switch; such samples must
// not feed training).
std::vector<SftSample> ReplayTrajectory(const Trajectory &traj, const std::string &trajectory_id,
                                        size_t budget = kDefaultBudget, bool allow_failed = false);

// Samples in input order. Ids are "<family>/<index>". Throws DataError when a
// trajectory belongs to another family.
SftCorpus BuildSftCorpus(const std::vector<Trajectory> &trajectories, Family family,
                         size_t budget = kDefaultBudget);

CorpusStats ComputeStats(const std::vector<SftSample> &samples);

std::string TrajectoryToJson(const Trajectory &traj);
// Throws DataError describing the first schema violation.
Trajectory TrajectoryFromJson(const std::string &line);

// JSONL I/O. Reading accepts CRLF line endings and skips blank lines; errors
// name the 1-based line number.
std::vector<Trajectory> ReadTrajectories(const std::string &path);
void WriteTrajectories(const std::vector<Trajectory> &trajectories, const std::string &path);

std::string SampleToJson(const SftSample &sample);
void WriteCorpus(const SftCorpus &corpus, const std::string &path);
// Rebuilds samples from a corpus file. The bounded input is recovered from
// its rendered text.
SftCorpus ReadCorpus(const std::string &path);

}  // namespace skillforge

#endif  // SKILLFORGE_DATASET_H_
