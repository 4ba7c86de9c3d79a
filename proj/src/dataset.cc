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

#include "skillforge/dataset.h"

#include <fstream>

#include "json.hpp"
#include "skillforge/text.h"

namespace skillforge {
namespace {

std::vector<std::string> ReadLines(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void WriteLines(const std::vector<std::string> &lines, const std::string &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  for (const auto &line : lines) out << line << '\n';
  if (!out) throw DataError("write failed for " + path);
}

template <typename T>
T Field(const nlohmann::json &j, const char *key, const std::string &where) {
  if (!j.contains(key)) throw DataError(where + ": missing key \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception &) {
    throw DataError(where + ": key \"" + key + "\" has the wrong type");
  }
}

}  // namespace

std::vector<SftSample> ReplayTrajectory(const Trajectory &traj, const std::string &trajectory_id,
                                        size_t budget, bool allow_failed) {
  if (!traj.success && !allow_failed) {
    throw RejectedTrajectoryError("trajectory " + trajectory_id +
                                  " is unsuccessful; only successful executions are replayed");
  }
  if (traj.steps.empty()) throw DataError("trajectory " + trajectory_id + " has no steps");
  const Family family = ParseFamily(traj.family);
  BoundedSession session(family, traj.instruction, budget);
  std::vector<SftSample> samples;
  samples.reserve(traj.steps.size());
  for (size_t t = 0; t < traj.steps.size(); ++t) {
    const auto &[observation, action] = traj.steps[t];
    SftSample s;
    s.family = traj.family;
    s.input = session.Observe(observation);
    s.expert_action = action;
    s.trajectory_id = trajectory_id;
    s.step_index = static_cast<int>(t) + 1;
    if (t < traj.admissible.size()) s.candidates = traj.admissible[t];
    samples.push_back(std::move(s));
    session.Act(action);
  }
  return samples;
}

CorpusStats ComputeStats(const std::vector<SftSample> &samples) {
  CorpusStats stats;
  stats.samples = samples.size();
  for (size_t i = 0; i < samples.size(); ++i) {
    if (i == 0 || samples[i].trajectory_id != samples[i - 1].trajectory_id) ++stats.trajectories;
  }
  stats.mean_steps = stats.trajectories == 0 ? 0.0
                                             : static_cast<double>(stats.samples) /
                                                   static_cast<double>(stats.trajectories);
  return stats;
}

SftCorpus BuildSftCorpus(const std::vector<Trajectory> &trajectories, Family family,
                         size_t budget) {
  SftCorpus corpus;
  corpus.family = FamilyName(family);
  for (size_t i = 0; i < trajectories.size(); ++i) {
    const Trajectory &t = trajectories[i];
    if (t.family != corpus.family) {
      throw DataError("trajectory " + std::to_string(i) + " belongs to " + t.family + ", not " +
                      corpus.family);
    }
    auto samples = ReplayTrajectory(t, corpus.family + "/" + std::to_string(i), budget);
    for (auto &s : samples) corpus.samples.push_back(std::move(s));
  }
  corpus.stats = ComputeStats(corpus.samples);
  corpus.stats.trajectories = trajectories.size();
  corpus.stats.mean_steps = trajectories.empty() ? 0.0
                                                 : static_cast<double>(corpus.stats.samples) /
                                                       static_cast<double>(trajectories.size());
  return corpus;
}

std::string TrajectoryToJson(const Trajectory &traj) {
  nlohmann::ordered_json j;
  j["task_family"] = traj.family;
  j["instruction"] = traj.instruction;
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (size_t i = 0; i < traj.steps.size(); ++i) {
    nlohmann::ordered_json step;
    step["observation"] = traj.steps[i].first;
    step["action"] = traj.steps[i].second;
    if (i < traj.admissible.size()) step["admissible"] = traj.admissible[i];
    steps.push_back(std::move(step));
  }
  j["steps"] = steps;
  j["success"] = traj.success;
  j["env_score"] = traj.env_score;
  if (!traj.final_observation.empty()) j["final_observation"] = traj.final_observation;
  return j.dump();
}

Trajectory TrajectoryFromJson(const std::string &line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw DataError("expected a JSON object");
  Trajectory t;
  t.family = Field<std::string>(j, "task_family", "trajectory");
  ParseFamily(t.family);
  t.instruction = Field<std::string>(j, "instruction", "trajectory");
  if (!j.contains("steps") || !j.at("steps").is_array()) {
    throw DataError("trajectory: missing key \"steps\"");
  }
  const auto &steps = j.at("steps");
  if (steps.empty()) throw DataError("trajectory: steps is empty");
  bool any_admissible = false;
  for (size_t i = 0; i < steps.size(); ++i) {
    const std::string where = "step " + std::to_string(i + 1);
    if (!steps[i].is_object()) throw DataError(where + ": expected an object");
    t.steps.push_back({Field<std::string>(steps[i], "observation", where),
                       Field<std::string>(steps[i], "action", where)});
    if (steps[i].contains("admissible")) any_admissible = true;
  }
  if (any_admissible) {
    for (size_t i = 0; i < steps.size(); ++i) {
      t.admissible.push_back(
          Field<std::vector<std::string>>(steps[i], "admissible", "step " + std::to_string(i + 1)));
    }
  }
  t.success = Field<bool>(j, "success", "trajectory");
  t.env_score = Field<double>(j, "env_score", "trajectory");
  if (j.contains("final_observation")) {
    t.final_observation = Field<std::string>(j, "final_observation", "trajectory");
  }
  return t;
}

std::vector<Trajectory> ReadTrajectories(const std::string &path) {
  std::vector<Trajectory> out;
  const auto lines = ReadLines(path);
  for (size_t i = 0; i < lines.size(); ++i) {
    if (Trim(lines[i]).empty()) continue;
    try {
      out.push_back(TrajectoryFromJson(lines[i]));
    } catch (const Error &e) {
      throw DataError(path + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

void WriteTrajectories(const std::vector<Trajectory> &trajectories, const std::string &path) {
  std::vector<std::string> lines;
  lines.reserve(trajectories.size());
  for (const auto &t : trajectories) lines.push_back(TrajectoryToJson(t));
  WriteLines(lines, path);
}

std::string SampleToJson(const SftSample &s) {
  nlohmann::ordered_json j;
  j["family"] = s.family;
  j["trajectory_id"] = s.trajectory_id;
  j["step_index"] = s.step_index;
  j["input_rendered"] = s.input.rendered;
  j["state_block"] = s.input.state_block.Text();
  j["expert_action"] = s.expert_action;
  if (!s.candidates.empty()) j["candidates"] = s.candidates;
  return j.dump();
}

void WriteCorpus(const SftCorpus &corpus, const std::string &path) {
  std::vector<std::string> lines;
  lines.reserve(corpus.samples.size());
  for (const auto &s : corpus.samples) lines.push_back(SampleToJson(s));
  WriteLines(lines, path);
}

SftCorpus ReadCorpus(const std::string &path) {
  SftCorpus corpus;
  const auto lines = ReadLines(path);
  for (size_t i = 0; i < lines.size(); ++i) {
    if (Trim(lines[i]).empty()) continue;
    const std::string where = path + ":" + std::to_string(i + 1);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::exception &e) {
      throw DataError(where + ": invalid JSON: " + e.what());
    }
    SftSample s;
    s.family = Field<std::string>(j, "family", where);
    s.trajectory_id = Field<std::string>(j, "trajectory_id", where);
    s.step_index = Field<int>(j, "step_index", where);
    s.expert_action = Field<std::string>(j, "expert_action", where);
    const std::string rendered = Field<std::string>(j, "input_rendered", where);
    if (j.contains("candidates")) {
      s.candidates = Field<std::vector<std::string>>(j, "candidates", where);
    }
    BoundedSections sec;
    try {
      sec = ParseBounded(rendered);
    } catch (const Error &e) {
      throw DataError(where + ": " + e.what());
    }
    s.input.instruction = sec.instruction;
    s.input.observation = sec.observation;
    s.input.one_step = sec.one_step;
    s.input.state_block.lines = sec.state_lines;
    for (const auto &line : sec.state_lines) s.input.state_block.token_len += CountTokens(line);
    s.input.rendered = rendered;
    s.input.token_len = CountTokens(rendered);
    if (corpus.family.empty()) corpus.family = s.family;
    if (s.family != corpus.family) throw DataError(where + ": mixed families in corpus");
    corpus.samples.push_back(std::move(s));
  }
  corpus.stats = ComputeStats(corpus.samples);
  return corpus;
}

}  // namespace skillforge
