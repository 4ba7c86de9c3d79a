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

// Line-delimited JSON service exposing the tracker and reward engine to an
// external trainer.
//
// Request:  {"id": ..., "session_id": "...", "method": "...", "params": {...}}
// Response: {"id": ..., "ok": true, "result": {...}}
//       or  {"id": ..., "ok": false, "error": {"code": "...", "message": "..."}}
//
// Methods:
//   init    params {family, instruction, observation?, budget?}; session_id
//           optional (assigned when absent). Returns the state block and,
//           when an observation was given, the bounded input.
//   step    params {prev_action, observation, env_signal}. Returns
//           state_block, tracker_state, reward_breakdown and input.
//   render  returns the current state block and bounded input.
//   reward  returns the last breakdown and the episode total.
//   close   frees the session.
//
// Error codes: parse_error, invalid_request, unknown_method,
// unknown_session, session_exists, invalid_params, internal_error.

#ifndef SKILLFORGE_SIDECAR_H_
#define SKILLFORGE_SIDECAR_H_

#include <atomic>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>

namespace skillforge {

class SidecarServer {
 public:
  SidecarServer();
  ~SidecarServer();
  SidecarServer(const SidecarServer &) = delete;
  SidecarServer &operator=(const SidecarServer &) = delete;

  // Handles one request line and returns one response line (no newline).
  // Never throws. Safe to call from several threads; requests for the same
  // session are serialized.
  std::string Handle(const std::string &line);

  // Serves until end of input.
  void ServeStream(std::istream &in, std::ostream &out);

  // Listens on 127.0.0.1:port (0 picks a free port), one thread per
  // connection. `on_ready` receives the bound port. Returns when Stop() is
  // called.
  void ServeTcp(int port, const std::function<void(int)> &on_ready = {});
  void Stop();

  size_t session_count() const;

 private:
  struct Session;
  std::shared_ptr<Session> Find(const std::string &id) const;

  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  uint64_t next_id_ = 1;
  std::atomic<bool> stopping_{false};
  std::atomic<int> listen_fd_{-1};
};

}  // namespace skillforge

#endif  // SKILLFORGE_SIDECAR_H_
