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

#include "skillforge/sidecar.h"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <optional>
#include <thread>
#include <vector>

#include "json.hpp"
#include "skillforge/context.h"
#include "skillforge/reward.h"

namespace skillforge {
namespace {

using Json = nlohmann::json;

struct ProtocolError {
  std::string code;
  std::string message;
};

std::string Dump(const Json &j) {
  // Replace rather than throw on invalid UTF-8 echoed back from the request.
  return j.dump(-1, ' ', false, Json::error_handler_t::replace);
}

Json ErrorResponse(const Json &id, const std::string &code, const std::string &message) {
  return {{"id", id}, {"ok", false}, {"error", {{"code", code}, {"message", message}}}};
}

template <typename T>
T Param(const Json &params, const char *key) {
  if (!params.contains(key)) throw ProtocolError{"invalid_params", std::string("missing ") + key};
  try {
    return params.at(key).get<T>();
  } catch (const nlohmann::json::exception &) {
    throw ProtocolError{"invalid_params", std::string(key) + " has the wrong type"};
  }
}

bool SendAll(int fd, const std::string &data) {
  size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    sent += static_cast<size_t>(n);
  }
  return true;
}

}  // namespace

struct SidecarServer::Session {
  std::mutex mu;
  Family family;
  std::string instruction;
  BoundedSession bounded;
  RuleSet rules;
  EpisodeMemory memory;
  bool observed = false;
  std::optional<RewardBreakdown> last_reward;
  double reward_total = 0.0;
  size_t steps = 0;

  Session(Family f, const std::string &instr, size_t budget)
      : family(f), instruction(instr), bounded(f, instr, budget), rules(BuiltinRules(f)) {}

  Json View() const {
    Json j;
    j["state_block"] = tracker::Render(bounded.tracker_state()).Text();
    j["input"] = observed ? Json(bounded.input().rendered) : Json(nullptr);
    return j;
  }
};

SidecarServer::SidecarServer() = default;
SidecarServer::~SidecarServer() { Stop(); }

size_t SidecarServer::session_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  return sessions_.size();
}

std::shared_ptr<SidecarServer::Session> SidecarServer::Find(const std::string &id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ProtocolError{"unknown_session", "no session " + id};
  return it->second;
}

std::string SidecarServer::Handle(const std::string &line) {
  Json id = nullptr;
  try {
    Json req;
    try {
      req = Json::parse(line);
    } catch (const nlohmann::json::exception &e) {
      return Dump(ErrorResponse(nullptr, "parse_error", e.what()));
    }
    if (!req.is_object()) throw ProtocolError{"invalid_request", "request must be an object"};
    if (req.contains("id")) id = req.at("id");
    if (!req.contains("method") || !req.at("method").is_string()) {
      throw ProtocolError{"invalid_request", "missing method"};
    }
    const std::string method = req.at("method").get<std::string>();
    const Json params = req.contains("params") ? req.at("params") : Json::object();
    if (!params.is_object()) throw ProtocolError{"invalid_request", "params must be an object"};
    std::optional<std::string> session_id;
    if (req.contains("session_id") && !req.at("session_id").is_null()) {
      if (!req.at("session_id").is_string()) {
        throw ProtocolError{"invalid_request", "session_id must be a string"};
      }
      session_id = req.at("session_id").get<std::string>();
    }

    Json result;
    if (method == "init") {
      const std::string family_name = Param<std::string>(params, "family");
      const std::string instruction = Param<std::string>(params, "instruction");
      size_t budget = kDefaultBudget;
      if (params.contains("budget")) budget = Param<size_t>(params, "budget");
      Family family;
      std::shared_ptr<Session> s;
      try {
        family = ParseFamily(family_name);
        s = std::make_shared<Session>(family, instruction, budget);
        if (params.contains("observation")) {
          s->bounded.Observe(Param<std::string>(params, "observation"));
          s->observed = true;
        }
      } catch (const Error &e) {
        throw ProtocolError{"invalid_params", e.what()};
      }
      {
        std::lock_guard<std::mutex> lock(mu_);
        if (!session_id) session_id = "s" + std::to_string(next_id_++);
        if (sessions_.count(*session_id)) {
          throw ProtocolError{"session_exists", "session " + *session_id + " already exists"};
        }
        sessions_[*session_id] = s;
      }
      result = s->View();
      result["session_id"] = *session_id;
    } else if (method == "step" || method == "render" || method == "reward" || method == "close") {
      if (!session_id) throw ProtocolError{"invalid_request", "missing session_id"};
      const std::shared_ptr<Session> s = Find(*session_id);
      std::lock_guard<std::mutex> session_lock(s->mu);
      if (method == "step") {
        const std::string observation = Param<std::string>(params, "observation");
        double env_signal = 0.0;
        if (params.contains("env_signal")) env_signal = Param<double>(params, "env_signal");
        std::optional<std::string> action;
        if (params.contains("prev_action") && !params.at("prev_action").is_null()) {
          action = Param<std::string>(params, "prev_action");
        }
        if (s->observed && !action) {
          throw ProtocolError{"invalid_params", "missing prev_action"};
        }
        if (!s->observed && action) {
          throw ProtocolError{"invalid_params", "prev_action given before the first observation"};
        }
        if (action) s->bounded.Act(*action);
        s->bounded.Observe(observation);
        s->observed = true;
        if (action) {
          const StepOutcome outcome{
              tracker::Parse(s->family, s->instruction, observation, action).outcomes, env_signal};
          s->last_reward = ScoreStep(s->rules, s->bounded.previous_tracker_state(), *action,
                                     outcome, s->bounded.tracker_state(), &s->memory);
          s->reward_total += s->last_reward->total;
          ++s->steps;
        }
        result = s->View();
        result["tracker_state"] = Json::parse(s->bounded.tracker_state().ToJson());
        result["reward_breakdown"] = action ? Json::parse(s->last_reward->ToJson()) : Json(nullptr);
      } else if (method == "render") {
        result = s->View();
      } else if (method == "reward") {
        result["last"] = s->last_reward ? Json::parse(s->last_reward->ToJson()) : Json(nullptr);
        result["total"] = s->reward_total;
        result["steps"] = s->steps;
      } else {
        std::lock_guard<std::mutex> lock(mu_);
        sessions_.erase(*session_id);
        result["closed"] = *session_id;
      }
    } else {
      throw ProtocolError{"unknown_method", "unknown method: " + method};
    }
    return Dump({{"id", id}, {"ok", true}, {"result", result}});
  } catch (const ProtocolError &e) {
    return Dump(ErrorResponse(id, e.code, e.message));
  } catch (const std::exception &e) {
    return Dump(ErrorResponse(id, "internal_error", e.what()));
  }
}

void SidecarServer::ServeStream(std::istream &in, std::ostream &out) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out << Handle(line) << '\n';
    out.flush();
  }
}

void SidecarServer::ServeTcp(int port, const std::function<void(int)> &on_ready) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw Error(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<uint16_t>(port));
  if (::bind(fd, reinterpret_cast<sockaddr *>(&addr), sizeof(addr)) < 0 || ::listen(fd, 16) < 0) {
    const std::string msg = std::strerror(errno);
    ::close(fd);
    throw UsageError("cannot listen on port " + std::to_string(port) + ": " + msg);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr *>(&addr), &len);
  listen_fd_ = fd;
  if (on_ready) on_ready(ntohs(addr.sin_port));

  std::mutex clients_mu;
  std::vector<int> clients;
  std::vector<std::thread> threads;
  while (!stopping_) {
    const int client = ::accept(fd, nullptr, nullptr);
    if (client < 0) {
      if (errno == EINTR) continue;
      break;
    }
    {
      std::lock_guard<std::mutex> lock(clients_mu);
      clients.push_back(client);
    }
    threads.emplace_back([this, client] {
      std::string buffer;
      char chunk[4096];
      for (;;) {
        const ssize_t n = ::recv(client, chunk, sizeof(chunk), 0);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) break;
        buffer.append(chunk, static_cast<size_t>(n));
        size_t nl;
        bool ok = true;
        while (ok && (nl = buffer.find('\n')) != std::string::npos) {
          std::string line = buffer.substr(0, nl);
          buffer.erase(0, nl + 1);
          if (!line.empty() && line.back() == '\r') line.pop_back();
          if (line.empty()) continue;
          ok = SendAll(client, Handle(line) + "\n");
        }
        if (!ok) break;
      }
      ::shutdown(client, SHUT_RDWR);
    });
  }
  {
    std::lock_guard<std::mutex> lock(clients_mu);
    for (int c : clients) ::shutdown(c, SHUT_RDWR);
  }
  for (auto &t : threads) t.join();
  for (int c : clients) ::close(c);
  const int still = listen_fd_.exchange(-1);
  if (still >= 0) ::close(still);
}

void SidecarServer::Stop() {
  stopping_ = true;
  const int fd = listen_fd_.load();
  if (fd >= 0) ::shutdown(fd, SHUT_RDWR);
}

}  // namespace skillforge
