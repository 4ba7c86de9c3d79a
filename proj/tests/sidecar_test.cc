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
#include <gtest/gtest.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <future>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "skillforge/dataset.h"
#include "skillforge/rl.h"
#include "test_util.h"

namespace skillforge {
namespace {

using nlohmann::json;

json Call(SidecarServer &server, const json &request) {
  return json::parse(server.Handle(request.dump()));
}

std::string ErrorCode(const json &response) {
  EXPECT_FALSE(response.at("ok").get<bool>()) << response.dump();
  return response.value("/error/code"_json_pointer, std::string());
}

// Requests that replay a trajectory through one session: init with the first
// observation, then one step per action. The last step carries the episode's
// environment score.
std::vector<json> ReplayRequests(const Trajectory &t, const std::string &session) {
  std::vector<json> reqs;
  reqs.push_back({{"id", 0},
                  {"method", "init"},
                  {"session_id", session},
                  {"params",
                   {{"family", t.family},
                    {"instruction", t.instruction},
                    {"observation", t.steps.front().first}}}});
  for (size_t i = 0; i < t.steps.size(); ++i) {
    const bool last = i + 1 == t.steps.size();
    reqs.push_back({{"id", i + 1},
                    {"method", "step"},
                    {"session_id", session},
                    {"params",
                     {{"prev_action", t.steps[i].second},
                      {"observation", last ? t.final_observation : t.steps[i + 1].first},
                      {"env_signal", last ? t.env_score : 0.0}}}});
  }
  return reqs;
}

std::string BlocksOf(SidecarServer &server, const Trajectory &t, const std::string &session) {
  std::string out;
  for (const json &req : ReplayRequests(t, session)) {
    const json r = Call(server, req);
    EXPECT_TRUE(r.at("ok").get<bool>()) << r.dump();
    out += r["result"]["state_block"].get<std::string>() + "\n---\n";
  }
  return out;
}

TEST(SidecarTest, MatchesInProcessReplay) {
  SidecarServer server;
  for (const char *fixture : {"household_pick.jsonl", "shop_purchase.jsonl"}) {
    const auto trajectories = ReadTrajectories(testing::FixturePath(fixture));
    for (size_t k = 0; k < trajectories.size(); ++k) {
      const Trajectory &t = trajectories[k];
      const auto samples = ReplayTrajectory(t, "t");
      const std::string sid = std::string(fixture) + std::to_string(k);
      const auto reqs = ReplayRequests(t, sid);
      for (size_t i = 0; i < samples.size(); ++i) {
        const json r = Call(server, reqs[i]);
        ASSERT_TRUE(r["ok"].get<bool>()) << r.dump();
        EXPECT_EQ(r["result"]["state_block"], samples[i].input.state_block.Text());
        EXPECT_EQ(r["result"]["input"], samples[i].input.rendered);
      }
      const json last = Call(server, reqs.back());
      EXPECT_EQ(last["result"]["tracker_state"]["current_subgoal"], "done") << last.dump();
      EXPECT_TRUE(Call(server, {{"method", "close"}, {"session_id", sid}})["ok"].get<bool>());
    }
  }
  EXPECT_EQ(server.session_count(), 0u);
}

TEST(SidecarTest, GoldenStateBlocks) {
  SidecarServer server;
  const auto t = ReadTrajectories(testing::FixturePath("household_pick.jsonl")).front();
  EXPECT_EQ(BlocksOf(server, t, "golden"),
            testing::ReadFile(testing::FixturePath("household_pick.blocks.txt")));
}

// Rewards reported over the wire equal those of a closed-loop rollout.
TEST(SidecarTest, RewardsMatchClosedLoopEpisode) {
  const ActionChooser expert = [](const BoundedInput &, const std::vector<std::string> &cands,
                                  const EnvState &state, Rng &) {
    return static_cast<size_t>(std::find(cands.begin(), cands.end(), ExpertAction(state)) -
                               cands.begin());
  };
  SidecarServer server;
  for (Family family : {Family::kHouseholdPick, Family::kHouseholdHeat, Family::kShopPurchase}) {
    for (uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(0);
      const EpisodeRecord episode = RunEpisode(family, seed, expert, rng, BuiltinRules(family));
      const Trajectory t = RunExpert(family, seed);
      const std::string sid = FamilyName(family) + std::to_string(seed);
      const auto reqs = ReplayRequests(t, sid);
      ASSERT_EQ(reqs.size(), episode.steps.size() + 1);
      ASSERT_TRUE(Call(server, reqs[0])["ok"].get<bool>());
      double total = 0.0;
      for (size_t i = 0; i < episode.steps.size(); ++i) {
        const json r = Call(server, reqs[i + 1]);
        ASSERT_TRUE(r["ok"].get<bool>()) << r.dump();
        EXPECT_EQ(r["result"]["reward_breakdown"], json::parse(episode.steps[i].reward.ToJson()));
        total += episode.steps[i].reward.total;
      }
      const json rw = Call(server, {{"method", "reward"}, {"session_id", sid}});
      EXPECT_DOUBLE_EQ(rw["result"]["total"].get<double>(), total);
      EXPECT_EQ(rw["result"]["steps"], episode.steps.size());
    }
  }
}

TEST(SidecarTest, InterleavedSessionsDoNotInterfere) {
  const auto household = ReadTrajectories(testing::FixturePath("household_pick.jsonl"));
  const auto shop = ReadTrajectories(testing::FixturePath("shop_purchase.jsonl"));
  SidecarServer alone_a, alone_b, shared;
  const std::string a = BlocksOf(alone_a, household[0], "a");
  const std::string b = BlocksOf(alone_b, shop[0], "b");
  const auto ra = ReplayRequests(household[0], "a");
  const auto rb = ReplayRequests(shop[0], "b");
  std::string got_a, got_b;
  for (size_t i = 0; i < std::max(ra.size(), rb.size()); ++i) {
    if (i < ra.size())
      got_a += Call(shared, ra[i])["result"]["state_block"].get<std::string>() + "\n---\n";
    if (i < rb.size())
      got_b += Call(shared, rb[i])["result"]["state_block"].get<std::string>() + "\n---\n";
  }
  EXPECT_EQ(got_a, a);
  EXPECT_EQ(got_b, b);
}

TEST(SidecarTest, ConcurrentSessions) {
  const auto household = ReadTrajectories(testing::FixturePath("household_pick.jsonl"));
  SidecarServer reference;
  const std::string expected = BlocksOf(reference, household[1], "ref");
  SidecarServer server;
  std::vector<std::future<std::string>> results;
  for (int k = 0; k < 8; ++k) {
    results.push_back(std::async(std::launch::async, [&, k] {
      return BlocksOf(server, household[1], "w" + std::to_string(k));
    }));
  }
  for (auto &r : results) EXPECT_EQ(r.get(), expected);
  EXPECT_EQ(server.session_count(), 8u);
}

TEST(SidecarTest, ErrorCodes) {
  SidecarServer s;
  EXPECT_EQ(ErrorCode(json::parse(s.Handle("{not json"))), "parse_error");
  EXPECT_EQ(ErrorCode(Call(s, json::array({1, 2}))), "invalid_request");
  EXPECT_EQ(ErrorCode(Call(s, {{"id", 1}})), "invalid_request");
  EXPECT_EQ(ErrorCode(Call(s, {{"method", "init"}, {"params", 3}})), "invalid_request");
  EXPECT_EQ(ErrorCode(Call(s, {{"method", "render"}, {"session_id", 4}})), "invalid_request");
  EXPECT_EQ(ErrorCode(Call(s, {{"method", "render"}})), "invalid_request");
  EXPECT_EQ(ErrorCode(Call(s, {{"method", "dance"}})), "unknown_method");
  EXPECT_EQ(ErrorCode(Call(s, {{"method", "render"}, {"session_id", "nope"}})), "unknown_session");
  EXPECT_EQ(ErrorCode(Call(s, {{"method", "init"}, {"params", {{"family", "shop.purchase"}}}})),
            "invalid_params");
  EXPECT_EQ(ErrorCode(Call(s, {{"method", "init"},
                               {"params", {{"family", "garden.dig"}, {"instruction", "dig"}}}})),
            "invalid_params");
  EXPECT_EQ(
      ErrorCode(Call(s, {{"method", "init"},
                         {"params", {{"family", "household.pick"}, {"instruction", "hello"}}}})),
      "invalid_params");
  EXPECT_EQ(ErrorCode(Call(s, {{"method", "init"},
                               {"params", {{"family", "household.pick"}, {"instruction", 5}}}})),
            "invalid_params");

  const json init = {
      {"id", "x"},
      {"method", "init"},
      {"session_id", "s"},
      {"params", {{"family", "household.pick"}, {"instruction", "put a mug in shelf 1"}}}};
  const json ok = Call(s, init);
  ASSERT_TRUE(ok["ok"].get<bool>()) << ok.dump();
  EXPECT_EQ(ok["id"], "x");
  EXPECT_TRUE(ok["result"]["input"].is_null());
  EXPECT_EQ(ErrorCode(Call(s, init)), "session_exists");
  EXPECT_EQ(ErrorCode(Call(s, {{"method", "step"},
                               {"session_id", "s"},
                               {"params", {{"prev_action", "look"}, {"observation", "hi"}}}})),
            "invalid_params");
  EXPECT_EQ(
      ErrorCode(Call(s, {{"method", "step"}, {"session_id", "s"}, {"params", json::object()}})),
      "invalid_params");
  ASSERT_TRUE(Call(s, {{"method", "step"},
                       {"session_id", "s"},
                       {"params", {{"observation", "You are in the middle of a room."}}}})["ok"]
                  .get<bool>());
  EXPECT_EQ(
      ErrorCode(Call(
          s, {{"method", "step"}, {"session_id", "s"}, {"params", {{"observation", "again"}}}})),
      "invalid_params");
  const json rw = Call(s, {{"id", 9}, {"method", "reward"}, {"session_id", "s"}});
  EXPECT_TRUE(rw["result"]["last"].is_null());
  EXPECT_EQ(rw["result"]["total"], 0.0);

  // Assigned ids when session_id is absent.
  const json anon =
      Call(s, {{"method", "init"},
               {"params",
                {{"family", "shop.purchase"},
                 {"instruction", "i am looking for a mug and price lower than 20.00 dollars"}}}});
  ASSERT_TRUE(anon["ok"].get<bool>()) << anon.dump();
  EXPECT_FALSE(anon["result"]["session_id"].get<std::string>().empty());
  EXPECT_EQ(s.session_count(), 2u);
}

TEST(SidecarTest, FuzzNeverCrashes) {
  SidecarServer s;
  Rng rng(99);
  const std::vector<std::string> methods = {"init", "step", "render", "reward", "close", "x"};
  for (int i = 0; i < 5000; ++i) {
    std::string line;
    if (i % 2 == 0) {
      const int n = rng.UniformInt(0, 80);
      for (int k = 0; k < n; ++k) line.push_back(static_cast<char>(rng.UniformInt(0, 255)));
    } else {
      json req = {{"method", methods[rng.UniformInt(0, methods.size() - 1)]},
                  {"session_id", "f" + std::to_string(rng.UniformInt(0, 3))}};
      json params = json::object();
      if (rng.Uniform() < 0.7)
        params["family"] = rng.Uniform() < 0.5 ? "household.pick" : "shop.purchase";
      if (rng.Uniform() < 0.7)
        params["instruction"] = rng.Uniform() < 0.5 ? "put a cd in safe 1" : "zz";
      if (rng.Uniform() < 0.5) params["observation"] = "You arrive at safe 1.";
      if (rng.Uniform() < 0.5)
        params["prev_action"] = rng.Uniform() < 0.5 ? "go to safe 1" : json(3);
      if (rng.Uniform() < 0.3) params["env_signal"] = rng.Uniform() < 0.5 ? json(1.0) : json("x");
      if (rng.Uniform() < 0.3) params["budget"] = rng.UniformInt(-5, 400);
      req["params"] = params;
      line = req.dump();
    }
    const std::string out = s.Handle(line);
    ASSERT_EQ(out.find('\n'), std::string::npos);
    const json r = json::parse(out);
    ASSERT_TRUE(r.contains("ok"));
    if (!r["ok"].get<bool>()) {
      EXPECT_NE(r["error"]["code"], "internal_error") << line << " -> " << out;
    }
  }
}

TEST(SidecarTest, StreamSkipsBlankLines) {
  SidecarServer s;
  std::istringstream in(
      "{\"id\":1,\"method\":\"x\"}\r\n\n{\"id\":2,\"method\":\"render\",\"session_id\":\"q\"}\n");
  std::ostringstream out;
  s.ServeStream(in, out);
  std::istringstream lines(out.str());
  std::string a, b, c;
  std::getline(lines, a);
  std::getline(lines, b);
  EXPECT_FALSE(std::getline(lines, c));
  EXPECT_EQ(json::parse(a)["error"]["code"], "unknown_method");
  EXPECT_EQ(json::parse(b)["id"], 2);
}

TEST(SidecarTest, StdioCommandMatchesHandle) {
  testing::TempDir dir;
  const auto t = ReadTrajectories(testing::FixturePath("shop_purchase.jsonl")).front();
  std::string input;
  for (const json &req : ReplayRequests(t, "io")) input += req.dump() + "\n";
  testing::WriteFile(dir.File("in.jsonl"), input);
  const std::string cmd = std::string(SKILLFORGE_CLI) + " serve <" + dir.File("in.jsonl") + " >" +
                          dir.File("out.jsonl");
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
  SidecarServer s;
  std::string expected;
  for (const json &req : ReplayRequests(t, "io")) expected += s.Handle(req.dump()) + "\n";
  EXPECT_EQ(testing::ReadFile(dir.File("out.jsonl")), expected);
}

class TcpClient {
 public:
  explicit TcpClient(int port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<uint16_t>(port));
    connected_ = ::connect(fd_, reinterpret_cast<sockaddr *>(&addr), sizeof(addr)) == 0;
  }
  ~TcpClient() { ::close(fd_); }
  bool connected() const { return connected_; }

  void Send(const std::string &data) {
    size_t sent = 0;
    while (sent < data.size()) {
      const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) return;
      sent += static_cast<size_t>(n);
    }
  }
  std::string ReadLine() {
    for (;;) {
      const size_t nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      char chunk[4096];
      const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
      if (n <= 0) return "";
      buffer_.append(chunk, static_cast<size_t>(n));
    }
  }

 private:
  int fd_ = -1;
  bool connected_ = false;
  std::string buffer_;
};

TEST(SidecarTest, TcpTransport) {
  const auto t = ReadTrajectories(testing::FixturePath("household_pick.jsonl")).front();
  SidecarServer reference;
  std::vector<std::string> expected;
  for (const json &req : ReplayRequests(t, "net")) expected.push_back(reference.Handle(req.dump()));

  SidecarServer server;
  std::promise<int> ready;
  std::thread serving([&] { server.ServeTcp(0, [&](int port) { ready.set_value(port); }); });
  const int port = ready.get_future().get();
  ASSERT_GT(port, 0);
  {
    TcpClient client(port);
    ASSERT_TRUE(client.connected());
    // Pipeline everything in one write, split mid-line to exercise framing.
    std::string all;
    for (const json &req : ReplayRequests(t, "net")) all += req.dump() + "\r\n";
    const size_t cut = all.size() / 3;
    client.Send(all.substr(0, cut));
    client.Send(all.substr(cut));
    for (const auto &e : expected) EXPECT_EQ(client.ReadLine(), e);

    TcpClient second(port);
    ASSERT_TRUE(second.connected());
    second.Send("{\"id\":5,\"method\":\"render\",\"session_id\":\"net\"}\n");
    EXPECT_TRUE(json::parse(second.ReadLine())["ok"].get<bool>());
    second.Send("garbage\n");
    EXPECT_EQ(json::parse(second.ReadLine())["error"]["code"], "parse_error");
  }
  server.Stop();
  serving.join();
}

}  // namespace
}  // namespace skillforge
