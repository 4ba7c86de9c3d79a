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

// skillforge: command-line front end for the skill-learning pipeline.

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "skillforge/harness.h"
#include "skillforge/sidecar.h"
#include "skillforge/text.h"

namespace sf = skillforge;
using Json = nlohmann::json;
using OJson = nlohmann::ordered_json;

namespace {

// Flags shared by most commands. Unset optionals leave the config alone.
struct Common {
  std::string family;
  std::string config;
  std::string out;
  std::optional<uint64_t> seed;
  std::optional<size_t> budget;
};

void AddCommon(CLI::App *cmd, Common *c, bool family_required) {
  auto *f = cmd->add_option("--family", c->family, "Task family, e.g. shop.purchase");
  if (family_required) f->required();
  cmd->add_option("--config", c->config, "Layered config file or a run manifest");
  cmd->add_option("--seed", c->seed, "Training or generation seed");
  cmd->add_option("--budget", c->budget, "Bounded-input token budget");
}

Json Overrides(const Common &c) {
  Json j = Json::object();
  if (c.seed) j["seed"] = *c.seed;
  if (c.budget) j["budget"] = *c.budget;
  return j;
}

sf::RunConfig Resolve(const Common &c, const Json &extra = Json::object()) {
  Json o = Overrides(c);
  o.merge_patch(extra);
  return sf::ResolveConfig(sf::ParseFamily(c.family),
                           c.config.empty() ? std::nullopt : std::optional<std::string>(c.config),
                           o);
}

void WriteText(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw sf::DataError("cannot write " + path);
  out << text;
  if (!out) throw sf::DataError("write failed for " + path);
}

void WriteManifest(const std::string &command, const std::vector<std::string> &argv,
                   const sf::RunConfig &config, const std::vector<uint64_t> &seeds,
                   const std::vector<std::string> &inputs,
                   const std::vector<std::string> &artifacts, const std::string &out) {
  sf::RunManifest m;
  m.command = command;
  m.argv = argv;
  m.config = config.ToJson();
  m.seeds = seeds;
  m.inputs = inputs;
  m.artifacts = artifacts;
  m.Write(out + ".manifest.json");
}

std::vector<size_t> ParseCounts(const std::string &text) {
  std::vector<size_t> out;
  for (uint64_t v : sf::ParseSeedList(text)) out.push_back(static_cast<size_t>(v));
  return out;
}

std::string VariantHelp() {
  std::string names;
  for (auto v : sf::AblationVariants()) names += (names.empty() ? "" : ", ") + sf::VariantName(v);
  return names;
}

}  // namespace

int main(int argc, char **argv) {
  std::signal(SIGPIPE, SIG_IGN);
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"skillforge: bounded-context skill learning toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sf::kVersion));

  // gen-expert
  Common gen;
  size_t gen_count = 0;
  bool gen_count_set = false;
  auto *cmd_gen = app.add_subcommand("gen-expert", "Write successful expert trajectories as JSONL");
  AddCommon(cmd_gen, &gen, true);
  cmd_gen->add_option("--count", gen_count, "Number of trajectories")
      ->each([&](const std::string &) { gen_count_set = true; });
  cmd_gen->add_option("--out", gen.out, "Output JSONL path")->required();

  // build-sft
  Common build;
  std::string build_in;
  auto *cmd_build = app.add_subcommand("build-sft", "Replay trajectories into step-level samples");
  AddCommon(cmd_build, &build, false);
  cmd_build->add_option("--in", build_in, "Trajectory JSONL")->required();
  cmd_build->add_option("--out", build.out, "Output corpus JSONL")->required();

  // train-sft
  Common tsft;
  std::string tsft_corpus;
  auto *cmd_tsft = app.add_subcommand("train-sft", "Fit an adapter on a replayed corpus");
  AddCommon(cmd_tsft, &tsft, false);
  cmd_tsft->add_option("--corpus", tsft_corpus, "Corpus JSONL from build-sft")->required();
  cmd_tsft->add_option("--out", tsft.out, "Output adapter path")->required();

  // train-rl
  Common trl;
  std::string trl_sft, trl_variant = "full";
  auto *cmd_trl = app.add_subcommand("train-rl", "Refine an SFT adapter with shaped-reward RL");
  AddCommon(cmd_trl, &trl, true);
  cmd_trl->add_option("--sft-adapter", trl_sft, "SFT adapter to start from (required)");
  cmd_trl->add_option("--variant", trl_variant, "full or one of: " + VariantHelp());
  cmd_trl->add_option("--out", trl.out, "Output adapter path")->required();

  // eval
  Common ev;
  std::string ev_adapter, ev_seeds, ev_variant = "full";
  std::optional<double> ev_temperature, ev_top_p;
  std::optional<size_t> ev_episodes;
  auto *cmd_eval = app.add_subcommand("eval", "Closed-loop evaluation on held-out episodes");
  AddCommon(cmd_eval, &ev, true);
  cmd_eval->add_option("--adapter", ev_adapter, "Adapter to evaluate")->required();
  cmd_eval->add_option("--seeds", ev_seeds, "Inference seeds (default 0,1,2)");
  cmd_eval->add_option("--temperature", ev_temperature, "Sampling temperature; 0 is greedy");
  cmd_eval->add_option("--top-p", ev_top_p, "Nucleus mass");
  cmd_eval->add_option("--episodes", ev_episodes, "Held-out episodes per seed");
  cmd_eval->add_option("--variant", ev_variant, "full or no_state_block");
  cmd_eval->add_option("--out", ev.out, "Output metrics JSON");

  // tokens
  Common tok;
  std::string tok_trace;
  size_t tok_episodes = 200;
  auto *cmd_tok =
      app.add_subcommand("tokens", "Prompt-token report for the three context builders");
  AddCommon(cmd_tok, &tok, false);
  cmd_tok->add_option("--trace", tok_trace, "Trajectory JSONL; default: live expert episodes");
  cmd_tok->add_option("--episodes", tok_episodes, "Live episodes when no trace is given");
  cmd_tok->add_option("--out", tok.out, "Output report JSON");

  // ablate
  Common abl;
  std::string abl_variant, abl_seeds = "0,1,2";
  auto *cmd_abl = app.add_subcommand("ablate", "Compare one ablation variant with the full method");
  AddCommon(cmd_abl, &abl, true);
  cmd_abl->add_option("--variant", abl_variant, "One of: " + VariantHelp())->required();
  cmd_abl->add_option("--seeds", abl_seeds, "Training seeds");
  cmd_abl->add_option("--out", abl.out, "Output comparison JSON");

  // sweep
  Common swp;
  std::string swp_counts, swp_seeds = "0,1,2";
  auto *cmd_swp = app.add_subcommand("sweep", "SFT success versus expert trajectory count");
  AddCommon(cmd_swp, &swp, true);
  cmd_swp->add_option("--counts", swp_counts, "Trajectory counts (default 5,25,100,400)");
  cmd_swp->add_option("--seeds", swp_seeds, "Training seeds");
  cmd_swp->add_option("--out", swp.out, "Output JSON");

  // serve
  std::string transport = "stdio";
  auto *cmd_serve = app.add_subcommand("serve", "Run the line-delimited JSON sidecar");
  cmd_serve->add_option("--transport", transport, "stdio or tcp:PORT");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? sf::kExitOk : sf::kExitUsage;
  }

  try {
    if (*cmd_gen) {
      const sf::RunConfig cfg = Resolve(gen);
      const size_t count = gen_count_set ? gen_count : cfg.expert_count;
      const auto trajs = sf::GenerateExperts(sf::ParseFamily(gen.family), count, cfg.seed);
      sf::WriteTrajectories(trajs, gen.out);
      WriteManifest("gen-expert", args, cfg, {cfg.seed}, {}, {gen.out}, gen.out);
      OJson j;
      j["family"] = gen.family;
      j["count"] = trajs.size();
      j["seed"] = cfg.seed;
      j["out"] = gen.out;
      std::cout << j.dump() << '\n';
    } else if (*cmd_build) {
      const auto trajs = sf::ReadTrajectories(build_in);
      std::string family = build.family;
      if (family.empty()) {
        if (trajs.empty()) throw sf::UsageError("empty input; pass --family");
        family = trajs.front().family;
      }
      build.family = family;
      const sf::RunConfig cfg = Resolve(build);
      const sf::SftCorpus corpus = sf::BuildSftCorpus(trajs, sf::ParseFamily(family), cfg.budget);
      sf::WriteCorpus(corpus, build.out);
      WriteManifest("build-sft", args, cfg, {}, {build_in}, {build.out}, build.out);
      OJson j;
      j["family"] = family;
      j["trajectories"] = corpus.stats.trajectories;
      j["samples"] = corpus.stats.samples;
      j["mean_steps"] = corpus.stats.mean_steps;
      std::cout << j.dump() << '\n';
    } else if (*cmd_tsft) {
      const sf::SftCorpus corpus = sf::ReadCorpus(tsft_corpus);
      if (corpus.samples.empty()) throw sf::DataError(tsft_corpus + ": corpus is empty");
      if (tsft.family.empty()) tsft.family = corpus.family;
      if (tsft.family != corpus.family) {
        throw sf::UsageError("--family " + tsft.family + " does not match corpus family " +
                             corpus.family);
      }
      const sf::RunConfig cfg = Resolve(tsft);
      const sf::PolicyModel model = sf::MakePolicyModel(cfg.policy);
      std::ofstream metrics(tsft.out + ".metrics.jsonl", std::ios::binary | std::ios::trunc);
      const sf::Adapter adapter = sf::SftTrain(
          model, corpus.samples, sf::InitAdapter(cfg, corpus.family, cfg.seed), cfg.sft, &metrics);
      sf::SaveAdapter(adapter, model.features, cfg.policy.base_seed, tsft.out);
      WriteManifest("train-sft", args, cfg, {cfg.seed}, {tsft_corpus},
                    {tsft.out, tsft.out + ".metrics.jsonl"}, tsft.out);
      OJson j;
      j["family"] = corpus.family;
      j["samples"] = corpus.samples.size();
      j["top1_agreement"] = sf::Top1Agreement(model, adapter, corpus.samples);
      j["out"] = tsft.out;
      std::cout << j.dump() << '\n';
    } else if (*cmd_trl) {
      if (trl_sft.empty()) {
        throw sf::UsageError("train-rl requires --sft-adapter: RL starts from an SFT adapter");
      }
      const sf::Family family = sf::ParseFamily(trl.family);
      const sf::RunConfig cfg = sf::ApplyVariant(Resolve(trl), sf::ParseVariant(trl_variant));
      const sf::PolicyModel model = sf::MakePolicyModel(cfg.policy);
      const sf::Adapter sft = sf::LoadAdapter(trl_sft, model.features, cfg.policy.base_seed);
      if (sft.family != trl.family) {
        throw sf::DataError(trl_sft + " is an adapter for " + sft.family);
      }
      std::ofstream metrics(trl.out + ".metrics.jsonl", std::ios::binary | std::ios::trunc);
      const sf::Adapter adapter =
          sf::RlTrain(model, family, sf::BuiltinRules(family), sft, cfg.rl, &metrics);
      sf::SaveAdapter(adapter, model.features, cfg.policy.base_seed, trl.out);
      WriteManifest("train-rl", args, cfg, {cfg.seed}, {trl_sft},
                    {trl.out, trl.out + ".metrics.jsonl"}, trl.out);
      std::cout << OJson{{"family", trl.family}, {"variant", trl_variant}, {"out", trl.out}}.dump()
                << '\n';
    } else if (*cmd_eval) {
      Json extra = Json::object();
      if (!ev_seeds.empty()) extra["eval"]["seeds"] = sf::ParseSeedList(ev_seeds);
      if (ev_temperature) extra["eval"]["temperature"] = *ev_temperature;
      if (ev_top_p) extra["eval"]["top_p"] = *ev_top_p;
      if (ev_episodes) extra["eval"]["episodes"] = *ev_episodes;
      const sf::Variant variant = sf::ParseVariant(ev_variant);
      if (variant != sf::Variant::kFull && variant != sf::Variant::kNoStateBlock) {
        throw sf::UsageError("eval only distinguishes full and no_state_block");
      }
      const sf::RunConfig cfg = sf::ApplyVariant(Resolve(ev, extra), variant);
      const sf::PolicyModel model = sf::MakePolicyModel(cfg.policy);
      const sf::Adapter adapter = sf::LoadAdapter(ev_adapter, model.features, cfg.policy.base_seed);
      const sf::EvalReport report =
          sf::Evaluate(model, adapter, sf::ParseFamily(ev.family), cfg.eval);
      const std::string text = report.ToJson();
      if (!ev.out.empty()) {
        WriteText(ev.out, text + "\n");
        WriteManifest("eval", args, cfg, cfg.eval.seeds, {ev_adapter}, {ev.out}, ev.out);
      }
      std::cout << text << '\n';
    } else if (*cmd_tok) {
      std::vector<sf::Trajectory> traces;
      std::vector<std::string> inputs;
      if (!tok_trace.empty()) {
        traces = sf::ReadTrajectories(tok_trace);
        inputs.push_back(tok_trace);
        if (tok.family.empty() && !traces.empty()) tok.family = traces.front().family;
      }
      if (tok.family.empty()) throw sf::UsageError("tokens needs --family or a non-empty --trace");
      const sf::RunConfig cfg = Resolve(tok);
      if (tok_trace.empty()) {
        traces = sf::GenerateExperts(sf::ParseFamily(tok.family), tok_episodes, cfg.seed);
      }
      std::vector<std::pair<std::string, sf::TokenReport>> cols;
      for (auto b : {sf::ContextBuilder::kBounded, sf::ContextBuilder::kReactOneStep,
                     sf::ContextBuilder::kReactFull}) {
        cols.push_back({sf::ContextBuilderName(b), sf::EpisodeTokenReport(traces, b, cfg.budget)});
      }
      const std::string json = sf::TokenReportJson(cols);
      if (!tok.out.empty()) {
        WriteText(tok.out, json + "\n");
        WriteManifest("tokens", args, cfg, {cfg.seed}, inputs, {tok.out}, tok.out);
      }
      std::cout << sf::TokenReportTable(cols);
      std::cout << json << '\n';
    } else if (*cmd_abl) {
      const sf::Variant variant = sf::ParseVariant(abl_variant);
      if (variant == sf::Variant::kFull) throw sf::UsageError("choose one of: " + VariantHelp());
      const sf::Family family = sf::ParseFamily(abl.family);
      const sf::RunConfig cfg = Resolve(abl);
      const auto seeds = sf::ParseSeedList(abl_seeds);
      sf::PipelineResult full = sf::RunPipeline(cfg, family, seeds, true);
      full.variant = "full";
      sf::PipelineResult var = sf::RunPipeline(sf::ApplyVariant(cfg, variant), family, seeds, true);
      var.variant = abl_variant;
      OJson j;
      j["family"] = abl.family;
      j["full"] = full.ToJson();
      j["variant"] = var.ToJson();
      j["delta_rl_success"] = var.rl_mean - full.rl_mean;
      if (!abl.out.empty()) {
        WriteText(abl.out, j.dump(2) + "\n");
        WriteManifest("ablate", args, cfg, seeds, {}, {abl.out}, abl.out);
      }
      std::cout << j.dump() << '\n';
    } else if (*cmd_swp) {
      const sf::Family family = sf::ParseFamily(swp.family);
      const sf::RunConfig cfg = Resolve(swp);
      const auto counts = swp_counts.empty() ? cfg.sweep_counts : ParseCounts(swp_counts);
      const auto seeds = sf::ParseSeedList(swp_seeds);
      const auto rows = sf::RunSweep(cfg, family, counts, seeds);
      OJson j;
      j["family"] = swp.family;
      j["seeds"] = seeds;
      OJson arr = OJson::array();
      for (const auto &r : rows) {
        arr.push_back(
            {{"count", r.count}, {"success_mean", r.success_mean}, {"per_seed", r.per_seed}});
      }
      j["rows"] = arr;
      if (!swp.out.empty()) {
        WriteText(swp.out, j.dump(2) + "\n");
        WriteManifest("sweep", args, cfg, seeds, {}, {swp.out}, swp.out);
      }
      std::cout << j.dump() << '\n';
    } else if (*cmd_serve) {
      sf::SidecarServer server;
      if (transport == "stdio") {
        server.ServeStream(std::cin, std::cout);
      } else if (sf::StartsWith(transport, "tcp:")) {
        int port = 0;
        try {
          port = std::stoi(transport.substr(4));
        } catch (const std::exception &) {
          throw sf::UsageError("invalid transport: " + transport);
        }
        if (port < 0 || port > 65535) throw sf::UsageError("invalid port in " + transport);
        server.ServeTcp(
            port, [](int bound) { std::cerr << "listening on 127.0.0.1:" << bound << std::endl; });
      } else {
        throw sf::UsageError("transport must be stdio or tcp:PORT");
      }
    }
  } catch (const std::exception &e) {
    std::cerr << "skillforge: " << e.what() << '\n';
    return sf::ExitCodeFor(e);
  }
  return sf::kExitOk;
}
