// Copyright 2026 The writerl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// writerl command-line interface. Talks to the library only through the C API.

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "writerl/writerl.h"

namespace {

struct Globals {
  std::string config;
  std::string judge = "none";
  std::string out;
  std::optional<std::uint64_t> seed;
  int verbosity = 0;
  bool quiet = false;
};

std::pair<std::string, std::string> split_named(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
    throw CLI::ValidationError("expected NAME=PATH, got '" + spec + "'");
  }
  return {spec.substr(0, eq), spec.substr(eq + 1)};
}

const char* c_or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"writerl: length-controlled long-form writing RL toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(wrl_version()));

  Globals g;
  app.add_option("--config", g.config, "Training/reward config file (key = value)");
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--judge", g.judge, "Judge: mock:<path>, live, rule or none");
  app.add_option("--out", g.out, "Output directory (file for rm-train/score/gen-pairs)");
  app.add_flag("-v,--verbose", g.verbosity, "More logging (repeat for debug)");
  app.add_flag("-q,--quiet", g.quiet, "Only log errors");

  // train
  auto* train = app.add_subcommand("train", "Run GRPO training on the toy policy");
  std::vector<std::pair<std::string, std::string>> overrides;
  struct Override {
    const char* flag;
    const char* key;
    const char* help;
  };
  const std::vector<Override> train_flags = {
      {"--steps", "steps", "Training steps"},
      {"--group-size", "group_size", "Samples per prompt (G)"},
      {"--batch-prompts", "batch_prompts", "Prompts per step"},
      {"--epsilon", "epsilon", "Clip range"},
      {"--beta", "beta", "KL penalty weight"},
      {"--temperature", "temperature", "Sampling temperature"},
      {"--top-p", "top_p", "Nucleus mass"},
      {"--max-tokens", "max_tokens", "Sampling budget per trajectory"},
      {"--lr", "learning_rate", "Policy learning rate"},
      {"--threads", "threads", "Sampling threads"},
      {"--prompts", "prompts", "Training prompts JSONL"},
  };
  std::vector<std::string> train_values(train_flags.size());
  for (std::size_t i = 0; i < train_flags.size(); ++i) {
    train->add_option(train_flags[i].flag, train_values[i], train_flags[i].help);
  }

  // rm-train
  auto* rm = app.add_subcommand("rm-train", "Train the writing reward model on preference pairs");
  std::string pairs_path;
  double holdout = 0.2;
  int epochs = 2000;
  rm->add_option("--pairs", pairs_path, "Preference pairs JSONL")->required();
  rm->add_option("--holdout", holdout, "Held-out fraction")->capture_default_str();
  rm->add_option("--epochs", epochs, "Maximum gradient epochs")->capture_default_str();

  // gen-pairs
  auto* gen = app.add_subcommand("gen-pairs", "Write synthetic preference pairs");
  std::size_t count = 1200;
  gen->add_option("--count", count, "Number of pairs")->capture_default_str();

  // score
  auto* score = app.add_subcommand("score", "Score {prompt, text} JSONL with the reward stack");
  std::string score_input;
  score->add_option("--input", score_input, "Input JSONL")->required();

  // arena
  auto* arena = app.add_subcommand("arena", "Pairwise evaluation against baselines");
  std::string arena_prompts;
  std::string candidate;
  std::vector<std::string> baselines;
  int arena_threads = 1;
  bool online = false;
  arena->add_option("--prompts", arena_prompts, "Prompts JSONL {id, prompt}")->required();
  arena->add_option("--candidate", candidate, "NAME=PATH of the candidate outputs")->required();
  arena->add_option("--baseline", baselines, "NAME=PATH of a baseline's outputs (repeatable)")
      ->required();
  arena->add_option("--threads", arena_threads, "Concurrent judge workers")->capture_default_str();
  arena->add_flag("--online-elo", online, "Online K=4 Elo instead of the Bradley-Terry fit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage errors share the input-error exit code.
    return app.exit(e) == 0 ? 0 : 1;
  }

  wrl_set_log_level(g.quiet ? WRL_LOG_ERROR
                    : g.verbosity >= 2 ? WRL_LOG_TRACE
                    : g.verbosity == 1 ? WRL_LOG_DEBUG
                                       : WRL_LOG_INFO);

  if (train->parsed()) {
    if (g.out.empty()) {
      std::fprintf(stderr, "train: --out is required\n");
      return 1;
    }
    for (std::size_t i = 0; i < train_flags.size(); ++i) {
      if (!train_values[i].empty()) overrides.emplace_back(train_flags[i].key, train_values[i]);
    }
    if (g.seed) overrides.emplace_back("seed", std::to_string(*g.seed));
    std::vector<const char*> keys;
    std::vector<const char*> values;
    for (const auto& [k, v] : overrides) {
      keys.push_back(k.c_str());
      values.push_back(v.c_str());
    }
    wrl_train_args args{c_or_null(g.config), g.out.c_str(), g.judge.c_str(),
                        keys.data(),         values.data(), keys.size()};
    return wrl_cmd_train(&args);
  }
  if (rm->parsed()) {
    const std::string model_out = g.out.empty() ? "writing_rm.json" : g.out;
    wrl_rm_train_args args{pairs_path.c_str(), model_out.c_str(), g.seed.value_or(0), holdout,
                           epochs};
    return wrl_cmd_rm_train(&args);
  }
  if (gen->parsed()) {
    const std::string path = g.out.empty() ? "pairs.jsonl" : g.out;
    wrl_gen_pairs_args args{path.c_str(), count, g.seed.value_or(0)};
    return wrl_cmd_gen_pairs(&args);
  }
  if (score->parsed()) {
    wrl_score_args args{score_input.c_str(), c_or_null(g.out), c_or_null(g.config),
                        g.judge.c_str()};
    return wrl_cmd_score(&args);
  }
  if (arena->parsed()) {
    if (g.out.empty()) {
      std::fprintf(stderr, "arena: --out is required\n");
      return 1;
    }
    std::pair<std::string, std::string> cand;
    std::vector<std::pair<std::string, std::string>> base;
    try {
      cand = split_named(candidate);
      for (const auto& b : baselines) base.push_back(split_named(b));
    } catch (const CLI::ValidationError& e) {
      std::fprintf(stderr, "arena: %s\n", e.what());
      return 1;
    }
    std::vector<wrl_named_path> base_c;
    for (const auto& [name, path] : base) base_c.push_back({name.c_str(), path.c_str()});
    wrl_arena_args args{arena_prompts.c_str(),
                        {cand.first.c_str(), cand.second.c_str()},
                        base_c.data(),
                        base_c.size(),
                        g.out.c_str(),
                        g.judge.c_str(),
                        arena_threads,
                        online ? 1 : 0};
    return wrl_cmd_arena(&args);
  }
  return 1;
}
