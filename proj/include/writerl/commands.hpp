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

#pragma once

// Command implementations behind the CLI. Each returns a process exit code:
// 0 success, 1 bad input or configuration, 2 run failure (divergence, judge
// outage).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "writerl/arena.hpp"
#include "writerl/core.hpp"

namespace writerl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitRun = 2;

// Training prompt file rows: {id, prompt, range?: [lower, upper], max?}.
struct TrainingPrompt {
  std::string id;
  std::string prompt;
  std::optional<std::pair<std::int64_t, std::int64_t>> range;
  std::optional<std::int64_t> max;
};

std::vector<TrainingPrompt> load_training_prompts(const std::filesystem::path& path);

// Explicit range in the row wins; otherwise resolve_length_spec. The cap is
// the row's max when given, else max(config.length_cap, 2 * upper). Returns
// nullopt (after a warning) for unfulfillable prompts.
std::optional<PromptSpec> resolve_prompt(const TrainingPrompt& row, const TrainConfig& config,
                                         Judge* judge);

struct RunManifest {
  std::string run_id;
  std::string config;  // render_config snapshot
  std::string code_version;
  std::string started_at;
  std::string finished_at;
  std::string status;  // running, completed, diverged
  std::vector<std::string> checkpoints;
};

nlohmann::json to_json(const RunManifest& manifest);

struct TrainArgs {
  std::filesystem::path config;  // empty: library defaults
  std::filesystem::path out;
  std::string judge = "none";
  std::vector<std::pair<std::string, std::string>> overrides;
};

// Writes train_log.jsonl, checkpoints/policy_step_NNNNNN.json (step 0, every
// checkpoint_every steps and the last step) and manifest.json into `out`.
int cmd_train(const TrainArgs& args);

struct RmTrainArgs {
  std::filesystem::path pairs;
  std::filesystem::path model_out;
  std::uint64_t seed = 0;
  double holdout = 0.2;
  int epochs = 2000;
};

int cmd_rm_train(const RmTrainArgs& args);

struct GenPairsArgs {
  std::filesystem::path out;
  std::size_t count = 1200;
  std::uint64_t seed = 0;
};

int cmd_gen_pairs(const GenPairsArgs& args);

struct ScoreArgs {
  std::filesystem::path input;
  std::filesystem::path output;  // empty: stdout
  std::filesystem::path config;  // reward settings; empty: defaults
  std::string judge = "none";
};

// Input rows {prompt, text, range?, max?}; output rows {length, write,
// format} or {error}, one per non-blank input line.
int cmd_score(const ScoreArgs& args);

struct ArenaArgs {
  std::filesystem::path prompts;
  std::pair<std::string, std::filesystem::path> candidate;
  std::vector<std::pair<std::string, std::filesystem::path>> baselines;
  std::filesystem::path out;
  std::string judge;
  int threads = 1;
  EloMethod method = EloMethod::kBradleyTerry;
};

// Writes records.jsonl, leaderboard.json and report.json into `out`.
int cmd_arena(const ArenaArgs& args);

}  // namespace writerl
