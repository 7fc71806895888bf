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

// Pairwise evaluation against baselines: every (prompt, baseline) pair is
// judged twice with the response order swapped, collapsed to win/tie/loss
// for the candidate, and fitted to Elo-scale ratings.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "writerl/judge.hpp"

namespace writerl {

struct ArenaPrompt {
  std::string id;
  std::string prompt;
};

struct ModelOutput {
  std::string prompt_id;
  std::string model;
  std::string text;
};

// model_a is the candidate and model_b the baseline; `order` names the model
// shown in position A, and `verdict` is relative to positions.
struct ComparisonRecord {
  std::string prompt_id;
  std::string model_a;
  std::string model_b;
  std::string order;
  std::optional<Verdict> verdict;
  std::string error;

  bool ok() const { return verdict.has_value(); }
};

enum class Outcome { kWin, kTie, kLoss };
const char* outcome_name(Outcome outcome);

// Candidate's score for one record: 1, 0.5 or 0 (either strength of
// preference counts fully). nullopt for errored records.
std::optional<double> candidate_score(const ComparisonRecord& record);

// Forward has the candidate as A, swapped has it as B.
Outcome aggregate_pair(Verdict forward, Verdict swapped);

struct PairOutcome {
  std::string prompt_id;
  std::string candidate;
  std::string baseline;
  Outcome outcome = Outcome::kTie;
};

// Groups records by (prompt, candidate, baseline) and averages the two
// order-swapped scores. Pairs with an errored record are skipped.
std::vector<PairOutcome> aggregate_records(std::span<const ComparisonRecord> records);

// Outputs keyed by model name, then prompt id.
using OutputTable = std::map<std::string, std::map<std::string, std::string>>;
OutputTable index_outputs(std::span<const ModelOutput> outputs);

// Two records per (prompt, baseline), forward then swapped, in prompt-major
// order. A judge failure on either call marks both records errored. Judge
// calls are spread over `threads` workers; record order does not depend on it.
std::vector<ComparisonRecord> run_arena(std::span<const ArenaPrompt> prompts,
                                        const std::string& candidate,
                                        const std::vector<std::string>& baselines,
                                        const OutputTable& outputs, Judge& judge,
                                        int threads = 1);

struct Game {
  std::string a;
  std::string b;
  double score_a = 0.5;  // 1 win, 0.5 tie, 0 loss
};

std::vector<Game> games_from_outcomes(std::span<const PairOutcome> outcomes);

struct Rating {
  std::string model;
  double elo = 0.0;
  std::int64_t games = 0;
};

// 1 / (1 + 10^((r_b - r_a) / 400)).
double elo_expected(double r_a, double r_b);

enum class EloMethod { kBradleyTerry, kOnline };

struct EloOptions {
  double anchor = 1000.0;
  // Models whose mean rating is pinned to `anchor`; empty means all models.
  std::vector<std::string> anchor_models;
  EloMethod method = EloMethod::kBradleyTerry;
  double k_factor = 4.0;
  int max_iterations = 100000;
  double tolerance = 1e-10;
  double clamp = 2000.0;
};

struct EloFit {
  std::vector<Rating> ratings;  // sorted by descending elo, then name
  bool clamped = false;
  std::string warning;
};

// Maximum-likelihood Bradley-Terry on the Elo scale (minorize-maximize
// iterations), ties counting half a win for each side. When the comparison
// graph is not strongly connected the MLE does not exist; ratings are then
// clamped to anchor +- clamp and a warning is set.
EloFit fit_elo(std::span<const Game> games, const EloOptions& options = {});

struct WinRateRow {
  std::string baseline;  // "overall" for the aggregate row
  std::int64_t wins = 0;
  std::int64_t ties = 0;
  std::int64_t losses = 0;
  double win_rate = 0.0;
};

// One row per baseline with games (sorted by name), then an overall row.
std::vector<WinRateRow> win_rate_report(std::span<const PairOutcome> outcomes);

nlohmann::json to_json(const ComparisonRecord& record);
ComparisonRecord comparison_record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Rating& rating);
nlohmann::json to_json(const WinRateRow& row);

// JSON Lines readers; malformed lines raise Error(kParse) with the line number.
std::vector<ArenaPrompt> load_arena_prompts(const std::filesystem::path& path);
std::vector<ModelOutput> load_model_outputs(const std::filesystem::path& path);
std::vector<ComparisonRecord> load_comparison_records(const std::filesystem::path& path);

}  // namespace writerl
