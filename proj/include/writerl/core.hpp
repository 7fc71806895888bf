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

// Shared domain types, training configuration, word counting and the
// <think>/<answer> output grammar.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace writerl {

using TokenId = std::int32_t;

// Target word range plus the hard cap at which the length reward reaches 0.
struct LengthSpec {
  std::int64_t lower = 0;
  std::int64_t upper = 0;
  std::int64_t max = 0;

  bool valid() const { return 0 <= lower && lower <= upper && upper < max; }
  friend bool operator==(const LengthSpec&, const LengthSpec&) = default;
};

// Cap used when no explicit word cap is known. Kept below the default
// 14000-token sampling budget so the over-length branch stays reachable.
inline constexpr std::int64_t kDefaultLengthCap = 13000;

// Builds a spec for [lower, upper] with max = max(kDefaultLengthCap, 2*upper).
LengthSpec make_length_spec(std::int64_t lower, std::int64_t upper);

struct PromptSpec {
  std::string id;
  std::string text;
  std::optional<LengthSpec> length_spec;
};

struct Trajectory {
  std::string prompt_id;
  std::string raw_text;
  std::optional<std::string> think;
  std::optional<std::string> answer;
  std::vector<TokenId> tokens;
  std::vector<double> logp_current;
  std::vector<double> logp_behavior;
  // Only populated when a KL penalty is active.
  std::vector<double> logp_ref;
  std::int64_t word_len = 0;
  bool truncated = false;
};

struct RewardVector {
  double length = 0.0;
  double write = 0.0;
  double format = 0.0;
};

struct AdvantageVector {
  double length = 0.0;
  double write = 0.0;
  double format = 0.0;
  double fused = 0.0;
};

enum class OutputMode { kThinkRequired, kAnswerOnly };
enum class StdMode { kPopulation, kSample };
enum class PolicyInit { kUniform, kGrammar, kChain };

const char* output_mode_name(OutputMode mode);
const char* policy_init_name(PolicyInit init);

struct TrainConfig {
  // GRPO hyperparameters.
  int group_size = 32;
  int batch_prompts = 32;
  double epsilon = 0.2;
  double beta = 0.0;
  double temperature = 0.8;
  double top_p = 1.0;
  int max_tokens = 14000;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  int steps = 150;
  int inner_epochs = 1;
  StdMode std_mode = StdMode::kPopulation;

  // Reward stack.
  OutputMode mode = OutputMode::kThinkRequired;
  int shingle_k = 8;
  double dup_threshold = 0.8;
  double rep_weight = 2.0;
  std::string writing_rm;  // checkpoint path; empty means zero weights
  std::int64_t length_cap = kDefaultLengthCap;
  std::int64_t default_lower = 300;
  std::int64_t default_upper = 1200;

  // Toy policy.
  int vocab_words = 15;
  int order = 1;
  int start_buckets = 1;
  PolicyInit init = PolicyInit::kUniform;
  double init_grammar_bias = 4.0;
  double init_close_bias = 0.0;
  double init_self_bias = 0.0;

  // Run plumbing.
  std::string prompts;  // JSONL path, resolved against the config directory
  int checkpoint_every = 50;
  int threads = 1;
};

// Applies one `key = value` assignment; throws Error naming the key when the
// key is unknown or the value does not parse.
void set_config_value(TrainConfig& config, std::string_view key,
                      std::string_view value);
// Throws Error(kInvalidArgument) naming the first offending field.
void validate(const TrainConfig& config);
TrainConfig load_config(const std::filesystem::path& path);
// Canonical `key = value` rendering; load_config(render) reproduces config.
std::string render_config(const TrainConfig& config);

// Whitespace-delimited tokens plus one unit per CJK codepoint.
std::int64_t word_count(std::string_view text);

enum class StructureFailure {
  kNone,
  kMissingTag,
  kDuplicateTag,
  kWrongOrder,
  kTrailingContent,
};

const char* structure_failure_name(StructureFailure failure);

struct StructuredOutput {
  std::string think;
  std::string answer;
};

struct ParseOutcome {
  std::optional<StructuredOutput> output;
  StructureFailure failure = StructureFailure::kNone;

  bool ok() const { return output.has_value(); }
};

ParseOutcome parse_structured_output(std::string_view raw,
                                     OutputMode mode = OutputMode::kThinkRequired);
std::string serialize_structured_output(const StructuredOutput& output);

}  // namespace writerl
