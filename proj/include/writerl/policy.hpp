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

// Tabular autoregressive softmax policy over a tiny vocabulary. Exact
// log-probabilities and analytic gradients make the full RL loop checkable
// against finite differences.

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "writerl/core.hpp"

namespace writerl {

// The last `order` emitted token ids. Positions before the first token hold
// a negative start id, -1 - bucket, where bucket = fnv1a64(prompt id) mod
// start_buckets.
using ContextKey = std::vector<TokenId>;
using LogitTable = std::map<ContextKey, std::vector<double>>;
// Sparse gradient: rows absent from the table are zero.
using GradientTable = LogitTable;

inline constexpr std::string_view kThinkOpenToken = "<think>";
inline constexpr std::string_view kThinkCloseToken = "</think>";
inline constexpr std::string_view kAnswerOpenToken = "<answer>";
inline constexpr std::string_view kAnswerCloseToken = "</answer>";
inline constexpr std::string_view kEosToken = "<eos>";

class ToyPolicy {
 public:
  // Vocabulary is the five structural tokens (ids 0..4, in the order
  // declared above) followed by `words`.
  ToyPolicy(std::vector<std::string> words, int order = 1, int start_buckets = 1);

  // Built-in word list; names past its end are "w<index>".
  static std::vector<std::string> default_words(int count);

  const std::vector<std::string>& vocab() const { return vocab_; }
  std::size_t vocab_size() const { return vocab_.size(); }
  int order() const { return order_; }
  int start_buckets() const { return start_buckets_; }

  TokenId token_id(std::string_view token) const;
  TokenId think_open() const { return 0; }
  TokenId think_close() const { return 1; }
  TokenId answer_open() const { return 2; }
  TokenId answer_close() const { return 3; }
  TokenId eos() const { return 4; }
  bool is_word(TokenId id) const { return id >= 5 && id < static_cast<TokenId>(vocab_.size()); }

  ContextKey start_context(std::string_view prompt_id) const;
  ContextKey advance(const ContextKey& context, TokenId next) const;

  // Missing rows read as all-zero logits (uniform distribution).
  std::span<const double> row(const ContextKey& context) const;
  std::vector<double>& mutable_row(const ContextKey& context);
  const LogitTable& rows() const { return rows_; }

  friend bool operator==(const ToyPolicy&, const ToyPolicy&) = default;

 private:
  std::vector<std::string> vocab_;
  int order_;
  int start_buckets_;
  LogitTable rows_;
  std::vector<double> zero_row_;
};

// Uniform (no rows) or a grammar prior that biases the structural path
// start -> <think> -> </think> -> <answer> -> words -> </answer> -> <eos>.
ToyPolicy make_initial_policy(const TrainConfig& config);

// softmax(logits / temperature), computed stably.
std::vector<double> softmax(std::span<const double> logits, double temperature);

// Uniform draw in [0, 1) from the top 53 bits of one engine output.
double uniform01(std::mt19937_64& rng);

struct SampleOptions {
  // 0 selects greedy argmax decoding; log-probs are then recorded at T = 1.
  double temperature = 0.8;
  double top_p = 1.0;
  int max_tokens = 14000;
  OutputMode mode = OutputMode::kThinkRequired;
};

// Smallest probability-sorted prefix with cumulative mass >= top_p,
// renormalized; ties are broken by lower token id.
std::vector<double> nucleus(std::span<const double> probs, double top_p);

Trajectory sample(const ToyPolicy& policy, const PromptSpec& prompt,
                  const SampleOptions& options, std::mt19937_64& rng);

// Fills raw_text, think, answer and word_len from tokens.
void finalize_trajectory(const ToyPolicy& policy, Trajectory& trajectory, OutputMode mode);
std::string render_tokens(const ToyPolicy& policy, std::span<const TokenId> tokens);

std::vector<double> token_logprobs(const ToyPolicy& policy, const Trajectory& trajectory,
                                   double temperature);
double sequence_logprob(const ToyPolicy& policy, const Trajectory& trajectory,
                        double temperature);

// Adds scale * d log p(trajectory) / d logits into `grad`.
void accumulate_logprob_gradient(const ToyPolicy& policy, const Trajectory& trajectory,
                                 double temperature, double scale, GradientTable& grad);
// Per-token weighted variant: adds sum_t weights[t] * d log p(token t) / d logits.
void accumulate_token_gradient(const ToyPolicy& policy, const Trajectory& trajectory,
                               double temperature, std::span<const double> weights,
                               GradientTable& grad);
GradientTable logprob_gradient(const ToyPolicy& policy, const Trajectory& trajectory,
                               double temperature);

// logits += learning_rate * gradient. Throws Error(kDivergence) if the
// gradient or the result is non-finite; the input is left untouched then.
ToyPolicy apply_update(const ToyPolicy& policy, const GradientTable& gradient,
                       double learning_rate);
void apply_update_in_place(ToyPolicy& policy, const GradientTable& gradient,
                           double learning_rate);

std::string context_key_string(const ContextKey& key);
nlohmann::json to_json(const ToyPolicy& policy);
ToyPolicy policy_from_json(const nlohmann::json& j);
void save_policy(const ToyPolicy& policy, const std::filesystem::path& path);
ToyPolicy load_policy(const std::filesystem::path& path);

}  // namespace writerl
