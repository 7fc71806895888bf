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

// Client side of the external judge: writing-task selection, length-range
// prediction and pairwise win-rate judging over an OpenAI-compatible
// chat-completion endpoint, with a scripted mock and a rule-based fallback.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "writerl/core.hpp"

namespace writerl {

enum class Verdict { kAMuchBetter, kABetter, kTie, kBBetter, kBMuchBetter };

inline constexpr Verdict kAllVerdicts[] = {Verdict::kAMuchBetter, Verdict::kABetter,
                                           Verdict::kTie, Verdict::kBBetter,
                                           Verdict::kBMuchBetter};

// "[[A>>B]]", "[[A>B]]", "[[A=B]]", "[[B>A]]", "[[B>>A]]".
std::string_view verdict_token(Verdict v);
// "A_much_better", "A_better", "tie", "B_better", "B_much_better".
std::string_view verdict_name(Verdict v);
std::optional<Verdict> verdict_from_name(std::string_view name);

// Verdict for the last bracketed pattern in `text`. Throws Error(kParse) with
// the raw text when none is present.
Verdict parse_verdict(std::string_view text);

struct JudgeEndpoint {
  std::string base_url = "https://api.openai.com/v1";
  std::string model_name = "gpt-4.1";
  std::string api_key;
  std::chrono::milliseconds timeout{120000};
  int max_retries = 3;
  int max_in_flight = 4;
  std::chrono::milliseconds backoff{500};

  void validate() const;
  // JUDGE_ENDPOINT, JUDGE_API_KEY, JUDGE_MODEL, JUDGE_TIMEOUT_SECS.
  static JudgeEndpoint from_env();
};

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
};

// FNV-1a over the compact JSON array of {role, content} messages, as 16 hex
// digits. Independent of the model name so mock scripts are portable.
std::string request_hash(const ChatRequest& request);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // Returns the assistant message content. Throws Error(kTransport).
  virtual std::string complete(const ChatRequest& request) = 0;
};

// OpenAI-compatible POST {base_url}/chat/completions. Retries with
// exponential backoff on connection failures, timeouts, 429 and 5xx. At most
// max_in_flight requests run concurrently.
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(JudgeEndpoint endpoint);
  std::string complete(const ChatRequest& request) override;

 private:
  JudgeEndpoint endpoint_;
  std::string scheme_host_port_;
  std::string path_prefix_;
  std::counting_semaphore<1024> in_flight_;
};

// Replies looked up by request hash. Script lines are JSON objects with a
// "reply" (or "error") plus either "hash", or "kind" with the request inputs:
//   {"kind": "classify", "query": ...}
//   {"kind": "length", "query": ...}
//   {"kind": "pairwise", "prompt": ..., "a": ..., "b": ...}
// A "hash" of "*" is the fallback for unscripted requests.
class MockChatBackend : public ChatBackend {
 public:
  MockChatBackend() = default;
  static std::shared_ptr<MockChatBackend> from_file(const std::filesystem::path& path);

  void add_reply(std::string hash, std::string reply);
  void add_error(std::string hash, std::string message);
  std::string complete(const ChatRequest& request) override;
  std::size_t calls() const;

 private:
  struct Entry {
    std::string reply;
    std::optional<std::string> error;
  };
  mutable std::mutex mu_;
  std::map<std::string, Entry> entries_;
  std::size_t calls_ = 0;
};

// Prompt protocols. The templates are reproduced verbatim apart from
// substituting the query.
std::string writing_task_prompt(std::string_view query);
std::string length_range_prompt(std::string_view query);
std::string_view pairwise_system_prompt();
std::string pairwise_user_message(std::string_view prompt, std::string_view response_a,
                                  std::string_view response_b);
ChatRequest classify_request(std::string_view query);
ChatRequest length_request(std::string_view query);
ChatRequest pairwise_request(std::string_view prompt, std::string_view response_a,
                             std::string_view response_b);

struct TaskClassification {
  bool writing = false;
  std::optional<std::pair<std::int64_t, std::int64_t>> range;
  std::string raw;
};

struct LengthPrediction {
  std::optional<LengthSpec> spec;
  bool unfulfillable = false;
  // Set when the range breaks the prompt's rules (multiples of 100,
  // upper <= 12000, upper - lower <= 3000); the range is still returned.
  bool rule_violation = false;
  std::string warning;
  std::string raw;
};

// Accepts the literal NotWriting or the last {"range": [lower, upper]}.
TaskClassification parse_classification(std::string_view reply);
// [0, 0] maps to unfulfillable.
LengthPrediction parse_length_prediction(std::string_view reply);

class Judge {
 public:
  virtual ~Judge() = default;
  virtual TaskClassification classify_writing_task(std::string_view query) = 0;
  virtual LengthPrediction predict_length_range(std::string_view query) = 0;
  virtual Verdict pairwise_judge(std::string_view prompt, std::string_view response_a,
                                 std::string_view response_b) = 0;
};

class LlmJudge : public Judge {
 public:
  explicit LlmJudge(std::shared_ptr<ChatBackend> backend);

  TaskClassification classify_writing_task(std::string_view query) override;
  LengthPrediction predict_length_range(std::string_view query) override;
  Verdict pairwise_judge(std::string_view prompt, std::string_view response_a,
                         std::string_view response_b) override;

 private:
  std::shared_ptr<ChatBackend> backend_;
};

// Offline heuristics: keyword task detection, the requested-form length
// table, and a feature-based pairwise preference. Deterministic.
class RuleJudge : public Judge {
 public:
  TaskClassification classify_writing_task(std::string_view query) override;
  LengthPrediction predict_length_range(std::string_view query) override;
  Verdict pairwise_judge(std::string_view prompt, std::string_view response_a,
                         std::string_view response_b) override;
};

// "mock:<path>", "live" (endpoint from the environment), "rule", or "none"
// (returns nullptr).
std::unique_ptr<Judge> make_judge(std::string_view spec);

// Explicit word counts: "N words" or "N-word" -> [0.9N, 1.1N]; "no more
// than N" style -> [0.9N, N]; "at least N" style -> [N, 1.1N]. Also handles
// N字 with 不少于 / 不超过 qualifiers.
std::optional<LengthSpec> explicit_length_rule(std::string_view query);

enum class LengthSource { kExplicit, kJudge, kDefault, kUnfulfillable };
const char* length_source_name(LengthSource source);

struct ResolvedLength {
  std::optional<LengthSpec> spec;  // empty when unfulfillable
  LengthSource source = LengthSource::kDefault;
  std::string warning;
};

// explicit_length_rule, then the judge (if any), then [default_lower,
// default_upper] with a warning. Judge failures fall through to the default.
ResolvedLength resolve_length_spec(std::string_view query, Judge* judge,
                                   std::int64_t default_lower = 300,
                                   std::int64_t default_upper = 1200);

}  // namespace writerl
