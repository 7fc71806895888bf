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

#include "writerl/core.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "writerl/error.hpp"
#include "writerl/text.hpp"

namespace writerl {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kJudge: return "judge";
    case ErrorCode::kTransport: return "transport";
    case ErrorCode::kInternal: return "internal";
  }
  return "unknown";
}

LengthSpec make_length_spec(std::int64_t lower, std::int64_t upper) {
  return LengthSpec{lower, upper, std::max(kDefaultLengthCap, 2 * upper)};
}

const char* output_mode_name(OutputMode mode) {
  return mode == OutputMode::kThinkRequired ? "think" : "answer";
}

const char* policy_init_name(PolicyInit init) {
  switch (init) {
    case PolicyInit::kUniform: return "uniform";
    case PolicyInit::kGrammar: return "grammar";
    case PolicyInit::kChain: return "chain";
  }
  return "unknown";
}

namespace {

template <typename T>
T parse_integer(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    fail(ErrorCode::kParse, "config key '" + std::string(key) +
                                "': expected an integer, got '" +
                                std::string(value) + "'");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    fail(ErrorCode::kParse, "config key '" + std::string(key) +
                                "': expected a number, got '" +
                                std::string(value) + "'");
  }
  return out;
}

std::string unquote(std::string_view value) {
  if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
    return std::string(value.substr(1, value.size() - 2));
  }
  return std::string(value);
}

[[noreturn]] void invalid(std::string_view field, const std::string& why) {
  fail(ErrorCode::kInvalidArgument,
       "config field '" + std::string(field) + "' " + why);
}

}  // namespace

void set_config_value(TrainConfig& c, std::string_view key,
                      std::string_view raw) {
  const std::string_view value = text::trim(raw);
  if (key == "group_size") c.group_size = parse_integer<int>(key, value);
  else if (key == "batch_prompts") c.batch_prompts = parse_integer<int>(key, value);
  else if (key == "epsilon") c.epsilon = parse_real(key, value);
  else if (key == "beta") c.beta = parse_real(key, value);
  else if (key == "temperature") c.temperature = parse_real(key, value);
  else if (key == "top_p") c.top_p = parse_real(key, value);
  else if (key == "max_tokens") c.max_tokens = parse_integer<int>(key, value);
  else if (key == "learning_rate" || key == "lr") c.learning_rate = parse_real(key, value);
  else if (key == "seed") c.seed = parse_integer<std::uint64_t>(key, value);
  else if (key == "steps") c.steps = parse_integer<int>(key, value);
  else if (key == "inner_epochs") c.inner_epochs = parse_integer<int>(key, value);
  else if (key == "std_mode") {
    if (value == "population") c.std_mode = StdMode::kPopulation;
    else if (value == "sample") c.std_mode = StdMode::kSample;
    else invalid(key, "must be 'population' or 'sample'");
  } else if (key == "mode") {
    if (value == "think") c.mode = OutputMode::kThinkRequired;
    else if (value == "answer") c.mode = OutputMode::kAnswerOnly;
    else invalid(key, "must be 'think' or 'answer'");
  } else if (key == "shingle_k") c.shingle_k = parse_integer<int>(key, value);
  else if (key == "dup_threshold") c.dup_threshold = parse_real(key, value);
  else if (key == "rep_weight") c.rep_weight = parse_real(key, value);
  else if (key == "writing_rm") c.writing_rm = unquote(value);
  else if (key == "length_cap") c.length_cap = parse_integer<std::int64_t>(key, value);
  else if (key == "default_lower") c.default_lower = parse_integer<std::int64_t>(key, value);
  else if (key == "default_upper") c.default_upper = parse_integer<std::int64_t>(key, value);
  else if (key == "vocab_words") c.vocab_words = parse_integer<int>(key, value);
  else if (key == "order") c.order = parse_integer<int>(key, value);
  else if (key == "start_buckets") c.start_buckets = parse_integer<int>(key, value);
  else if (key == "init") {
    if (value == "uniform") c.init = PolicyInit::kUniform;
    else if (value == "grammar") c.init = PolicyInit::kGrammar;
    else if (value == "chain") c.init = PolicyInit::kChain;
    else invalid(key, "must be 'uniform', 'grammar' or 'chain'");
  } else if (key == "init_grammar_bias") c.init_grammar_bias = parse_real(key, value);
  else if (key == "init_close_bias") c.init_close_bias = parse_real(key, value);
  else if (key == "init_self_bias") c.init_self_bias = parse_real(key, value);
  else if (key == "prompts") c.prompts = unquote(value);
  else if (key == "checkpoint_every") c.checkpoint_every = parse_integer<int>(key, value);
  else if (key == "threads") c.threads = parse_integer<int>(key, value);
  else fail(ErrorCode::kParse, "unknown config key '" + std::string(key) + "'");
}

void validate(const TrainConfig& c) {
  if (c.group_size < 2) invalid("group_size", "must be >= 2");
  if (c.batch_prompts < 1) invalid("batch_prompts", "must be >= 1");
  if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) invalid("epsilon", "must lie in (0, 1)");
  if (!(c.beta >= 0.0)) invalid("beta", "must be >= 0");
  if (!(c.temperature > 0.0)) invalid("temperature", "must be > 0");
  if (!(c.top_p > 0.0 && c.top_p <= 1.0)) invalid("top_p", "must lie in (0, 1]");
  if (c.max_tokens < 1) invalid("max_tokens", "must be >= 1");
  if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate)) {
    invalid("learning_rate", "must be finite and >= 0");
  }
  if (c.steps < 0) invalid("steps", "must be >= 0");
  if (c.inner_epochs < 1) invalid("inner_epochs", "must be >= 1");
  if (c.shingle_k < 2) invalid("shingle_k", "must be >= 2");
  if (!(c.dup_threshold > 0.0 && c.dup_threshold <= 1.0)) {
    invalid("dup_threshold", "must lie in (0, 1]");
  }
  if (!(c.rep_weight >= 0.0)) invalid("rep_weight", "must be >= 0");
  if (!(0 <= c.default_lower && c.default_lower <= c.default_upper &&
        c.default_upper < c.length_cap)) {
    invalid("default_lower", "requires 0 <= default_lower <= default_upper < length_cap");
  }
  if (c.vocab_words < 1) invalid("vocab_words", "must be >= 1");
  if (c.order < 1) invalid("order", "must be >= 1");
  if (c.start_buckets < 1) invalid("start_buckets", "must be >= 1");
  if (c.checkpoint_every < 1) invalid("checkpoint_every", "must be >= 1");
  if (c.threads < 1) invalid("threads", "must be >= 1");
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kParse, "cannot open config file " + path.string());
  TrainConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = text::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no) +
                                  ": expected 'key = value'");
    }
    set_config_value(config, text::trim(view.substr(0, eq)), view.substr(eq + 1));
  }
  if (!config.prompts.empty() && std::filesystem::path(config.prompts).is_relative()) {
    config.prompts = (path.parent_path() / config.prompts).lexically_normal().string();
  }
  if (!config.writing_rm.empty() && std::filesystem::path(config.writing_rm).is_relative()) {
    config.writing_rm = (path.parent_path() / config.writing_rm).lexically_normal().string();
  }
  validate(config);
  return config;
}

namespace {

std::string real(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

}  // namespace

std::string render_config(const TrainConfig& c) {
  std::ostringstream out;
  out << "group_size = " << c.group_size << '\n'
      << "batch_prompts = " << c.batch_prompts << '\n'
      << "epsilon = " << real(c.epsilon) << '\n'
      << "beta = " << real(c.beta) << '\n'
      << "temperature = " << real(c.temperature) << '\n'
      << "top_p = " << real(c.top_p) << '\n'
      << "max_tokens = " << c.max_tokens << '\n'
      << "learning_rate = " << real(c.learning_rate) << '\n'
      << "seed = " << c.seed << '\n'
      << "steps = " << c.steps << '\n'
      << "inner_epochs = " << c.inner_epochs << '\n'
      << "std_mode = " << (c.std_mode == StdMode::kPopulation ? "population" : "sample") << '\n'
      << "mode = " << output_mode_name(c.mode) << '\n'
      << "shingle_k = " << c.shingle_k << '\n'
      << "dup_threshold = " << real(c.dup_threshold) << '\n'
      << "rep_weight = " << real(c.rep_weight) << '\n'
      << "length_cap = " << c.length_cap << '\n'
      << "default_lower = " << c.default_lower << '\n'
      << "default_upper = " << c.default_upper << '\n'
      << "vocab_words = " << c.vocab_words << '\n'
      << "order = " << c.order << '\n'
      << "start_buckets = " << c.start_buckets << '\n'
      << "init = " << policy_init_name(c.init) << '\n'
      << "init_grammar_bias = " << real(c.init_grammar_bias) << '\n'
      << "init_close_bias = " << real(c.init_close_bias) << '\n'
      << "init_self_bias = " << real(c.init_self_bias) << '\n'
      << "checkpoint_every = " << c.checkpoint_every << '\n'
      << "threads = " << c.threads << '\n';
  if (!c.writing_rm.empty()) out << "writing_rm = \"" << c.writing_rm << "\"\n";
  if (!c.prompts.empty()) out << "prompts = \"" << c.prompts << "\"\n";
  return out.str();
}

std::int64_t word_count(std::string_view utf8) {
  std::int64_t count = 0;
  bool in_token = false;
  for (char32_t cp : text::decode_utf8(utf8)) {
    if (text::is_space(cp) || text::is_cjk_punct(cp)) {
      in_token = false;
    } else if (text::is_cjk(cp)) {
      in_token = false;
      ++count;
    } else if (!in_token) {
      in_token = true;
      ++count;
    }
  }
  return count;
}

const char* structure_failure_name(StructureFailure failure) {
  switch (failure) {
    case StructureFailure::kNone: return "none";
    case StructureFailure::kMissingTag: return "missing-tag";
    case StructureFailure::kDuplicateTag: return "duplicate-tag";
    case StructureFailure::kWrongOrder: return "wrong-order";
    case StructureFailure::kTrailingContent: return "trailing-content";
  }
  return "unknown";
}

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

struct TagHits {
  std::size_t count = 0;
  std::size_t pos = std::string_view::npos;
};

TagHits find_tag(std::string_view raw, std::string_view tag) {
  TagHits hits;
  for (auto p = raw.find(tag); p != std::string_view::npos;
       p = raw.find(tag, p + tag.size())) {
    if (hits.count++ == 0) hits.pos = p;
  }
  return hits;
}

bool blank(std::string_view s) { return text::trim(s).empty(); }

ParseOutcome failure(StructureFailure f) { return ParseOutcome{std::nullopt, f}; }

}  // namespace

ParseOutcome parse_structured_output(std::string_view raw, OutputMode mode) {
  const TagHits think_open = find_tag(raw, kThinkOpen);
  const TagHits think_close = find_tag(raw, kThinkClose);
  const TagHits answer_open = find_tag(raw, kAnswerOpen);
  const TagHits answer_close = find_tag(raw, kAnswerClose);

  for (const TagHits* t : {&think_open, &think_close, &answer_open, &answer_close}) {
    if (t->count > 1) return failure(StructureFailure::kDuplicateTag);
  }
  if (answer_open.count == 0 || answer_close.count == 0) {
    return failure(StructureFailure::kMissingTag);
  }
  const bool has_think = think_open.count == 1 || think_close.count == 1;
  if (has_think && (think_open.count == 0 || think_close.count == 0)) {
    return failure(StructureFailure::kMissingTag);
  }
  if (!has_think && mode == OutputMode::kThinkRequired) {
    return failure(StructureFailure::kMissingTag);
  }

  if (answer_close.pos < answer_open.pos) return failure(StructureFailure::kWrongOrder);
  const std::size_t answer_begin = answer_open.pos + kAnswerOpen.size();
  StructuredOutput out;
  out.answer = std::string(raw.substr(answer_begin, answer_close.pos - answer_begin));
  const std::string_view tail = raw.substr(answer_close.pos + kAnswerClose.size());

  if (!has_think) {
    if (!blank(raw.substr(0, answer_open.pos)) || !blank(tail)) {
      return failure(StructureFailure::kTrailingContent);
    }
    return ParseOutcome{std::move(out), StructureFailure::kNone};
  }

  if (!(think_open.pos < think_close.pos && think_close.pos < answer_open.pos)) {
    return failure(StructureFailure::kWrongOrder);
  }
  const std::size_t think_begin = think_open.pos + kThinkOpen.size();
  const std::size_t think_end = think_close.pos + kThinkClose.size();
  if (!blank(raw.substr(0, think_open.pos)) ||
      !blank(raw.substr(think_end, answer_open.pos - think_end)) || !blank(tail)) {
    return failure(StructureFailure::kTrailingContent);
  }
  out.think = std::string(raw.substr(think_begin, think_close.pos - think_begin));
  return ParseOutcome{std::move(out), StructureFailure::kNone};
}

std::string serialize_structured_output(const StructuredOutput& output) {
  std::string s;
  s.reserve(output.think.size() + output.answer.size() + 32);
  s.append(kThinkOpen).append(output.think).append(kThinkClose);
  s.append(kAnswerOpen).append(output.answer).append(kAnswerClose);
  return s;
}

}  // namespace writerl
