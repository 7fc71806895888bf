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

#include "writerl/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "writerl/error.hpp"
#include "writerl/grpo.hpp"
#include "writerl/text.hpp"

namespace writerl {

void FormatPolicy::validate() const {
  if (shingle_k < 2) fail(ErrorCode::kInvalidArgument, "shingle_k must be >= 2");
  if (!(dup_threshold > 0.0 && dup_threshold <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "dup_threshold must lie in (0, 1]");
  }
  if (!(rep_weight >= 0.0)) fail(ErrorCode::kInvalidArgument, "rep_weight must be >= 0");
}

FormatPolicy format_policy_from(const TrainConfig& config) {
  return FormatPolicy{config.shingle_k, config.dup_threshold, config.rep_weight,
                      config.mode};
}

double length_reward(std::int64_t len, const LengthSpec& spec) {
  if (!spec.valid()) {
    fail(ErrorCode::kInvalidArgument,
         "invalid length spec [" + std::to_string(spec.lower) + ", " +
             std::to_string(spec.upper) + "] max " + std::to_string(spec.max));
  }
  if (len < 0 || len > spec.max) {
    fail(ErrorCode::kInvalidArgument,
         "length " + std::to_string(len) + " outside [0, " + std::to_string(spec.max) + "]");
  }
  if (len < spec.lower) {
    return static_cast<double>(len) / static_cast<double>(spec.lower);
  }
  if (len <= spec.upper) return 1.0;
  return static_cast<double>(spec.max - len) /
         static_cast<double>(spec.max - spec.upper);
}

namespace {

bool is_sentence_end(char32_t cp) {
  switch (cp) {
    case U'.':
    case U'!':
    case U'?':
    case U'。':
    case U'！':
    case U'？':
      return true;
    default:
      return false;
  }
}

std::u32string_view trim32(std::u32string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && text::is_space(s[b])) ++b;
  while (e > b && text::is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::vector<std::uint64_t> shingle_set(std::u32string_view s, int k) {
  std::vector<std::uint64_t> out;
  const auto ku = static_cast<std::size_t>(k);
  const std::size_t count = s.size() < ku ? 1 : s.size() - ku + 1;
  const std::size_t width = std::min(s.size(), ku);
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto piece = s.substr(i, width);
    out.push_back(text::fnv1a64(std::string_view(
        reinterpret_cast<const char*>(piece.data()), piece.size() * sizeof(char32_t))));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double jaccard_sorted(const std::vector<std::uint64_t>& a,
                      const std::vector<std::uint64_t>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t i = 0, j = 0, common = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++common;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return static_cast<double>(common) /
         static_cast<double>(a.size() + b.size() - common);
}

}  // namespace

std::vector<std::u32string> split_sentences(std::string_view utf8) {
  std::vector<std::u32string> sentences;
  const std::u32string cps = text::decode_utf8(utf8);
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    const auto piece = trim32(std::u32string_view(cps).substr(start, end - start));
    if (!piece.empty()) sentences.emplace_back(piece);
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (is_sentence_end(cps[i])) {
      flush(i);
      start = i + 1;
    }
  }
  flush(cps.size());
  return sentences;
}

double shingle_jaccard(std::u32string_view a, std::u32string_view b, int k) {
  return jaccard_sorted(shingle_set(a, k), shingle_set(b, k));
}

double repetition_fraction(std::string_view answer, const FormatPolicy& policy) {
  const auto sentences = split_sentences(answer);
  if (sentences.size() < 2) return 0.0;
  std::vector<std::vector<std::uint64_t>> shingles;
  shingles.reserve(sentences.size());
  for (const auto& s : sentences) shingles.push_back(shingle_set(s, policy.shingle_k));

  std::size_t duplicates = 0;
  for (std::size_t i = 1; i < shingles.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (jaccard_sorted(shingles[i], shingles[j]) >= policy.dup_threshold) {
        ++duplicates;
        break;
      }
    }
  }
  return static_cast<double>(duplicates) / static_cast<double>(sentences.size());
}

double format_reward(std::string_view raw, const FormatPolicy& policy) {
  const ParseOutcome parsed = parse_structured_output(raw, policy.mode);
  if (!parsed.ok()) return 0.0;
  const double rep = repetition_fraction(parsed.output->answer, policy);
  return std::max(0.0, 1.0 - policy.rep_weight * rep);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double bt_pair_loss(double chosen_score, double rejected_score) {
  const double margin = chosen_score - rejected_score;
  // softplus(-margin)
  if (margin > 0.0) return std::log1p(std::exp(-margin));
  return -margin + std::log1p(std::exp(margin));
}

std::vector<AdvantageVector> composite_advantages(std::span<const RewardVector> rewards,
                                                  StdMode std_mode) {
  const std::size_t g = rewards.size();
  std::vector<double> length(g), write(g), format(g);
  for (std::size_t i = 0; i < g; ++i) {
    if (!std::isfinite(rewards[i].length) || !std::isfinite(rewards[i].write) ||
        !std::isfinite(rewards[i].format)) {
      fail(ErrorCode::kInvalidArgument,
           "non-finite reward at sample " + std::to_string(i));
    }
    length[i] = rewards[i].length;
    write[i] = rewards[i].write;
    format[i] = rewards[i].format;
  }
  const auto a_len = group_normalize(length, std_mode);
  const auto a_write = group_normalize(write, std_mode);
  const auto a_fmt = group_normalize(format, std_mode);

  std::vector<AdvantageVector> out(g);
  for (std::size_t i = 0; i < g; ++i) {
    out[i].length = a_len[i];
    out[i].write = a_write[i];
    out[i].format = a_fmt[i];
    out[i].fused = (a_len[i] + a_write[i] + a_fmt[i]) / 3.0;
  }
  return out;
}

}  // namespace writerl
