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

// Reward channels for long-form generation: a piecewise length reward, a
// structure/repetition format reward, the Bradley-Terry pair loss used by
// the writing reward model, and advantage-level fusion of the channels.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "writerl/core.hpp"

namespace writerl {

struct FormatPolicy {
  int shingle_k = 8;
  double dup_threshold = 0.8;
  double rep_weight = 2.0;
  OutputMode mode = OutputMode::kThinkRequired;

  void validate() const;
};

FormatPolicy format_policy_from(const TrainConfig& config);

// 1 inside [lower, upper], len/lower below it, (max-len)/(max-upper) above it.
// Requires a valid spec and 0 <= len <= spec.max.
double length_reward(std::int64_t len, const LengthSpec& spec);

// Sentences split on . ! ? and their fullwidth forms. A sentence counts as a
// duplicate when its character k-shingle Jaccard similarity with any earlier
// sentence reaches dup_threshold. Returns duplicates / sentences, or 0 when
// there are fewer than two sentences.
double repetition_fraction(std::string_view answer, const FormatPolicy& policy);

std::vector<std::u32string> split_sentences(std::string_view text);
double shingle_jaccard(std::u32string_view a, std::u32string_view b, int k);

// 0 on a structure failure, else max(0, 1 - rep_weight * repetition).
double format_reward(std::string_view raw, const FormatPolicy& policy);

// -log sigmoid(chosen - rejected), evaluated without overflow.
double bt_pair_loss(double chosen_score, double rejected_score);
double sigmoid(double x);

// Rows are samples of one group, columns the length/write/format channels.
// Each channel is group-normalized independently, then averaged.
std::vector<AdvantageVector> composite_advantages(
    std::span<const RewardVector> rewards, StdMode std_mode = StdMode::kPopulation);

}  // namespace writerl
