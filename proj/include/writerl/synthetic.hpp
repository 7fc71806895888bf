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

// Synthetic preference data: random texts with varied surface statistics,
// labelled by a hidden linear scorer over the writing-RM feature basis.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "writerl/writing_rm.hpp"

namespace writerl {

// Weights of the hidden scorer used by `writerl gen-pairs`.
std::vector<double> default_hidden_weights();

// Random prose-shaped text: pseudo-words grouped into sentences and
// paragraphs, with random vocabulary size, punctuation and sentence reuse.
std::string synthetic_text(std::mt19937_64& rng);

// `n` pairs over a small prompt pool. For each pair the text with the higher
// hidden score is `chosen`; exact score ties are redrawn. Deterministic in
// `seed`.
std::vector<PreferencePair> synthetic_preference_pairs(std::size_t n, std::uint64_t seed,
                                                       std::span<const double> hidden_weights);

}  // namespace writerl
