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

#include "writerl/synthetic.hpp"

#include <array>

#include "writerl/error.hpp"
#include "writerl/policy.hpp"

namespace writerl {

namespace {

constexpr std::array<std::string_view, 16> kSyllables = {
    "ka", "lo", "mi", "ren", "sa", "tor", "vel", "qu", "an", "is", "dra", "em", "ol", "pha",
    "ul", "zen"};
constexpr std::array<char, 10> kPunct = {',', ';', ':', '!', '?', '-', '"', '\'', '(', ')'};

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

std::size_t between(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return lo + pick(rng, hi - lo + 1);
}

}  // namespace

std::vector<double> default_hidden_weights() {
  return {0.6, 0.8, 2.5, -0.7, -3.0, 0.5, 1.5};
}

std::string synthetic_text(std::mt19937_64& rng) {
  const std::size_t vocab_size = between(rng, 4, 120);
  std::vector<std::string> vocab;
  vocab.reserve(vocab_size);
  const std::size_t max_syllables = between(rng, 1, 4);
  for (std::size_t i = 0; i < vocab_size; ++i) {
    std::string w;
    const std::size_t syl = between(rng, 1, max_syllables);
    for (std::size_t s = 0; s < syl; ++s) w += kSyllables[pick(rng, kSyllables.size())];
    vocab.push_back(std::move(w));
  }
  const std::size_t punct_kinds = between(rng, 0, kPunct.size());
  const std::size_t sentences = between(rng, 1, 24);
  const std::size_t sentence_len = between(rng, 3, 35);
  const double reuse = uniform01(rng) * 0.6;
  const std::size_t paragraph_every = between(rng, 1, 8);

  std::vector<std::string> written;
  std::string out;
  for (std::size_t s = 0; s < sentences; ++s) {
    std::string sentence;
    if (!written.empty() && uniform01(rng) < reuse) {
      sentence = written[pick(rng, written.size())];
    } else {
      const std::size_t len = between(rng, std::max<std::size_t>(2, sentence_len / 2), sentence_len);
      for (std::size_t w = 0; w < len; ++w) {
        if (w > 0) sentence += ' ';
        sentence += vocab[pick(rng, vocab.size())];
        if (punct_kinds > 0 && w + 1 < len && uniform01(rng) < 0.15) {
          sentence += kPunct[pick(rng, punct_kinds)];
        }
      }
      sentence[0] = static_cast<char>(sentence[0] - 'a' + 'A');
      sentence += '.';
      written.push_back(sentence);
    }
    if (!out.empty()) out += (s % paragraph_every == 0) ? "\n\n" : " ";
    out += sentence;
  }
  return out;
}

std::vector<PreferencePair> synthetic_preference_pairs(std::size_t n, std::uint64_t seed,
                                                       std::span<const double> hidden_weights) {
  WritingRM hidden;
  hidden.weights.assign(hidden_weights.begin(), hidden_weights.end());
  hidden.validate();
  constexpr std::array<std::string_view, 6> kPrompts = {
      "Write a short story about a lighthouse keeper.",
      "Write a blog post about learning to cook.",
      "Draft a letter to a future self.",
      "Write an essay on city gardens.",
      "Describe a winter morning in a mountain village.",
      "Write a product announcement for a new bicycle."};
  std::mt19937_64 rng(seed);
  std::vector<PreferencePair> pairs;
  pairs.reserve(n);
  while (pairs.size() < n) {
    const std::string prompt(kPrompts[pick(rng, kPrompts.size())]);
    std::string x = synthetic_text(rng);
    std::string y = synthetic_text(rng);
    const double sx = writing_rm_score(hidden, prompt, x);
    const double sy = writing_rm_score(hidden, prompt, y);
    if (sx == sy || x == y) continue;
    if (sx > sy) {
      pairs.push_back({prompt, std::move(x), std::move(y)});
    } else {
      pairs.push_back({prompt, std::move(y), std::move(x)});
    }
  }
  return pairs;
}

}  // namespace writerl
