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

// Linear writing-quality reward model trained with the Bradley-Terry pair
// loss over a fixed basis of hand-crafted text features.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace writerl {

inline constexpr std::string_view kFeatureExtractorVersion = "wrm-features-v1";
inline constexpr std::size_t kNumFeatures = 7;

using FeatureVector = std::array<double, kNumFeatures>;

// Feature basis, in order:
//   log_words          log(1 + word count)
//   mean_word_len      mean codepoints per whitespace token / 5
//   type_token_ratio   distinct lowercased tokens / tokens
//   mean_sentence_len  mean words per sentence / 20
//   repetition         repetition_fraction with k = 8, threshold 0.8
//   log_paragraphs     log(1 + blank-line separated paragraphs)
//   punct_diversity    distinct punctuation codepoints / 10
// The prompt is accepted for interface stability but unused by this basis.
const std::array<std::string_view, kNumFeatures>& feature_names();
FeatureVector extract_features(std::string_view prompt, std::string_view answer);

struct WritingRM {
  std::vector<double> weights = std::vector<double>(kNumFeatures, 0.0);
  std::string feature_extractor_version{kFeatureExtractorVersion};

  void validate() const;
};

double writing_rm_score(const WritingRM& model, std::string_view prompt,
                        std::string_view answer);
double writing_rm_score(const WritingRM& model, const FeatureVector& features);

struct PreferencePair {
  std::string prompt;
  std::string chosen;
  std::string rejected;

  friend bool operator==(const PreferencePair&, const PreferencePair&) = default;
};

struct RmTrainOptions {
  int epochs = 2000;
  double learning_rate = 1.0;
  double max_learning_rate = 64.0;
  // Stop once an accepted step improves the loss by less than this.
  double tolerance = 1e-12;
};

struct RmTrainReport {
  std::vector<double> loss_history;  // loss before each accepted epoch, plus final
  int epochs_run = 0;
  double final_loss = 0.0;
};

// Full-batch gradient descent on the mean pair loss starting from zero
// weights. Steps that would raise the loss are retried at half the learning
// rate, so loss_history is non-increasing. Throws on an empty dataset or a
// non-finite loss.
WritingRM train_writing_rm(std::span<const PreferencePair> pairs,
                           const RmTrainOptions& options = {},
                           RmTrainReport* report = nullptr);
WritingRM train_writing_rm(std::span<const FeatureVector> chosen,
                           std::span<const FeatureVector> rejected,
                           const RmTrainOptions& options = {},
                           RmTrainReport* report = nullptr);

double mean_pair_loss(const WritingRM& model, std::span<const PreferencePair> pairs);
// Fraction of pairs where the chosen response scores strictly higher.
double pairwise_accuracy(const WritingRM& model, std::span<const PreferencePair> pairs);

// Feature names sorted by descending |weight|; a diagnostic for keyword-like
// over-reliance on a single feature.
std::vector<std::pair<std::string, double>> top_weighted_features(const WritingRM& model,
                                                                  std::size_t n);

nlohmann::json to_json(const WritingRM& model);
WritingRM writing_rm_from_json(const nlohmann::json& j);
void save_writing_rm(const WritingRM& model, const std::filesystem::path& path);
// Rejects checkpoints whose feature_extractor_version differs from ours.
WritingRM load_writing_rm(const std::filesystem::path& path);

struct PreferenceDataset {
  std::vector<PreferencePair> pairs;
  std::size_t duplicates_removed = 0;
};

// JSON Lines with string fields prompt, chosen, rejected. Malformed lines
// raise Error(kParse) naming the 1-based line number; blank lines are skipped;
// exact duplicates are dropped and counted.
PreferenceDataset load_preference_pairs(const std::filesystem::path& path);
void save_preference_pairs(std::span<const PreferencePair> pairs,
                           const std::filesystem::path& path);

}  // namespace writerl
