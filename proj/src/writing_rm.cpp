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

#include "writerl/writing_rm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <unordered_set>

#include "writerl/core.hpp"
#include "writerl/error.hpp"
#include "writerl/rewards.hpp"
#include "writerl/text.hpp"

namespace writerl {

const std::array<std::string_view, kNumFeatures>& feature_names() {
  static const std::array<std::string_view, kNumFeatures> names = {
      "log_words",  "mean_word_len",  "type_token_ratio", "mean_sentence_len",
      "repetition", "log_paragraphs", "punct_diversity"};
  return names;
}

namespace {

bool is_punct(char32_t cp) {
  if (cp < 0x80) return std::ispunct(static_cast<int>(cp)) != 0;
  return text::is_cjk_punct(cp) || (cp >= 0x2010 && cp <= 0x2027);
}

std::size_t count_paragraphs(std::string_view answer) {
  std::size_t paragraphs = 0;
  bool in_paragraph = false;
  std::size_t pos = 0;
  while (pos <= answer.size()) {
    auto nl = answer.find('\n', pos);
    if (nl == std::string_view::npos) nl = answer.size();
    const bool blank = text::trim(answer.substr(pos, nl - pos)).empty();
    if (!blank && !in_paragraph) ++paragraphs;
    in_paragraph = !blank;
    pos = nl + 1;
  }
  return paragraphs;
}

}  // namespace

FeatureVector extract_features(std::string_view /*prompt*/, std::string_view answer) {
  FeatureVector f{};
  const std::u32string cps = text::decode_utf8(answer);

  std::vector<std::u32string> tokens;
  std::u32string current;
  std::set<char32_t> punct;
  for (char32_t cp : cps) {
    if (is_punct(cp)) punct.insert(cp);
    if (text::is_space(cp)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(cp < 0x80 ? static_cast<char32_t>(std::tolower(static_cast<int>(cp))) : cp);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));

  const double words = static_cast<double>(word_count(answer));
  f[0] = std::log1p(words);
  if (!tokens.empty()) {
    std::size_t chars = 0;
    std::set<std::u32string> types;
    for (const auto& t : tokens) {
      chars += t.size();
      types.insert(t);
    }
    f[1] = static_cast<double>(chars) / static_cast<double>(tokens.size()) / 5.0;
    f[2] = static_cast<double>(types.size()) / static_cast<double>(tokens.size());
  }
  const auto sentences = split_sentences(answer);
  if (!sentences.empty()) {
    f[3] = words / static_cast<double>(sentences.size()) / 20.0;
  }
  f[4] = repetition_fraction(answer, FormatPolicy{});
  f[5] = std::log1p(static_cast<double>(count_paragraphs(answer)));
  f[6] = static_cast<double>(punct.size()) / 10.0;
  return f;
}

void WritingRM::validate() const {
  if (weights.size() != kNumFeatures) {
    fail(ErrorCode::kInvalidArgument,
         "writing RM has " + std::to_string(weights.size()) + " weights, expected " +
             std::to_string(kNumFeatures));
  }
  for (double w : weights) {
    if (!std::isfinite(w)) fail(ErrorCode::kInvalidArgument, "writing RM weight is not finite");
  }
}

double writing_rm_score(const WritingRM& model, const FeatureVector& features) {
  double s = 0.0;
  for (std::size_t i = 0; i < kNumFeatures; ++i) s += model.weights[i] * features[i];
  return s;
}

double writing_rm_score(const WritingRM& model, std::string_view prompt,
                        std::string_view answer) {
  return writing_rm_score(model, extract_features(prompt, answer));
}

namespace {

using Diffs = std::vector<FeatureVector>;

double loss_of(const std::vector<double>& w, const Diffs& diffs) {
  double total = 0.0;
  for (const auto& d : diffs) {
    double margin = 0.0;
    for (std::size_t i = 0; i < kNumFeatures; ++i) margin += w[i] * d[i];
    total += bt_pair_loss(margin, 0.0);
  }
  return total / static_cast<double>(diffs.size());
}

std::vector<double> gradient_of(const std::vector<double>& w, const Diffs& diffs) {
  std::vector<double> g(kNumFeatures, 0.0);
  for (const auto& d : diffs) {
    double margin = 0.0;
    for (std::size_t i = 0; i < kNumFeatures; ++i) margin += w[i] * d[i];
    // d/dm of -log sigmoid(m) is -sigmoid(-m).
    const double coeff = -sigmoid(-margin);
    for (std::size_t i = 0; i < kNumFeatures; ++i) g[i] += coeff * d[i];
  }
  for (double& x : g) x /= static_cast<double>(diffs.size());
  return g;
}

WritingRM fit(const Diffs& diffs, const RmTrainOptions& options, RmTrainReport* report) {
  if (diffs.empty()) fail(ErrorCode::kInvalidArgument, "preference dataset is empty");
  if (!(options.learning_rate > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "learning rate must be > 0");
  }
  WritingRM model;
  std::vector<double>& w = model.weights;
  double loss = loss_of(w, diffs);
  if (!std::isfinite(loss)) fail(ErrorCode::kDivergence, "non-finite initial loss");
  RmTrainReport local;
  local.loss_history.push_back(loss);
  double lr = options.learning_rate;

  int epoch = 0;
  for (; epoch < options.epochs; ++epoch) {
    const auto g = gradient_of(w, diffs);
    const double gnorm2 = std::inner_product(g.begin(), g.end(), g.begin(), 0.0);
    if (!std::isfinite(gnorm2)) fail(ErrorCode::kDivergence, "non-finite gradient");
    if (gnorm2 == 0.0) break;

    std::vector<double> trial(kNumFeatures);
    double trial_loss = loss;
    bool accepted = false;
    for (int attempt = 0; attempt < 60; ++attempt) {
      for (std::size_t i = 0; i < kNumFeatures; ++i) trial[i] = w[i] - lr * g[i];
      trial_loss = loss_of(trial, diffs);
      if (!std::isfinite(trial_loss)) {
        fail(ErrorCode::kDivergence,
             "non-finite loss at epoch " + std::to_string(epoch) + "; lower the learning rate");
      }
      if (trial_loss <= loss) {
        accepted = true;
        break;
      }
      lr *= 0.5;
    }
    if (!accepted) break;
    const double improvement = loss - trial_loss;
    w = trial;
    loss = trial_loss;
    local.loss_history.push_back(loss);
    lr = std::min(lr * 1.1, options.max_learning_rate);
    if (improvement < options.tolerance) {
      ++epoch;
      break;
    }
  }
  local.epochs_run = epoch;
  local.final_loss = loss;
  if (report) *report = std::move(local);
  return model;
}

}  // namespace

WritingRM train_writing_rm(std::span<const FeatureVector> chosen,
                           std::span<const FeatureVector> rejected,
                           const RmTrainOptions& options, RmTrainReport* report) {
  if (chosen.size() != rejected.size()) {
    fail(ErrorCode::kInvalidArgument, "chosen/rejected feature counts differ");
  }
  Diffs diffs(chosen.size());
  for (std::size_t p = 0; p < chosen.size(); ++p) {
    for (std::size_t i = 0; i < kNumFeatures; ++i) diffs[p][i] = chosen[p][i] - rejected[p][i];
  }
  return fit(diffs, options, report);
}

WritingRM train_writing_rm(std::span<const PreferencePair> pairs,
                           const RmTrainOptions& options, RmTrainReport* report) {
  std::vector<FeatureVector> chosen, rejected;
  chosen.reserve(pairs.size());
  rejected.reserve(pairs.size());
  for (const auto& p : pairs) {
    chosen.push_back(extract_features(p.prompt, p.chosen));
    rejected.push_back(extract_features(p.prompt, p.rejected));
  }
  return train_writing_rm(chosen, rejected, options, report);
}

double mean_pair_loss(const WritingRM& model, std::span<const PreferencePair> pairs) {
  if (pairs.empty()) return 0.0;
  double total = 0.0;
  for (const auto& p : pairs) {
    total += bt_pair_loss(writing_rm_score(model, p.prompt, p.chosen),
                          writing_rm_score(model, p.prompt, p.rejected));
  }
  return total / static_cast<double>(pairs.size());
}

double pairwise_accuracy(const WritingRM& model, std::span<const PreferencePair> pairs) {
  if (pairs.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& p : pairs) {
    if (writing_rm_score(model, p.prompt, p.chosen) >
        writing_rm_score(model, p.prompt, p.rejected)) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

std::vector<std::pair<std::string, double>> top_weighted_features(const WritingRM& model,
                                                                  std::size_t n) {
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i = 0; i < kNumFeatures && i < model.weights.size(); ++i) {
    out.emplace_back(std::string(feature_names()[i]), model.weights[i]);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::fabs(a.second) > std::fabs(b.second);
  });
  if (out.size() > n) out.resize(n);
  return out;
}

nlohmann::json to_json(const WritingRM& model) {
  return nlohmann::json{{"feature_extractor_version", model.feature_extractor_version},
                        {"weights", model.weights}};
}

WritingRM writing_rm_from_json(const nlohmann::json& j) {
  WritingRM model;
  try {
    model.feature_extractor_version = j.at("feature_extractor_version").get<std::string>();
    model.weights = j.at("weights").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("malformed writing RM checkpoint: ") + e.what());
  }
  if (model.feature_extractor_version != kFeatureExtractorVersion) {
    fail(ErrorCode::kInvalidArgument,
         "writing RM feature extractor version '" + model.feature_extractor_version +
             "' does not match '" + std::string(kFeatureExtractorVersion) + "'");
  }
  model.validate();
  return model;
}

void save_writing_rm(const WritingRM& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << to_json(model).dump(2) << '\n';
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

WritingRM load_writing_rm(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  return writing_rm_from_json(j);
}

PreferenceDataset load_preference_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  PreferenceDataset data;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    PreferencePair pair;
    try {
      const auto j = nlohmann::json::parse(line);
      pair.prompt = j.at("prompt").get<std::string>();
      pair.chosen = j.at("chosen").get<std::string>();
      pair.rejected = j.at("rejected").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kParse,
           path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (pair.chosen == pair.rejected) {
      fail(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no) +
                                  ": chosen and rejected are identical");
    }
    const auto key = nlohmann::json{pair.prompt, pair.chosen, pair.rejected}.dump();
    if (!seen.insert(key).second) {
      ++data.duplicates_removed;
      continue;
    }
    data.pairs.push_back(std::move(pair));
  }
  return data;
}

void save_preference_pairs(std::span<const PreferencePair> pairs,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  for (const auto& p : pairs) {
    out << nlohmann::json{{"prompt", p.prompt}, {"chosen", p.chosen}, {"rejected", p.rejected}}
               .dump()
        << '\n';
  }
}

}  // namespace writerl
