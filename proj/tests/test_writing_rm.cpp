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

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "test_util.hpp"
#include "writerl/error.hpp"
#include "writerl/synthetic.hpp"
#include "writerl/writing_rm.hpp"

using namespace writerl;
using writerl::testing::TempDir;
using writerl::testing::write_file;

namespace {

double hidden_score(const std::vector<double>& w, const PreferencePair& p, bool chosen) {
  const auto f = extract_features(p.prompt, chosen ? p.chosen : p.rejected);
  return std::inner_product(f.begin(), f.end(), w.begin(), 0.0);
}

}  // namespace

TEST_SUITE("writing_rm") {
  TEST_CASE("synthetic pairs agree with the hidden scorer") {
    const auto w = default_hidden_weights();
    const auto pairs = synthetic_preference_pairs(200, 1, w);
    REQUIRE(pairs.size() == 200);
    for (const auto& p : pairs) CHECK(hidden_score(w, p, true) > hidden_score(w, p, false));
  }

  TEST_CASE("trained model recovers held-out preferences") {
    const auto w = default_hidden_weights();
    const auto train = synthetic_preference_pairs(1000, 10, w);
    const auto held = synthetic_preference_pairs(200, 11, w);
    RmTrainReport report;
    const WritingRM m = train_writing_rm(train, {}, &report);
    CHECK(pairwise_accuracy(m, held) >= 0.95);
    CHECK(report.final_loss < report.loss_history.front());
    for (std::size_t i = 1; i < report.loss_history.size(); ++i) {
      CHECK(report.loss_history[i] <= report.loss_history[i - 1]);
    }
  }

  TEST_CASE("single pair is driven to a small loss") {
    PreferencePair p{"Write a note.", "A calm clear note. It has two sentences.",
                     "note note note note note note"};
    RmTrainOptions opt;
    opt.epochs = 5000;
    const std::vector<PreferencePair> pairs = {p};
    const WritingRM m = train_writing_rm(pairs, opt);
    CHECK(mean_pair_loss(m, pairs) < 0.01);
  }

  TEST_CASE("clone pairs leave weights at zero") {
    std::vector<FeatureVector> a(10), b;
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t k = 0; k < kNumFeatures; ++k) a[i][k] = 0.1 * static_cast<double>(i + k);
    }
    b = a;
    const WritingRM m = train_writing_rm(a, b);
    for (double x : m.weights) CHECK(x == 0.0);
  }

  TEST_CASE("scoring is deterministic and zero for zero weights") {
    WritingRM zero;
    CHECK(writing_rm_score(zero, "p", "Some answer text. Another line.") == 0.0);
    WritingRM m;
    m.weights = default_hidden_weights();
    const double s1 = writing_rm_score(m, "Write", "Some answer text. Another line.");
    const double s2 = writing_rm_score(m, "Write", "Some answer text. Another line.");
    CHECK(s1 == s2);
  }

  TEST_CASE("json round trip and version check") {
    TempDir dir;
    WritingRM m;
    m.weights = default_hidden_weights();
    save_writing_rm(m, dir / "rm.json");
    const WritingRM back = load_writing_rm(dir / "rm.json");
    CHECK(back.weights == m.weights);

    auto j = to_json(m);
    j["feature_extractor_version"] = "wrm-features-v0";
    CHECK_THROWS_AS(writing_rm_from_json(j), Error);
    auto short_w = to_json(m);
    short_w["weights"] = std::vector<double>{1.0, 2.0};
    CHECK_THROWS_AS(writing_rm_from_json(short_w), Error);
    write_file(dir / "bad.json", "{not json");
    CHECK_THROWS_AS(load_writing_rm(dir / "bad.json"), Error);
  }

  TEST_CASE("preference loader dedupes and reports line numbers") {
    TempDir dir;
    const std::string row = R"({"prompt": "p", "chosen": "good", "rejected": "bad"})";
    write_file(dir / "pairs.jsonl", row + "\n" + row + "\n\n" +
                                        R"({"prompt": "q", "chosen": "a", "rejected": "b"})" + "\n");
    const auto data = load_preference_pairs(dir / "pairs.jsonl");
    CHECK(data.pairs.size() == 2);
    CHECK(data.duplicates_removed == 1);

    write_file(dir / "broken.jsonl", row + "\n{\"prompt\": 1}\n");
    try {
      load_preference_pairs(dir / "broken.jsonl");
      FAIL("expected parse error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kParse);
      CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }

    write_file(dir / "same.jsonl", R"({"prompt": "p", "chosen": "x", "rejected": "x"})" "\n");
    CHECK_THROWS_AS(load_preference_pairs(dir / "same.jsonl"), Error);
  }

  TEST_CASE("saved pairs reload unchanged") {
    TempDir dir;
    const auto pairs = synthetic_preference_pairs(20, 4, default_hidden_weights());
    save_preference_pairs(pairs, dir / "p.jsonl");
    CHECK(load_preference_pairs(dir / "p.jsonl").pairs == pairs);
  }

  TEST_CASE("top features sorted by magnitude") {
    WritingRM m;
    m.weights = {0.1, -5.0, 2.0, 0.0, 0.0, 0.0, 3.0};
    const auto top = top_weighted_features(m, 3);
    REQUIRE(top.size() == 3);
    CHECK(top[0].second == -5.0);
    CHECK(top[1].second == 3.0);
    CHECK(top[2].second == 2.0);
  }
}
