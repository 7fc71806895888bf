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
#include <random>
#include <vector>

#include "test_util.hpp"
#include "writerl/error.hpp"
#include "writerl/policy.hpp"
#include "writerl/text.hpp"

using namespace writerl;
using writerl::testing::TempDir;

namespace {

constexpr double kMasked = -1e300;

Trajectory make_traj(std::vector<TokenId> tokens) {
  Trajectory t;
  t.prompt_id = "p";
  t.tokens = std::move(tokens);
  return t;
}

// Finite-difference derivative of sequence_logprob with respect to one logit.
double fd_logprob(ToyPolicy p, const Trajectory& t, const ContextKey& ctx, std::size_t v,
                  double temp) {
  const double h = 1e-6;
  const double base = p.mutable_row(ctx)[v];
  p.mutable_row(ctx)[v] = base + h;
  const double up = sequence_logprob(p, t, temp);
  p.mutable_row(ctx)[v] = base - h;
  const double down = sequence_logprob(p, t, temp);
  return (up - down) / (2 * h);
}

ToyPolicy random_policy(std::uint64_t seed, int words) {
  ToyPolicy p(ToyPolicy::default_words(words));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  ContextKey ctx = p.start_context("p");
  for (auto& x : p.mutable_row(ctx)) x = n(rng);
  for (TokenId id = 0; id < static_cast<TokenId>(p.vocab_size()); ++id) {
    for (auto& x : p.mutable_row(p.advance(ctx, id))) x = n(rng);
  }
  return p;
}

}  // namespace

TEST_SUITE("policy") {
  TEST_CASE("vocabulary layout") {
    ToyPolicy p(ToyPolicy::default_words(3));
    CHECK(p.vocab_size() == 8);
    CHECK(p.vocab()[0] == "<think>");
    CHECK(p.vocab()[4] == "<eos>");
    CHECK(p.token_id("</answer>") == 3);
    CHECK(p.is_word(5));
    CHECK_FALSE(p.is_word(4));
  }

  TEST_CASE("softmax sums to one and respects temperature") {
    const std::vector<double> l = {1.0, 2.0, -3.0, 0.5};
    for (double t : {0.1, 0.8, 1.0, 5.0}) {
      const auto p = softmax(l, t);
      double s = 0.0;
      for (double x : p) s += x;
      CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
    }
    const auto sharp = softmax(l, 0.1);
    CHECK(sharp[1] > 0.99);
    const auto big = softmax(std::vector<double>{1000.0, 0.0}, 1.0);
    CHECK(big[0] == 1.0);
  }

  TEST_CASE("nucleus keeps the smallest prefix") {
    const auto r = nucleus(std::vector<double>{0.6, 0.3, 0.1}, 0.5);
    CHECK(r[0] == 1.0);
    CHECK(r[1] == 0.0);
    CHECK(r[2] == 0.0);
    const auto two = nucleus(std::vector<double>{0.3, 0.6, 0.1}, 0.8);
    CHECK(two[0] == doctest::Approx(1.0 / 3.0));
    CHECK(two[1] == doctest::Approx(2.0 / 3.0));
    CHECK(two[2] == 0.0);
    const auto all = nucleus(std::vector<double>{0.6, 0.3, 0.1}, 1.0);
    CHECK(all[2] == doctest::Approx(0.1));
  }

  TEST_CASE("first token frequencies follow the full softmax at top_p 1") {
    ToyPolicy p(ToyPolicy::default_words(2));
    auto& row = p.mutable_row(p.start_context("p"));
    row = {0.5, -1.0, 0.0, 0.2, 1.0, -0.3, 0.7};
    const auto probs = softmax(row, 0.8);
    SampleOptions opt;
    opt.max_tokens = 1;
    PromptSpec prompt{"p", "", std::nullopt};
    std::mt19937_64 rng(42);
    std::vector<double> counts(p.vocab_size(), 0.0);
    const int n = 40000;
    for (int i = 0; i < n; ++i) counts[sample(p, prompt, opt, rng).tokens[0]] += 1.0;
    for (std::size_t v = 0; v < counts.size(); ++v) {
      const double sd = std::sqrt(probs[v] * (1 - probs[v]) / n);
      CHECK(std::fabs(counts[v] / n - probs[v]) < 5 * sd + 1e-12);
    }
  }

  TEST_CASE("greedy decoding is deterministic") {
    ToyPolicy p = random_policy(9, 4);
    SampleOptions opt;
    opt.temperature = 0.0;
    opt.max_tokens = 30;
    PromptSpec prompt{"p", "", std::nullopt};
    std::mt19937_64 r1(1), r2(999);
    CHECK(sample(p, prompt, opt, r1).tokens == sample(p, prompt, opt, r2).tokens);
  }

  TEST_CASE("seeded sampling is reproducible") {
    ToyPolicy p = random_policy(2, 6);
    SampleOptions opt;
    opt.max_tokens = 50;
    PromptSpec prompt{"p", "", std::nullopt};
    std::mt19937_64 r1(77), r2(77);
    const auto a = sample(p, prompt, opt, r1);
    const auto b = sample(p, prompt, opt, r2);
    CHECK(a.tokens == b.tokens);
    CHECK(a.logp_behavior == b.logp_behavior);
    CHECK(a.raw_text == b.raw_text);
  }

  TEST_CASE("truncation and finalization") {
    ToyPolicy p(ToyPolicy::default_words(2));
    auto t = make_traj({0, 5, 1, 2, 6, 5, 3, 4});
    finalize_trajectory(p, t, OutputMode::kThinkRequired);
    REQUIRE(t.answer.has_value());
    CHECK(t.word_len == 2);
    CHECK(text::trim(t.think.value()) == p.vocab()[5]);
  }

  TEST_CASE("deterministic row has zero logprob and zero gradient") {
    ToyPolicy p(ToyPolicy::default_words(1));
    auto& row = p.mutable_row(p.start_context("p"));
    std::fill(row.begin(), row.end(), kMasked);
    row[4] = 0.0;
    const auto t = make_traj({4});
    CHECK(sequence_logprob(p, t, 1.0) == 0.0);
    const auto g = logprob_gradient(p, t, 1.0);
    for (const auto& [ctx, gr] : g) {
      for (double x : gr) CHECK(x == 0.0);
    }
  }

  TEST_CASE("uniform four-way rows") {
    ToyPolicy p(ToyPolicy::default_words(1));
    const ContextKey s = p.start_context("p");
    // Mask <eos> and the word in every visited row so each row is uniform over four tokens.
    for (const ContextKey& c : {s, p.advance(s, 0), p.advance(p.advance(s, 0), 1)}) {
      p.mutable_row(c)[4] = kMasked;
      p.mutable_row(c)[5] = kMasked;
    }
    const auto t = make_traj({0, 1, 2});
    CHECK(sequence_logprob(p, t, 1.0) == doctest::Approx(3.0 * std::log(0.25)).epsilon(1e-14));
    CHECK(sequence_logprob(p, t, 1.0) == doctest::Approx(-4.158883).epsilon(1e-6));

    const auto g = logprob_gradient(p, make_traj({2}), 1.0);
    const auto& row = g.at(s);
    CHECK(row[2] == doctest::Approx(0.75));
    CHECK(row[0] == doctest::Approx(-0.25));
    CHECK(row[1] == doctest::Approx(-0.25));
    CHECK(row[3] == doctest::Approx(-0.25));
    CHECK(row[4] == 0.0);
    CHECK(row[5] == 0.0);
  }

  TEST_CASE("logprob gradient matches finite differences") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const ToyPolicy p = random_policy(seed, 3);
      const auto t = make_traj({0, 5, 5, 1, 2, 6, 3, 4});
      for (double temp : {1.0, 0.8}) {
        const auto g = logprob_gradient(p, t, temp);
        for (const auto& [ctx, row] : g) {
          for (std::size_t v = 0; v < row.size(); ++v) {
            const double fd = fd_logprob(p, t, ctx, v, temp);
            CHECK(std::fabs(row[v] - fd) < 1e-6 * std::max(1.0, std::fabs(fd)));
          }
        }
      }
    }
  }

  TEST_CASE("updates") {
    const ToyPolicy p = random_policy(4, 3);
    const auto t = make_traj({0, 5, 1, 2, 7, 3, 4});
    const auto g = logprob_gradient(p, t, 1.0);
    CHECK(apply_update(p, g, 0.0) == p);

    const ToyPolicy back = apply_update(apply_update(p, g, 0.3), g, -0.3);
    for (const auto& [ctx, row] : p.rows()) {
      const auto other = back.row(ctx);
      for (std::size_t v = 0; v < row.size(); ++v) CHECK(std::fabs(row[v] - other[v]) < 1e-15);
    }
  }

  TEST_CASE("gradient ascent raises sequence logprob") {
    ToyPolicy p(ToyPolicy::default_words(2));
    const auto t = make_traj({5, 6, 4});
    const double start = sequence_logprob(p, t, 1.0);
    double prev = start;
    for (int i = 0; i < 200; ++i) {
      apply_update_in_place(p, logprob_gradient(p, t, 1.0), 0.5);
      const double now = sequence_logprob(p, t, 1.0);
      CHECK(now > prev);
      prev = now;
    }
    CHECK(prev < 0.0);
    CHECK(prev > start / 10);
  }

  TEST_CASE("checkpoint round-trips exactly") {
    TempDir dir;
    const ToyPolicy p = random_policy(8, 5);
    save_policy(p, dir / "p.json");
    CHECK(load_policy(dir / "p.json") == p);
    CHECK(policy_from_json(to_json(p)) == p);
  }

  TEST_CASE("initial policies") {
    TrainConfig c;
    c.vocab_words = 10;
    for (auto init : {PolicyInit::kUniform, PolicyInit::kGrammar, PolicyInit::kChain}) {
      c.init = init;
      const ToyPolicy p = make_initial_policy(c);
      CHECK(p.vocab_size() == 15);
    }
  }

  TEST_CASE("bad tokens are rejected") {
    ToyPolicy p(ToyPolicy::default_words(1));
    CHECK_THROWS_AS(sequence_logprob(p, make_traj({9}), 1.0), Error);
  }
}
