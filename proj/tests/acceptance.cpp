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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "test_util.hpp"
#include "writerl/arena.hpp"
#include "writerl/commands.hpp"
#include "writerl/grpo.hpp"
#include "writerl/judge.hpp"
#include "writerl/policy.hpp"
#include "writerl/rewards.hpp"
#include "writerl/synthetic.hpp"
#include "writerl/writing_rm.hpp"

using namespace writerl;
using writerl::testing::read_file;
using writerl::testing::TempDir;
using writerl::testing::write_file;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const fs::path kSource = WRITERL_SOURCE_DIR;

struct Result {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// 1. Group normalization moments.
Result normalization() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  double worst_mean = 0.0, worst_std = 0.0;
  bool zero_ok = true;
  for (int g = 0; g < 1000; ++g) {
    std::vector<double> r(32);
    const double s = scale(rng), shift = n(rng) * 100;
    for (auto& x : r) x = shift + s * n(rng);
    if (g % 10 == 0) std::fill(r.begin(), r.end(), shift);
    const auto a = group_normalize(r);
    if (g % 10 == 0) {
      zero_ok = zero_ok && std::all_of(a.begin(), a.end(), [](double x) { return x == 0.0; });
      continue;
    }
    const double mean = std::accumulate(a.begin(), a.end(), 0.0) / 32.0;
    double var = 0.0;
    for (double x : a) var += (x - mean) * (x - mean);
    worst_mean = std::max(worst_mean, std::fabs(mean));
    worst_std = std::max(worst_std, std::fabs(std::sqrt(var / 32.0) - 1.0));
  }
  const double secs = seconds_since(t0);
  return {worst_mean < 1e-9 && worst_std < 1e-6 && zero_ok && secs < 1.0,
          fmt::format("max|mean|={:.2e} max|std-1|={:.2e} zero-var ok={} {:.3f}s", worst_mean,
                      worst_std, zero_ok, secs)};
}

// 2. Fused advantages invariant to per-channel affine maps.
Result affine_invariance() {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RewardVector> r(16);
    for (auto& v : r) v = {u(rng), u(rng) * 3 - 1, u(rng) < 0.3 ? 0.0 : u(rng)};
    const auto base = composite_advantages(r);
    for (int ch = 0; ch < 3; ++ch) {
      for (double a : {0.01, 1.0, 100.0}) {
        for (double b : {-5.0, 0.0, 5.0}) {
          auto m = r;
          for (auto& v : m) {
            double& x = ch == 0 ? v.length : ch == 1 ? v.write : v.format;
            x = a * x + b;
          }
          const auto adv = composite_advantages(m);
          for (std::size_t i = 0; i < r.size(); ++i) {
            worst = std::max(worst, std::fabs(adv[i].fused - base[i].fused));
          }
        }
      }
    }
  }
  return {worst <= 1e-9, fmt::format("max fused change {:.2e}", worst)};
}

// 3. Clipped objective.
Result clipped_objective() {
  double err = 0.0;
  err = std::max(err, std::fabs(clipped_surrogate(1.5, 1.0, 0.2) - 1.2));
  err = std::max(err, std::fabs(clipped_surrogate(0.5, -1.0, 0.2) + 0.8));
  for (double a : {-2.5, -0.3, 0.0, 0.37, 4.0}) {
    for (double eps : {0.1, 0.2, 0.5}) err = std::max(err, std::fabs(clipped_surrogate(1.0, a, eps) - a));
  }
  TrainConfig c;
  c.vocab_words = 8;
  c.init = PolicyInit::kChain;
  const ToyPolicy p = make_initial_policy(c);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_obj = 0.0;
  for (int b = 0; b < 20; ++b) {
    GroupBatch batch;
    batch.prompt = {"p", "", std::nullopt};
    SampleOptions opt;
    opt.max_tokens = 40;
    std::vector<RewardVector> r(16);
    for (auto& v : r) {
      batch.trajectories.push_back(sample(p, batch.prompt, opt, rng));
      v = {u(rng), u(rng), u(rng)};
    }
    batch.advantages = composite_advantages(r);
    worst_obj = std::max(worst_obj, std::fabs(grpo_objective(batch, 0.2, 0.0)));
  }
  return {err <= 1e-12 && worst_obj <= 1e-9,
          fmt::format("closed-form err {:.2e}, |J(theta_old)| max {:.2e}", err, worst_obj)};
}

// 4. Analytic gradient against central differences.
Result gradient_check() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst = 0.0;
  int max_contexts = 0, max_vocab = 0;
  for (int k = 0; k < 50; ++k) {
    const int words = 1 + static_cast<int>(rng() % 5);  // V = 6..10
    ToyPolicy behavior(ToyPolicy::default_words(words));
    const ContextKey s = behavior.start_context("p");
    for (auto& x : behavior.mutable_row(s)) x = n(rng);
    for (TokenId id = 0; id < static_cast<TokenId>(behavior.vocab_size()); ++id) {
      for (auto& x : behavior.mutable_row(behavior.advance(s, id))) x = n(rng);
    }
    max_contexts = std::max<int>(max_contexts, static_cast<int>(behavior.rows().size()));
    max_vocab = std::max<int>(max_vocab, static_cast<int>(behavior.vocab_size()));

    const double temp = k % 3 == 0 ? 1.0 : 0.8;
    const double beta = k % 2 == 0 ? 0.0 : 0.05;
    SampleOptions opt;
    opt.temperature = temp;
    opt.max_tokens = 8;
    GroupBatch batch;
    batch.prompt = {"p", "", std::nullopt};
    std::vector<RewardVector> r(6);
    for (auto& v : r) {
      auto t = sample(behavior, batch.prompt, opt, rng);
      t.logp_ref = token_logprobs(behavior, t, temp);
      batch.trajectories.push_back(std::move(t));
      v = {n(rng), n(rng), n(rng)};
    }
    batch.advantages = composite_advantages(r);
    const std::vector<GroupBatch> batches = {batch};

    ToyPolicy p = behavior;
    for (auto& [ctx, row] : behavior.rows()) {
      for (std::size_t v = 0; v < row.size(); ++v) p.mutable_row(ctx)[v] += 0.05 * n(rng);
    }
    const auto eval = evaluate_objective(p, batches, 0.2, beta, temp);
    double num = 0.0, den = 0.0;
    for (const auto& [ctx, row] : p.rows()) {
      const auto it = eval.gradient.find(ctx);
      for (std::size_t v = 0; v < row.size(); ++v) {
        const double h = 1e-5;
        ToyPolicy up = p, down = p;
        up.mutable_row(ctx)[v] += h;
        down.mutable_row(ctx)[v] -= h;
        const double fd = (evaluate_objective(up, batches, 0.2, beta, temp).objective -
                           evaluate_objective(down, batches, 0.2, beta, temp).objective) /
                          (2 * h);
        const double an = it == eval.gradient.end() ? 0.0 : it->second[v];
        num += (an - fd) * (an - fd);
        den += fd * fd;
      }
    }
    const double rel = std::sqrt(num) / std::max(std::sqrt(den), 1e-8);
    worst = std::max(worst, rel);
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 30.0 && max_vocab <= 10 && max_contexts <= 20,
          fmt::format("worst relative error {:.2e} (V<={}, contexts<={}) {:.2f}s", worst,
                      max_vocab, max_contexts, secs)};
}

// 5. Length reward against a direct piecewise oracle.
Result length_exhaustive() {
  const LengthSpec s{2700, 3300, 13000};
  std::int64_t mismatches = 0;
  for (std::int64_t len = 0; len <= s.max; ++len) {
    double want;
    if (len < s.lower) {
      want = static_cast<double>(len) / static_cast<double>(s.lower);
    } else if (len <= s.upper) {
      want = 1.0;
    } else {
      want = static_cast<double>(s.max - len) / static_cast<double>(s.max - s.upper);
    }
    if (length_reward(len, s) != want) ++mismatches;
  }
  return {mismatches == 0, fmt::format("{} mismatches over {} lengths", mismatches, s.max + 1)};
}

std::vector<nlohmann::json> read_log(const fs::path& path) {
  std::vector<nlohmann::json> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

// 6. Demo training run.
Result training_dynamics() {
  TempDir dir;
  const auto t0 = Clock::now();
  const int code = cmd_train({kSource / "configs/demo.conf", dir / "run", "none", {}});
  const double secs = seconds_since(t0);
  if (code != kExitOk) return {false, fmt::format("cmd_train exit {}", code)};
  const auto log = read_log(dir / "run/train_log.jsonl");
  if (log.size() < 40) return {false, "log too short"};
  const TrainConfig cfg = load_config(kSource / "configs/demo.conf");
  const std::size_t window = 20;
  auto avg = [&](const char* key, std::size_t from, std::size_t to) {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = from; i < to; ++i) {
      if (log[i][key].is_null()) continue;
      s += log[i][key].get<double>();
      ++n;
    }
    return n == 0 ? NAN : s / static_cast<double>(n);
  };
  const std::size_t last = log.size();
  const double first_len = log[0]["length_rm_mean"].get<double>();
  const double early_len = avg("length_rm_mean", 0, window);
  const double final_len = avg("length_rm_mean", last - window, last);
  const double final_fmt = avg("format_compliance_rate", last - window, last);
  const double final_nol = avg("mean_nonoverlong_len", last - window, last);
  const bool setup = cfg.group_size == 16 && cfg.batch_prompts == 8 && cfg.order == 1 &&
                     cfg.seed == 0 && cfg.steps <= 2000 &&
                     cfg.vocab_words + 5 >= 15 && cfg.vocab_words + 5 <= 25;
  const bool pass = setup && first_len < 0.5 && final_len >= 0.9 && final_fmt >= 0.95 &&
                    final_nol >= 40.0 && final_nol <= 60.0 && secs < 120.0;
  return {pass, fmt::format("length reward {:.3f} (step 1), {:.3f} (first {}) -> {:.3f} (last {}); "
                            "compliance {:.3f}; non-overlong len {:.1f}; {} steps in {:.1f}s",
                            first_len, early_len, window, final_len, window, final_fmt,
                            final_nol, log.size(), secs)};
}

// 7. Bradley-Terry writing RM.
Result writing_rm() {
  const auto w = default_hidden_weights();
  const auto train = synthetic_preference_pairs(1000, 70, w);
  const auto held = synthetic_preference_pairs(200, 71, w);
  const WritingRM m = train_writing_rm(train);
  const double acc = pairwise_accuracy(m, held);
  const double e1 = std::fabs(bt_pair_loss(0.7, 0.7) - std::log(2.0));
  const double e2 = std::fabs(bt_pair_loss(std::log(3.0), 0.0) - std::log(4.0 / 3.0));
  return {acc >= 0.95 && e1 <= 1e-9 && e2 <= 1e-9,
          fmt::format("held-out accuracy {:.3f}; spot errors {:.1e} {:.1e}", acc, e1, e2)};
}

// 8. Elo fitting and order-swap aggregation.
Result elo_harness() {
  std::vector<Game> two;
  for (int i = 0; i < 640; ++i) two.push_back({"A", "B", 1.0});
  for (int i = 0; i < 360; ++i) two.push_back({"A", "B", 0.0});
  std::map<std::string, double> r2;
  for (const auto& r : fit_elo(two).ratings) r2[r.model] = r.elo;
  const double gap = r2["A"] - r2["B"];

  const std::vector<double> truth = {700, 800, 900, 1000, 1100, 1200};
  std::mt19937_64 rng(8);
  std::vector<Game> ladder;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (std::size_t j = i + 1; j < truth.size(); ++j) {
      std::bernoulli_distribution d(elo_expected(truth[i], truth[j]));
      for (int k = 0; k < 2000; ++k) {
        ladder.push_back({"m" + std::to_string(i), "m" + std::to_string(j), d(rng) ? 1.0 : 0.0});
      }
    }
  }
  const auto fit = fit_elo(ladder);
  bool order_ok = fit.ratings.size() == truth.size();
  std::map<std::string, double> rl;
  for (std::size_t k = 0; k < fit.ratings.size(); ++k) {
    rl[fit.ratings[k].model] = fit.ratings[k].elo;
    order_ok = order_ok && fit.ratings[k].model == "m" + std::to_string(truth.size() - 1 - k);
  }
  double worst_gap = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (std::size_t j = i + 1; j < truth.size(); ++j) {
      const double got = rl["m" + std::to_string(j)] - rl["m" + std::to_string(i)];
      worst_gap = std::max(worst_gap, std::fabs(got - (truth[j] - truth[i])));
    }
  }

  // Every (candidate wins one order, loses the other) construction must tie.
  int cases = 0, ties = 0;
  const Verdict a_wins[] = {Verdict::kAMuchBetter, Verdict::kABetter};
  const Verdict b_wins[] = {Verdict::kBBetter, Verdict::kBMuchBetter};
  for (Verdict f : a_wins) {
    for (Verdict s : a_wins) {
      // forward: candidate is A and wins; swapped: candidate is B and loses.
      ++cases;
      ties += aggregate_pair(f, s) == Outcome::kTie;
    }
  }
  for (Verdict f : b_wins) {
    for (Verdict s : b_wins) {
      ++cases;
      ties += aggregate_pair(f, s) == Outcome::kTie;
    }
  }
  const bool pass = std::fabs(gap - 100.0) <= 5.0 && order_ok && worst_gap <= 15.0 && ties == cases;
  return {pass, fmt::format("two-model gap {:.2f}; ladder order {} worst gap error {:.2f}; "
                            "win/loss->tie {}/{}",
                            gap, order_ok ? "exact" : "WRONG", worst_gap, ties, cases)};
}

// 9. Mock judge scripted with the examples embedded in the judge prompts.
Result protocol_fidelity() {
  auto judge = make_judge("mock:" + (kSource / "data/mock_judge_examples.jsonl").string());
  using Range = std::pair<std::int64_t, std::int64_t>;
  int ok = 0, total = 0;
  auto check = [&](bool b) {
    ++total;
    ok += b;
  };
  const auto weibo = judge->classify_writing_task(
      "Write a Weibo post titled “Tips for Preparing for College Final Exams.”");
  check(weibo.writing && weibo.range == Range{0, 300});
  const auto tr = judge->classify_writing_task("Translate “Seize the day” into Spanish.");
  check(!tr.writing && !tr.range);
  const auto plan = judge->classify_writing_task(
      "Draft a comprehensive 10-page business plan for a new cat-litter product.");
  check(plan.writing && plan.range == Range{4000, 6000});
  const auto essay = judge->predict_length_range("Write a high school essay");
  check(essay.spec && essay.spec->lower == 800 && essay.spec->upper == 1000);
  const auto green = judge->predict_length_range("Complete an academic paper on green cities");
  check(green.spec && green.spec->lower == 6000 && green.spec->upper == 10000);
  const auto paper = judge->predict_length_range("Read and analyze this paper");
  check(paper.unfulfillable && !paper.spec);

  int verdicts = 0;
  for (Verdict v : kAllVerdicts) {
    const std::string reply = "Reasoning first. My final verdict is: " +
                              std::string(verdict_token(v));
    verdicts += parse_verdict(reply) == v && parse_verdict(verdict_token(v)) == v;
  }
  if (parse_verdict("My final verdict is tie: [[A=B]]") != Verdict::kTie) verdicts = 0;
  return {ok == total && verdicts == 5,
          fmt::format("{}/{} judge examples, {}/5 verdict forms", ok, total, verdicts)};
}

// 10. Byte-identical logs across runs.
Result determinism() {
  TempDir dir;
  write_file(dir / "prompts.jsonl",
             R"({"id": "n1", "prompt": "Write a short note to a neighbour."})" "\n"
             R"({"id": "n2", "prompt": "Write a short poem about rain."})" "\n");
  std::string script;
  for (const char* q : {"Write a short note to a neighbour.", "Write a short poem about rain."}) {
    script += nlohmann::json{{"kind", "length"}, {"query", q}, {"reply", "{\"range\": [0, 100]}"}}
                  .dump() +
              "\n";
  }
  write_file(dir / "mock.jsonl", script);
  const std::string judge = "mock:" + (dir / "mock.jsonl").string();
  const std::vector<std::pair<std::string, std::string>> ov = {
      {"prompts", (dir / "prompts.jsonl").string()}, {"steps", "60"}, {"batch_prompts", "2"}};
  const int c1 = cmd_train({kSource / "configs/demo.conf", dir / "a", judge, ov});
  auto ov4 = ov;
  ov4.emplace_back("threads", "4");
  const int c2 = cmd_train({kSource / "configs/demo.conf", dir / "b", judge, ov4});
  if (c1 != kExitOk || c2 != kExitOk) return {false, fmt::format("exit codes {} {}", c1, c2)};
  const std::string la = read_file(dir / "a/train_log.jsonl");
  const std::string lb = read_file(dir / "b/train_log.jsonl");
  const std::string ca = read_file(dir / "a/checkpoints/policy_step_000060.json");
  const std::string cb = read_file(dir / "b/checkpoints/policy_step_000060.json");
  return {!la.empty() && la == lb && !ca.empty() && ca == cb,
          fmt::format("train_log {} bytes, identical={}; final checkpoint identical={}",
                      la.size(), la == lb, ca == cb)};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::vector<std::pair<std::string, std::function<Result()>>> criteria = {
      {"advantage normalization", normalization},
      {"affine invariance of fused advantages", affine_invariance},
      {"clipped objective", clipped_objective},
      {"gradient correctness", gradient_check},
      {"length reward exhaustive", length_exhaustive},
      {"training dynamics (demo config)", training_dynamics},
      {"Bradley-Terry writing RM", writing_rm},
      {"Elo harness", elo_harness},
      {"judge protocol fidelity", protocol_fidelity},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Result r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failed += !r.pass;
    std::printf("%s %2zu %s: %s\n", r.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                r.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
