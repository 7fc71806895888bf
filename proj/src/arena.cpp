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

#include "writerl/arena.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <thread>
#include <tuple>

#include <spdlog/spdlog.h>

#include "writerl/error.hpp"
#include "writerl/text.hpp"

namespace writerl {

using nlohmann::json;

namespace {

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const json&, const std::string&)>& fn) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    try {
      fn(json::parse(line), where);
    } catch (const json::exception& e) {
      fail(ErrorCode::kParse, where + ": " + e.what());
    }
  }
}

double position_score(Verdict v) {
  switch (v) {
    case Verdict::kAMuchBetter:
    case Verdict::kABetter:
      return 1.0;
    case Verdict::kTie:
      return 0.5;
    case Verdict::kBBetter:
    case Verdict::kBMuchBetter:
      return 0.0;
  }
  return 0.5;
}

Outcome outcome_from_mean(double mean) {
  if (mean > 0.5) return Outcome::kWin;
  if (mean < 0.5) return Outcome::kLoss;
  return Outcome::kTie;
}

}  // namespace

const char* outcome_name(Outcome outcome) {
  switch (outcome) {
    case Outcome::kWin:
      return "win";
    case Outcome::kTie:
      return "tie";
    case Outcome::kLoss:
      return "loss";
  }
  return "unknown";
}

std::optional<double> candidate_score(const ComparisonRecord& record) {
  if (!record.verdict) return std::nullopt;
  const double s = position_score(*record.verdict);
  return record.order == record.model_a ? s : 1.0 - s;
}

Outcome aggregate_pair(Verdict forward, Verdict swapped) {
  return outcome_from_mean((position_score(forward) + (1.0 - position_score(swapped))) / 2.0);
}

std::vector<PairOutcome> aggregate_records(std::span<const ComparisonRecord> records) {
  using Key = std::tuple<std::string, std::string, std::string>;
  struct Acc {
    double sum = 0.0;
    int n = 0;
    bool errored = false;
  };
  std::map<Key, Acc> acc;
  std::vector<Key> order;
  for (const auto& r : records) {
    Key key{r.prompt_id, r.model_a, r.model_b};
    auto [it, inserted] = acc.try_emplace(key);
    if (inserted) order.push_back(key);
    if (auto s = candidate_score(r)) {
      it->second.sum += *s;
      ++it->second.n;
    } else {
      it->second.errored = true;
    }
  }
  std::vector<PairOutcome> out;
  for (const auto& key : order) {
    const Acc& a = acc[key];
    if (a.errored || a.n == 0) continue;
    out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key),
                   outcome_from_mean(a.sum / a.n)});
  }
  return out;
}

OutputTable index_outputs(std::span<const ModelOutput> outputs) {
  OutputTable table;
  for (const auto& o : outputs) {
    auto [it, inserted] = table[o.model].emplace(o.prompt_id, o.text);
    if (!inserted) {
      fail(ErrorCode::kInvalidArgument,
           "duplicate output for model '" + o.model + "' on prompt '" + o.prompt_id + "'");
    }
  }
  return table;
}

std::vector<ComparisonRecord> run_arena(std::span<const ArenaPrompt> prompts,
                                        const std::string& candidate,
                                        const std::vector<std::string>& baselines,
                                        const OutputTable& outputs, Judge& judge, int threads) {
  auto lookup = [&](const std::string& model, const std::string& prompt_id) -> const std::string& {
    auto m = outputs.find(model);
    if (m == outputs.end()) fail(ErrorCode::kInvalidArgument, "no outputs for model '" + model + "'");
    auto p = m->second.find(prompt_id);
    if (p == m->second.end()) {
      fail(ErrorCode::kInvalidArgument,
           "model '" + model + "' has no output for prompt '" + prompt_id + "'");
    }
    return p->second;
  };
  for (const auto& b : baselines) {
    if (b == candidate) {
      fail(ErrorCode::kInvalidArgument, "baseline '" + b + "' is the candidate");
    }
  }
  for (const auto& p : prompts) {
    lookup(candidate, p.id);
    for (const auto& b : baselines) lookup(b, p.id);
  }

  const std::size_t jobs = prompts.size() * baselines.size();
  std::vector<ComparisonRecord> records(2 * jobs);
  auto work = [&](std::size_t job) {
    const auto& p = prompts[job / baselines.size()];
    const auto& b = baselines[job % baselines.size()];
    const std::string& cand_text = lookup(candidate, p.id);
    const std::string& base_text = lookup(b, p.id);
    ComparisonRecord fwd{p.id, candidate, b, candidate, std::nullopt, ""};
    ComparisonRecord swp{p.id, candidate, b, b, std::nullopt, ""};
    try {
      fwd.verdict = judge.pairwise_judge(p.prompt, cand_text, base_text);
      swp.verdict = judge.pairwise_judge(p.prompt, base_text, cand_text);
    } catch (const std::exception& e) {
      fwd.verdict.reset();
      swp.verdict.reset();
      fwd.error = swp.error = e.what();
      spdlog::warn("judge failed on prompt '{}' vs '{}': {}", p.id, b, e.what());
    }
    records[2 * job] = std::move(fwd);
    records[2 * job + 1] = std::move(swp);
  };

  const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(jobs, 1));
  if (workers <= 1) {
    for (std::size_t j = 0; j < jobs; ++j) work(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < jobs; j = next++) work(j);
      });
    }
  }
  return records;
}

std::vector<Game> games_from_outcomes(std::span<const PairOutcome> outcomes) {
  std::vector<Game> games;
  games.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    const double s = o.outcome == Outcome::kWin ? 1.0 : o.outcome == Outcome::kTie ? 0.5 : 0.0;
    games.push_back({o.candidate, o.baseline, s});
  }
  return games;
}

double elo_expected(double r_a, double r_b) {
  return 1.0 / (1.0 + std::pow(10.0, (r_b - r_a) / 400.0));
}

namespace {

// i -> j when i took any score from j; the MLE exists iff this graph is
// strongly connected.
bool strongly_connected(const std::vector<std::vector<double>>& score) {
  const std::size_t n = score.size();
  auto reach_all = [&](bool reverse) {
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      for (std::size_t j = 0; j < n; ++j) {
        const double s = reverse ? score[j][i] : score[i][j];
        if (!seen[j] && s > 0.0) {
          seen[j] = 1;
          stack.push_back(j);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  return n <= 1 || (reach_all(false) && reach_all(true));
}

}  // namespace

EloFit fit_elo(std::span<const Game> games, const EloOptions& options) {
  if (games.empty()) fail(ErrorCode::kInvalidArgument, "fit_elo needs at least one game");
  std::set<std::string> names;
  for (const auto& g : games) {
    if (g.a == g.b) fail(ErrorCode::kInvalidArgument, "game between '" + g.a + "' and itself");
    if (!(g.score_a >= 0.0 && g.score_a <= 1.0)) {
      fail(ErrorCode::kInvalidArgument, "game score must be in [0, 1]");
    }
    names.insert(g.a);
    names.insert(g.b);
  }
  const std::vector<std::string> models(names.begin(), names.end());
  const std::size_t n = models.size();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[models[i]] = i;

  std::vector<std::vector<double>> score(n, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> count(n, std::vector<double>(n, 0.0));
  std::vector<std::int64_t> played(n, 0);
  for (const auto& g : games) {
    const std::size_t a = index[g.a];
    const std::size_t b = index[g.b];
    score[a][b] += g.score_a;
    score[b][a] += 1.0 - g.score_a;
    count[a][b] += 1.0;
    count[b][a] += 1.0;
    ++played[a];
    ++played[b];
  }

  EloFit fit;
  std::vector<double> elo(n, 0.0);
  const double scale = 400.0 / std::log(10.0);

  if (options.method == EloMethod::kOnline) {
    for (const auto& g : games) {
      const std::size_t a = index[g.a];
      const std::size_t b = index[g.b];
      const double delta = options.k_factor * (g.score_a - elo_expected(elo[a], elo[b]));
      elo[a] += delta;
      elo[b] -= delta;
    }
  } else {
    const bool connected = strongly_connected(score);
    if (!connected) {
      // Tiny symmetric pseudo-ties keep the likelihood bounded; the resulting
      // extreme ratings are clamped below.
      constexpr double kPseudo = 1e-6;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (i == j) continue;
          score[i][j] += kPseudo / 2.0;
          count[i][j] += kPseudo;
        }
      }
      fit.warning = "comparison graph is not strongly connected; ratings diverge";
    }
    std::vector<double> wins(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) wins[i] = std::accumulate(score[i].begin(), score[i].end(), 0.0);

    std::vector<double> theta(n, 0.0);
    std::vector<double> next(n, 0.0);
    for (int iter = 0; iter < options.max_iterations; ++iter) {
      for (std::size_t i = 0; i < n; ++i) {
        double denom = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (count[i][j] == 0.0) continue;
          // n_ij / (p_i + p_j), scaled by p_i to stay in log space.
          denom += count[i][j] / (1.0 + std::exp(theta[j] - theta[i]));
        }
        next[i] = denom > 0.0 ? theta[i] + std::log(wins[i] / denom) : theta[i];
      }
      const double mean = std::accumulate(next.begin(), next.end(), 0.0) / static_cast<double>(n);
      double change = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        next[i] -= mean;
        change = std::max(change, std::fabs(next[i] - theta[i]));
      }
      theta.swap(next);
      if (change * scale < options.tolerance) break;
    }
    for (std::size_t i = 0; i < n; ++i) elo[i] = theta[i] * scale;
  }

  double shift = 0.0;
  std::size_t anchored = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool is_anchor =
        options.anchor_models.empty() ||
        std::find(options.anchor_models.begin(), options.anchor_models.end(), models[i]) !=
            options.anchor_models.end();
    if (is_anchor) {
      shift += elo[i];
      ++anchored;
    }
  }
  if (anchored == 0) fail(ErrorCode::kInvalidArgument, "no anchor model appears in any game");
  shift = options.anchor - shift / static_cast<double>(anchored);

  for (std::size_t i = 0; i < n; ++i) {
    double r = elo[i] + shift;
    if (!std::isfinite(r) || r > options.anchor + options.clamp ||
        r < options.anchor - options.clamp) {
      r = std::isnan(r) ? options.anchor
                        : std::clamp(r, options.anchor - options.clamp,
                                     options.anchor + options.clamp);
      fit.clamped = true;
    }
    fit.ratings.push_back({models[i], r, played[i]});
  }
  if (fit.clamped) {
    if (!fit.warning.empty()) fit.warning += "; ";
    fit.warning += "ratings clamped to anchor +- " + std::to_string(static_cast<int>(options.clamp));
  }
  if (!fit.warning.empty()) spdlog::warn("fit_elo: {}", fit.warning);
  std::stable_sort(fit.ratings.begin(), fit.ratings.end(),
                   [](const Rating& x, const Rating& y) { return x.elo > y.elo; });
  return fit;
}

std::vector<WinRateRow> win_rate_report(std::span<const PairOutcome> outcomes) {
  std::map<std::string, WinRateRow> rows;
  WinRateRow overall{"overall"};
  for (const auto& o : outcomes) {
    WinRateRow& row = rows[o.baseline];
    row.baseline = o.baseline;
    for (WinRateRow* r : {&row, &overall}) {
      switch (o.outcome) {
        case Outcome::kWin:
          ++r->wins;
          break;
        case Outcome::kTie:
          ++r->ties;
          break;
        case Outcome::kLoss:
          ++r->losses;
          break;
      }
    }
  }
  std::vector<WinRateRow> out;
  auto finish = [](WinRateRow r) {
    const double total = static_cast<double>(r.wins + r.ties + r.losses);
    r.win_rate = (static_cast<double>(r.wins) + 0.5 * static_cast<double>(r.ties)) / total;
    return r;
  };
  for (auto& [name, row] : rows) out.push_back(finish(row));
  if (!outcomes.empty()) out.push_back(finish(overall));
  return out;
}

json to_json(const ComparisonRecord& record) {
  json j{{"prompt_id", record.prompt_id},
         {"model_a", record.model_a},
         {"model_b", record.model_b},
         {"order", record.order}};
  if (record.verdict) {
    j["verdict"] = std::string(verdict_name(*record.verdict));
  } else {
    j["error"] = record.error;
  }
  return j;
}

ComparisonRecord comparison_record_from_json(const json& j) {
  ComparisonRecord r;
  r.prompt_id = j.at("prompt_id").get<std::string>();
  r.model_a = j.at("model_a").get<std::string>();
  r.model_b = j.at("model_b").get<std::string>();
  r.order = j.at("order").get<std::string>();
  if (r.model_a == r.model_b) fail(ErrorCode::kParse, "record compares a model with itself");
  if (r.order != r.model_a && r.order != r.model_b) {
    fail(ErrorCode::kParse, "record order '" + r.order + "' names neither model");
  }
  if (j.contains("verdict")) {
    const auto name = j.at("verdict").get<std::string>();
    r.verdict = verdict_from_name(name);
    if (!r.verdict) fail(ErrorCode::kParse, "unknown verdict '" + name + "'");
  } else {
    r.error = j.at("error").get<std::string>();
  }
  return r;
}

json to_json(const Rating& rating) {
  return json{{"model", rating.model}, {"elo", rating.elo}, {"games", rating.games}};
}

json to_json(const WinRateRow& row) {
  return json{{"baseline", row.baseline},
              {"wins", row.wins},
              {"ties", row.ties},
              {"losses", row.losses},
              {"win_rate", row.win_rate}};
}

std::vector<ArenaPrompt> load_arena_prompts(const std::filesystem::path& path) {
  std::vector<ArenaPrompt> prompts;
  std::set<std::string> ids;
  for_each_jsonl(path, [&](const json& j, const std::string& where) {
    ArenaPrompt p{j.at("id").get<std::string>(), j.at("prompt").get<std::string>()};
    if (!ids.insert(p.id).second) fail(ErrorCode::kParse, where + ": duplicate id '" + p.id + "'");
    prompts.push_back(std::move(p));
  });
  return prompts;
}

std::vector<ModelOutput> load_model_outputs(const std::filesystem::path& path) {
  std::vector<ModelOutput> outputs;
  for_each_jsonl(path, [&](const json& j, const std::string&) {
    outputs.push_back({j.at("prompt_id").get<std::string>(), j.at("model").get<std::string>(),
                       j.at("text").get<std::string>()});
  });
  return outputs;
}

std::vector<ComparisonRecord> load_comparison_records(const std::filesystem::path& path) {
  std::vector<ComparisonRecord> records;
  for_each_jsonl(path, [&](const json& j, const std::string& where) {
    try {
      records.push_back(comparison_record_from_json(j));
    } catch (const Error& e) {
      fail(ErrorCode::kParse, where + ": " + e.what());
    }
  });
  return records;
}

}  // namespace writerl
