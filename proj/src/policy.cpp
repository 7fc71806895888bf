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

#include "writerl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "writerl/error.hpp"
#include "writerl/text.hpp"

namespace writerl {

namespace {

constexpr std::string_view kWordList[] = {
    "the",   "river", "light",  "stone",  "quiet", "morning", "letter", "garden",
    "city",  "road",  "memory", "winter", "bridge", "window",  "story",  "voice",
    "field", "night", "market", "harbor", "paper", "lantern", "forest", "signal",
    "echo",  "north", "cloud",  "ember",  "salt",  "thread",  "orchard", "tide",
};

}  // namespace

ToyPolicy::ToyPolicy(std::vector<std::string> words, int order, int start_buckets)
    : order_(order), start_buckets_(start_buckets) {
  if (order < 1) fail(ErrorCode::kInvalidArgument, "policy order must be >= 1");
  if (start_buckets < 1) fail(ErrorCode::kInvalidArgument, "start_buckets must be >= 1");
  if (words.empty()) fail(ErrorCode::kInvalidArgument, "policy needs at least one word token");
  vocab_ = {std::string(kThinkOpenToken), std::string(kThinkCloseToken),
            std::string(kAnswerOpenToken), std::string(kAnswerCloseToken),
            std::string(kEosToken)};
  for (auto& w : words) {
    if (std::find(vocab_.begin(), vocab_.end(), w) != vocab_.end()) {
      fail(ErrorCode::kInvalidArgument, "duplicate vocabulary token '" + w + "'");
    }
    vocab_.push_back(std::move(w));
  }
  zero_row_.assign(vocab_.size(), 0.0);
}

std::vector<std::string> ToyPolicy::default_words(int count) {
  std::vector<std::string> out;
  for (int i = 0; i < count; ++i) {
    if (static_cast<std::size_t>(i) < std::size(kWordList)) {
      out.emplace_back(kWordList[i]);
    } else {
      out.push_back("w" + std::to_string(i));
    }
  }
  return out;
}

TokenId ToyPolicy::token_id(std::string_view token) const {
  const auto it = std::find(vocab_.begin(), vocab_.end(), token);
  if (it == vocab_.end()) {
    fail(ErrorCode::kInvalidArgument, "unknown token '" + std::string(token) + "'");
  }
  return static_cast<TokenId>(it - vocab_.begin());
}

ContextKey ToyPolicy::start_context(std::string_view prompt_id) const {
  const auto bucket = static_cast<TokenId>(text::fnv1a64(prompt_id) %
                                           static_cast<std::uint64_t>(start_buckets_));
  return ContextKey(static_cast<std::size_t>(order_), -1 - bucket);
}

ContextKey ToyPolicy::advance(const ContextKey& context, TokenId next) const {
  ContextKey out(context.begin() + 1, context.end());
  out.push_back(next);
  return out;
}

std::span<const double> ToyPolicy::row(const ContextKey& context) const {
  const auto it = rows_.find(context);
  if (it == rows_.end()) return zero_row_;
  return it->second;
}

std::vector<double>& ToyPolicy::mutable_row(const ContextKey& context) {
  auto [it, inserted] = rows_.try_emplace(context, zero_row_);
  return it->second;
}

ToyPolicy make_initial_policy(const TrainConfig& config) {
  ToyPolicy policy(ToyPolicy::default_words(config.vocab_words), config.order,
                   config.start_buckets);
  if (config.init == PolicyInit::kUniform) return policy;

  // The prior keys on the most recent token only, so it is written for
  // every context whose last entry matches.
  const double b = config.init_grammar_bias;
  const auto v = static_cast<TokenId>(policy.vocab_size());
  auto shape_row = [&](std::vector<double>& row, TokenId last) {
    if (last < 0) {
      row[config.mode == OutputMode::kThinkRequired ? policy.think_open()
                                                    : policy.answer_open()] += b;
    } else if (last == policy.think_open()) {
      row[policy.think_close()] += b;
    } else if (last == policy.think_close()) {
      row[policy.answer_open()] += b;
    } else if (last == policy.answer_open()) {
      if (config.init == PolicyInit::kChain) {
        row[5] += b;
      } else {
        for (TokenId w = 5; w < v; ++w) row[w] += b;
      }
    } else if (last == policy.answer_close()) {
      row[policy.eos()] += b;
    } else if (policy.is_word(last)) {
      if (config.init == PolicyInit::kChain) {
        row[last] += config.init_self_bias;
        if (last + 1 < v) row[last + 1] += b;
        else row[policy.answer_close()] += b;
      } else {
        for (TokenId w = 5; w < v; ++w) row[w] += b;
      }
      row[policy.answer_close()] += config.init_close_bias;
    }
  };

  // Enumerate contexts: every length-`order` sequence over start ids and
  // vocabulary ids where start ids only appear as a prefix.
  std::vector<TokenId> symbols;
  for (int s = 0; s < config.start_buckets; ++s) symbols.push_back(-1 - s);
  for (TokenId t = 0; t < v; ++t) symbols.push_back(t);
  const std::size_t m = static_cast<std::size_t>(config.order);
  std::vector<std::size_t> idx(m, 0);
  const std::size_t total_symbols = symbols.size();
  while (true) {
    ContextKey key(m);
    bool ok = true;
    for (std::size_t i = 0; i < m; ++i) {
      key[i] = symbols[idx[i]];
      if (i > 0 && key[i] < 0 && (key[i - 1] >= 0 || key[i - 1] != key[i])) ok = false;
    }
    if (ok) shape_row(policy.mutable_row(key), key.back());
    std::size_t pos = m;
    while (pos > 0 && ++idx[pos - 1] == total_symbols) idx[--pos] = 0;
    if (pos == 0) break;
  }
  return policy;
}

std::vector<double> softmax(std::span<const double> logits, double temperature) {
  std::vector<double> p(logits.size());
  double mx = -INFINITY;
  for (double l : logits) mx = std::max(mx, l / temperature);
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] / temperature - mx);
    z += p[i];
  }
  for (double& x : p) x /= z;
  return p;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<double> nucleus(std::span<const double> probs, double top_p) {
  std::vector<double> out(probs.begin(), probs.end());
  if (top_p >= 1.0) return out;
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  double mass = 0.0;
  std::size_t keep = 0;
  while (keep < order.size()) {
    mass += probs[order[keep++]];
    if (mass >= top_p) break;
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < keep; ++i) out[order[i]] = probs[order[i]] / mass;
  return out;
}

namespace {

std::size_t draw(std::span<const double> probs, double u) {
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

void check_token(const ToyPolicy& policy, TokenId t) {
  if (t < 0 || static_cast<std::size_t>(t) >= policy.vocab_size()) {
    fail(ErrorCode::kInvalidArgument, "token id " + std::to_string(t) + " not in vocabulary");
  }
}

}  // namespace

std::string render_tokens(const ToyPolicy& policy, std::span<const TokenId> tokens) {
  std::string out;
  for (TokenId t : tokens) {
    if (t == policy.eos()) continue;
    check_token(policy, t);
    if (!out.empty()) out.push_back(' ');
    out += policy.vocab()[static_cast<std::size_t>(t)];
  }
  return out;
}

void finalize_trajectory(const ToyPolicy& policy, Trajectory& trajectory, OutputMode mode) {
  trajectory.raw_text = render_tokens(policy, trajectory.tokens);
  const ParseOutcome parsed = parse_structured_output(trajectory.raw_text, mode);
  if (parsed.ok()) {
    trajectory.think = parsed.output->think;
    trajectory.answer = parsed.output->answer;
    trajectory.word_len = word_count(*trajectory.answer);
  } else {
    trajectory.think.reset();
    trajectory.answer.reset();
    trajectory.word_len = word_count(trajectory.raw_text);
  }
}

Trajectory sample(const ToyPolicy& policy, const PromptSpec& prompt,
                  const SampleOptions& options, std::mt19937_64& rng) {
  if (options.temperature < 0.0) fail(ErrorCode::kInvalidArgument, "temperature must be >= 0");
  if (!(options.top_p > 0.0 && options.top_p <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "top_p must lie in (0, 1]");
  }
  const bool greedy = options.temperature == 0.0;
  const double t = greedy ? 1.0 : options.temperature;

  Trajectory traj;
  traj.prompt_id = prompt.id;
  ContextKey ctx = policy.start_context(prompt.id);
  for (int step = 0; step < options.max_tokens; ++step) {
    const auto probs = softmax(policy.row(ctx), t);
    std::size_t next = 0;
    if (greedy) {
      next = static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    } else {
      const auto restricted = nucleus(probs, options.top_p);
      next = draw(restricted, uniform01(rng));
    }
    const auto id = static_cast<TokenId>(next);
    const double lp = std::log(probs[next]);
    traj.tokens.push_back(id);
    traj.logp_current.push_back(lp);
    traj.logp_behavior.push_back(lp);
    if (id == policy.eos()) break;
    ctx = policy.advance(ctx, id);
  }
  traj.truncated = traj.tokens.empty() || traj.tokens.back() != policy.eos();
  finalize_trajectory(policy, traj, options.mode);
  return traj;
}

std::vector<double> token_logprobs(const ToyPolicy& policy, const Trajectory& trajectory,
                                   double temperature) {
  std::vector<double> out;
  out.reserve(trajectory.tokens.size());
  ContextKey ctx = policy.start_context(trajectory.prompt_id);
  for (TokenId t : trajectory.tokens) {
    check_token(policy, t);
    const auto row = policy.row(ctx);
    double mx = -INFINITY;
    for (double l : row) mx = std::max(mx, l / temperature);
    double z = 0.0;
    for (double l : row) z += std::exp(l / temperature - mx);
    out.push_back(row[static_cast<std::size_t>(t)] / temperature - mx - std::log(z));
    ctx = policy.advance(ctx, t);
  }
  return out;
}

double sequence_logprob(const ToyPolicy& policy, const Trajectory& trajectory,
                        double temperature) {
  const auto lps = token_logprobs(policy, trajectory, temperature);
  return std::accumulate(lps.begin(), lps.end(), 0.0);
}

void accumulate_token_gradient(const ToyPolicy& policy, const Trajectory& trajectory,
                               double temperature, std::span<const double> weights,
                               GradientTable& grad) {
  if (weights.size() != trajectory.tokens.size()) {
    fail(ErrorCode::kInvalidArgument, "token weight count does not match trajectory length");
  }
  ContextKey ctx = policy.start_context(trajectory.prompt_id);
  for (std::size_t i = 0; i < trajectory.tokens.size(); ++i) {
    const TokenId t = trajectory.tokens[i];
    check_token(policy, t);
    if (weights[i] != 0.0) {
      const auto probs = softmax(policy.row(ctx), temperature);
      auto [it, inserted] = grad.try_emplace(ctx, policy.vocab_size(), 0.0);
      auto& g = it->second;
      const double w = weights[i] / temperature;
      for (std::size_t v = 0; v < probs.size(); ++v) g[v] -= w * probs[v];
      g[static_cast<std::size_t>(t)] += w;
    }
    ctx = policy.advance(ctx, t);
  }
}

void accumulate_logprob_gradient(const ToyPolicy& policy, const Trajectory& trajectory,
                                 double temperature, double scale, GradientTable& grad) {
  const std::vector<double> weights(trajectory.tokens.size(), scale);
  accumulate_token_gradient(policy, trajectory, temperature, weights, grad);
}

GradientTable logprob_gradient(const ToyPolicy& policy, const Trajectory& trajectory,
                               double temperature) {
  GradientTable grad;
  accumulate_logprob_gradient(policy, trajectory, temperature, 1.0, grad);
  return grad;
}

void apply_update_in_place(ToyPolicy& policy, const GradientTable& gradient,
                           double learning_rate) {
  for (const auto& [ctx, g] : gradient) {
    if (g.size() != policy.vocab_size()) {
      fail(ErrorCode::kInvalidArgument, "gradient row width does not match vocabulary");
    }
    for (double x : g) {
      if (!std::isfinite(x)) {
        fail(ErrorCode::kDivergence, "non-finite gradient for context " + context_key_string(ctx));
      }
    }
    const auto row = policy.row(ctx);
    for (std::size_t v = 0; v < g.size(); ++v) {
      if (!std::isfinite(row[v] + learning_rate * g[v])) {
        fail(ErrorCode::kDivergence, "update overflows logits for context " + context_key_string(ctx));
      }
    }
  }
  if (learning_rate == 0.0) return;
  for (const auto& [ctx, g] : gradient) {
    auto& row = policy.mutable_row(ctx);
    for (std::size_t v = 0; v < g.size(); ++v) row[v] += learning_rate * g[v];
  }
}

ToyPolicy apply_update(const ToyPolicy& policy, const GradientTable& gradient,
                       double learning_rate) {
  ToyPolicy out = policy;
  apply_update_in_place(out, gradient, learning_rate);
  return out;
}

std::string context_key_string(const ContextKey& key) {
  std::string out;
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (i) out.push_back(',');
    out += std::to_string(key[i]);
  }
  return out;
}

namespace {

ContextKey parse_context_key(const std::string& s, int order) {
  ContextKey key;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) {
    try {
      std::size_t used = 0;
      key.push_back(static_cast<TokenId>(std::stol(part, &used)));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      fail(ErrorCode::kParse, "bad context key '" + s + "'");
    }
  }
  if (key.size() != static_cast<std::size_t>(order)) {
    fail(ErrorCode::kParse, "context key '" + s + "' does not match policy order");
  }
  return key;
}

}  // namespace

nlohmann::json to_json(const ToyPolicy& policy) {
  nlohmann::json rows = nlohmann::json::object();
  for (const auto& [ctx, logits] : policy.rows()) rows[context_key_string(ctx)] = logits;
  return nlohmann::json{{"vocab", policy.vocab()},
                        {"order", policy.order()},
                        {"start_buckets", policy.start_buckets()},
                        {"rows", rows}};
}

ToyPolicy policy_from_json(const nlohmann::json& j) {
  try {
    const auto vocab = j.at("vocab").get<std::vector<std::string>>();
    const int order = j.at("order").get<int>();
    const int buckets = j.value("start_buckets", 1);
    if (vocab.size() < 6) fail(ErrorCode::kParse, "policy vocabulary must have >= 6 tokens");
    const std::vector<std::string_view> structural = {kThinkOpenToken, kThinkCloseToken,
                                                      kAnswerOpenToken, kAnswerCloseToken,
                                                      kEosToken};
    for (std::size_t i = 0; i < structural.size(); ++i) {
      if (vocab[i] != structural[i]) {
        fail(ErrorCode::kParse, "policy vocabulary must start with the structural tokens");
      }
    }
    ToyPolicy policy(std::vector<std::string>(vocab.begin() + 5, vocab.end()), order, buckets);
    for (const auto& [key, logits] : j.at("rows").items()) {
      auto values = logits.get<std::vector<double>>();
      if (values.size() != policy.vocab_size()) {
        fail(ErrorCode::kParse, "row '" + key + "' has the wrong width");
      }
      for (double x : values) {
        if (!std::isfinite(x)) fail(ErrorCode::kParse, "row '" + key + "' is not finite");
      }
      policy.mutable_row(parse_context_key(key, order)) = std::move(values);
    }
    return policy;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("malformed policy checkpoint: ") + e.what());
  }
}

void save_policy(const ToyPolicy& policy, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << to_json(policy).dump() << '\n';
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

ToyPolicy load_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  return policy_from_json(j);
}

}  // namespace writerl
