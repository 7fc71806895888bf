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

#include "writerl/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "writerl/error.hpp"

namespace writerl {

std::vector<double> group_normalize(std::span<const double> rewards, StdMode mode) {
  const std::size_t g = rewards.size();
  if (g < 2) fail(ErrorCode::kInvalidArgument, "group_normalize needs at least 2 rewards");
  double mean = 0.0;
  double max_abs = 0.0;
  for (double r : rewards) {
    if (!std::isfinite(r)) fail(ErrorCode::kInvalidArgument, "non-finite reward in group");
    mean += r;
    max_abs = std::max(max_abs, std::fabs(r));
  }
  mean /= static_cast<double>(g);
  double ss = 0.0;
  for (double r : rewards) ss += (r - mean) * (r - mean);
  const double denom = mode == StdMode::kPopulation ? static_cast<double>(g)
                                                    : static_cast<double>(g - 1);
  const double sd = std::sqrt(ss / denom);

  std::vector<double> out(g, 0.0);
  // Spreads at rounding level of the inputs count as zero variance.
  if (sd <= 1e-12 * max_abs || sd == 0.0) return out;
  for (std::size_t i = 0; i < g; ++i) out[i] = (rewards[i] - mean) / sd;
  return out;
}

double clipped_surrogate(double ratio, double advantage, double epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

double kl_penalty(std::span<const double> logp_policy, std::span<const double> logp_ref) {
  if (logp_policy.size() != logp_ref.size()) {
    fail(ErrorCode::kInvalidArgument, "kl_penalty: sequence lengths differ");
  }
  if (logp_policy.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t t = 0; t < logp_policy.size(); ++t) {
    const double d = logp_ref[t] - logp_policy[t];
    total += std::expm1(d) - d;
  }
  return total / static_cast<double>(logp_policy.size());
}

double importance_ratio(const Trajectory& trajectory) {
  double diff = 0.0;
  for (std::size_t t = 0; t < trajectory.logp_current.size(); ++t) {
    diff += trajectory.logp_current[t] - trajectory.logp_behavior[t];
  }
  return std::exp(diff);
}

namespace {

void check_group(const GroupBatch& batch) {
  if (batch.trajectories.size() != batch.advantages.size()) {
    fail(ErrorCode::kInvalidArgument, "trajectories and advantages are not aligned");
  }
  if (batch.trajectories.empty()) fail(ErrorCode::kInvalidArgument, "empty group");
  for (const auto& t : batch.trajectories) {
    if (t.logp_current.size() != t.tokens.size() || t.logp_behavior.size() != t.tokens.size()) {
      fail(ErrorCode::kInvalidArgument, "trajectory log-prob lengths do not match tokens");
    }
  }
}

}  // namespace

double grpo_objective(const GroupBatch& batch, double epsilon, double beta) {
  check_group(batch);
  const double g = static_cast<double>(batch.trajectories.size());
  double surrogate = 0.0;
  double kl = 0.0;
  for (std::size_t i = 0; i < batch.trajectories.size(); ++i) {
    const auto& traj = batch.trajectories[i];
    surrogate += clipped_surrogate(importance_ratio(traj), batch.advantages[i].fused, epsilon);
    if (beta > 0.0) kl += kl_penalty(traj.logp_current, traj.logp_ref);
  }
  const double value = surrogate / g - beta * kl / g;
  if (!std::isfinite(value)) fail(ErrorCode::kDivergence, "non-finite GRPO objective");
  return value;
}

ObjectiveEvaluation evaluate_objective(const ToyPolicy& policy,
                                       std::span<const GroupBatch> batches, double epsilon,
                                       double beta, double temperature) {
  ObjectiveEvaluation eval;
  if (batches.empty()) return eval;
  const double n_groups = static_cast<double>(batches.size());
  for (const auto& batch : batches) {
    check_group(batch);
    const double g = static_cast<double>(batch.trajectories.size());
    double surrogate = 0.0;
    double kl = 0.0;
    for (std::size_t i = 0; i < batch.trajectories.size(); ++i) {
      const auto& traj = batch.trajectories[i];
      const auto current = token_logprobs(policy, traj, temperature);
      double diff = 0.0;
      for (std::size_t t = 0; t < current.size(); ++t) diff += current[t] - traj.logp_behavior[t];
      const double ratio = std::exp(diff);
      const double adv = batch.advantages[i].fused;
      const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
      surrogate += std::min(ratio * adv, clipped * adv);
      ++eval.samples;

      std::vector<double> weights(traj.tokens.size(), 0.0);
      // The unclipped branch is active unless the clipped term is strictly
      // smaller; only then does the sample contribute gradient.
      if (clipped * adv < ratio * adv) {
        ++eval.clipped;
      } else {
        std::fill(weights.begin(), weights.end(), adv * ratio / (g * n_groups));
      }
      if (beta > 0.0 && !traj.tokens.empty()) {
        if (traj.logp_ref.size() != traj.tokens.size()) {
          fail(ErrorCode::kInvalidArgument, "KL penalty requires reference log-probs");
        }
        kl += kl_penalty(current, traj.logp_ref);
        const double n = static_cast<double>(traj.tokens.size());
        for (std::size_t t = 0; t < current.size(); ++t) {
          const double d = traj.logp_ref[t] - current[t];
          // d/dlogp of -(beta/(G n)) * (e^d - d - 1) is -(beta/(G n)) * (1 - e^d).
          weights[t] += beta * std::expm1(d) / (g * n * n_groups);
        }
      }
      accumulate_token_gradient(policy, traj, temperature, weights, eval.gradient);
    }
    eval.objective += (surrogate / g - beta * kl / g) / n_groups;
  }
  if (!std::isfinite(eval.objective)) fail(ErrorCode::kDivergence, "non-finite GRPO objective");
  return eval;
}

RewardVector score_trajectory(const Trajectory& trajectory, const PromptSpec& prompt,
                              const RewardStack& stack) {
  if (!prompt.length_spec) {
    fail(ErrorCode::kInvalidArgument, "prompt '" + prompt.id + "' has no length spec");
  }
  const LengthSpec& spec = *prompt.length_spec;
  RewardVector r;
  r.length = length_reward(std::min(trajectory.word_len, spec.max), spec);
  const std::string& scored = trajectory.answer ? *trajectory.answer : trajectory.raw_text;
  r.write = writing_rm_score(stack.writing, prompt.text, scored);
  r.format = format_reward(trajectory.raw_text, stack.format);
  return r;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::mt19937_64 trajectory_stream(std::uint64_t seed, std::uint64_t step,
                                  std::uint64_t prompt_index, std::uint64_t sample_index) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ step);
  h = splitmix64(h ^ prompt_index);
  h = splitmix64(h ^ sample_index);
  return std::mt19937_64(h);
}

double mean_nonoverlong_length(std::span<const Trajectory> trajectories) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& t : trajectories) {
    if (t.truncated) continue;
    total += static_cast<double>(t.word_len);
    ++n;
  }
  return n == 0 ? kNoNonOverlong : total / static_cast<double>(n);
}

StepMetrics train_step(ToyPolicy& policy, std::span<const PromptSpec> prompts,
                       const RewardStack& stack, const TrainConfig& config,
                       std::uint64_t step, const ToyPolicy* reference,
                       std::vector<GroupBatch>* batches_out) {
  validate(config);
  if (prompts.empty()) fail(ErrorCode::kInvalidArgument, "train_step needs at least one prompt");
  if (config.beta > 0.0 && reference == nullptr) {
    fail(ErrorCode::kInvalidArgument, "beta > 0 requires a reference policy");
  }
  const std::size_t g = static_cast<std::size_t>(config.group_size);
  const std::size_t n_prompts = prompts.size();

  // Sampling reads only this snapshot; updates happen after all sampling.
  const ToyPolicy behavior = policy;
  const SampleOptions options{config.temperature, config.top_p, config.max_tokens, config.mode};

  std::vector<GroupBatch> batches(n_prompts);
  std::vector<std::vector<RewardVector>> rewards(n_prompts, std::vector<RewardVector>(g));
  for (std::size_t p = 0; p < n_prompts; ++p) {
    batches[p].prompt = prompts[p];
    batches[p].trajectories.resize(g);
  }
  auto work = [&](std::size_t job) {
    const std::size_t p = job / g;
    const std::size_t i = job % g;
    auto rng = trajectory_stream(config.seed, step, p, i);
    Trajectory traj = sample(behavior, prompts[p], options, rng);
    if (config.beta > 0.0) traj.logp_ref = token_logprobs(*reference, traj, config.temperature);
    rewards[p][i] = score_trajectory(traj, prompts[p], stack);
    batches[p].trajectories[i] = std::move(traj);
  };
  const std::size_t jobs = n_prompts * g;
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(config.threads), jobs);
  if (workers <= 1) {
    for (std::size_t j = 0; j < jobs; ++j) work(j);
  } else {
    std::vector<std::jthread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t j = w; j < jobs; j += workers) work(j);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    pool.clear();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  StepMetrics metrics;
  std::size_t compliant = 0;
  for (std::size_t p = 0; p < n_prompts; ++p) {
    batches[p].advantages = composite_advantages(rewards[p], config.std_mode);
    for (std::size_t i = 0; i < g; ++i) {
      metrics.length_rm_mean += rewards[p][i].length;
      metrics.writing_rm_mean += rewards[p][i].write;
      metrics.format_rm_mean += rewards[p][i].format;
      const auto& t = batches[p].trajectories[i];
      if (t.answer) ++compliant;
    }
  }
  const double total = static_cast<double>(jobs);
  metrics.length_rm_mean /= total;
  metrics.writing_rm_mean /= total;
  metrics.format_rm_mean /= total;
  metrics.format_compliance_rate = static_cast<double>(compliant) / total;
  {
    double len_sum = 0.0;
    std::size_t len_n = 0;
    for (const auto& b : batches) {
      for (const auto& t : b.trajectories) {
        if (t.truncated) continue;
        len_sum += static_cast<double>(t.word_len);
        ++len_n;
      }
    }
    metrics.mean_nonoverlong_len = len_n == 0 ? kNoNonOverlong : len_sum / static_cast<double>(len_n);
  }

  std::size_t clipped = 0;
  std::size_t evaluated = 0;
  for (int epoch = 0; epoch < config.inner_epochs; ++epoch) {
    auto eval = evaluate_objective(policy, batches, config.epsilon, config.beta,
                                   config.temperature);
    metrics.objective = eval.objective;
    clipped += eval.clipped;
    evaluated += eval.samples;
    apply_update_in_place(policy, eval.gradient, config.learning_rate);
  }
  metrics.clip_fraction =
      evaluated == 0 ? 0.0 : static_cast<double>(clipped) / static_cast<double>(evaluated);
  if (batches_out) *batches_out = std::move(batches);
  return metrics;
}

}  // namespace writerl
