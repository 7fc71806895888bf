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

// Group-relative policy optimization: per-group reward normalization, the
// clipped surrogate objective with an optional KL penalty, and one training
// step wiring the reward stack to the toy policy.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "writerl/core.hpp"
#include "writerl/policy.hpp"
#include "writerl/rewards.hpp"
#include "writerl/writing_rm.hpp"

namespace writerl {

// (r - mean) / std within the group. Zero-variance groups map to all zeros.
// Throws when fewer than two rewards are given or any reward is non-finite.
std::vector<double> group_normalize(std::span<const double> rewards,
                                    StdMode mode = StdMode::kPopulation);

// min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A).
double clipped_surrogate(double ratio, double advantage, double epsilon);

// Mean over tokens of exp(d) - d - 1 with d = logp_ref - logp_policy.
double kl_penalty(std::span<const double> logp_policy, std::span<const double> logp_ref);

struct GroupBatch {
  PromptSpec prompt;
  std::vector<Trajectory> trajectories;
  std::vector<AdvantageVector> advantages;
};

// exp(sum logp_current - sum logp_behavior).
double importance_ratio(const Trajectory& trajectory);

// (1/G) sum_i clipped_surrogate(ratio_i, fused A_i, eps) - beta * mean_i KL_i,
// using the log-probs stored on the trajectories.
double grpo_objective(const GroupBatch& batch, double epsilon, double beta);

struct ObjectiveEvaluation {
  double objective = 0.0;
  GradientTable gradient;
  std::size_t clipped = 0;
  std::size_t samples = 0;
};

// Mean of grpo_objective over groups, with logp_current re-evaluated under
// `policy`, and its exact gradient with respect to the policy logits.
ObjectiveEvaluation evaluate_objective(const ToyPolicy& policy,
                                       std::span<const GroupBatch> batches, double epsilon,
                                       double beta, double temperature);

struct RewardStack {
  WritingRM writing;
  FormatPolicy format;
};

// Length is scored on the answer word count (clamped to the spec cap); the
// writing RM scores the answer, or the raw text when parsing failed.
RewardVector score_trajectory(const Trajectory& trajectory, const PromptSpec& prompt,
                              const RewardStack& stack);

struct StepMetrics {
  double objective = 0.0;
  double length_rm_mean = 0.0;
  double writing_rm_mean = 0.0;
  double format_rm_mean = 0.0;
  // kNoNonOverlong when every trajectory hit max_tokens.
  double mean_nonoverlong_len = 0.0;
  double format_compliance_rate = 0.0;
  double clip_fraction = 0.0;
};

inline constexpr double kNoNonOverlong = -1.0;

// Independent RNG stream for one trajectory.
std::mt19937_64 trajectory_stream(std::uint64_t seed, std::uint64_t step,
                                  std::uint64_t prompt_index, std::uint64_t sample_index);

double mean_nonoverlong_length(std::span<const Trajectory> trajectories);

// Samples group_size trajectories per prompt from a frozen snapshot of
// `policy`, scores and fuses rewards, then takes inner_epochs gradient-ascent
// steps on the clipped objective. Every prompt must carry a length spec.
// `reference` is required when config.beta > 0. Throws Error(kDivergence) on a
// non-finite objective or gradient, leaving `policy` at its last finite value.
StepMetrics train_step(ToyPolicy& policy, std::span<const PromptSpec> prompts,
                       const RewardStack& stack, const TrainConfig& config,
                       std::uint64_t step, const ToyPolicy* reference = nullptr,
                       std::vector<GroupBatch>* batches_out = nullptr);

}  // namespace writerl
