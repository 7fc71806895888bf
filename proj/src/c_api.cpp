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

#include "writerl/writerl.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "writerl/arena.hpp"
#include "writerl/commands.hpp"
#include "writerl/core.hpp"
#include "writerl/error.hpp"
#include "writerl/grpo.hpp"
#include "writerl/judge.hpp"
#include "writerl/rewards.hpp"
#include "writerl/writing_rm.hpp"

#ifndef WRITERL_VERSION
#define WRITERL_VERSION "0.0.0"
#endif

struct wrl_config {
  writerl::TrainConfig config;
};

struct wrl_writing_rm {
  writerl::WritingRM model;
};

struct wrl_judge {
  std::unique_ptr<writerl::Judge> judge;
};

namespace {

thread_local std::string g_last_error;

wrl_status to_status(writerl::ErrorCode code) {
  switch (code) {
    case writerl::ErrorCode::kInvalidArgument:
      return WRL_INVALID_ARGUMENT;
    case writerl::ErrorCode::kParse:
      return WRL_PARSE;
    case writerl::ErrorCode::kIo:
      return WRL_IO;
    case writerl::ErrorCode::kDivergence:
      return WRL_DIVERGENCE;
    case writerl::ErrorCode::kJudge:
      return WRL_JUDGE;
    case writerl::ErrorCode::kTransport:
      return WRL_TRANSPORT;
    case writerl::ErrorCode::kInternal:
      return WRL_INTERNAL;
  }
  return WRL_INTERNAL;
}

wrl_status set_error(wrl_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <typename F>
wrl_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return WRL_OK;
  } catch (const writerl::Error& e) {
    return set_error(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(WRL_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(WRL_INTERNAL, e.what());
  }
}

template <typename F>
int guarded_command(F&& body) {
  g_last_error.clear();
  try {
    return body();
  } catch (const writerl::Error& e) {
    g_last_error = e.what();
    spdlog::error("{}", e.what());
    const auto c = e.code();
    return c == writerl::ErrorCode::kInvalidArgument || c == writerl::ErrorCode::kParse ||
                   c == writerl::ErrorCode::kIo
               ? writerl::kExitInput
               : writerl::kExitRun;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    spdlog::error("{}", e.what());
    return writerl::kExitRun;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) {
    writerl::fail(writerl::ErrorCode::kInvalidArgument, std::string(what) + " is null");
  }
}

std::string str_or_empty(const char* s) { return s ? s : ""; }

writerl::LengthSpec from_c(const wrl_length_spec& s) { return {s.lower, s.upper, s.max}; }
wrl_length_spec to_c(const writerl::LengthSpec& s) { return {s.lower, s.upper, s.max}; }

}  // namespace

extern "C" {

const char* wrl_version(void) { return WRITERL_VERSION; }

const char* wrl_last_error(void) { return g_last_error.c_str(); }

const char* wrl_status_name(wrl_status status) {
  switch (status) {
    case WRL_OK:
      return "ok";
    case WRL_INVALID_ARGUMENT:
      return "invalid_argument";
    case WRL_PARSE:
      return "parse";
    case WRL_IO:
      return "io";
    case WRL_DIVERGENCE:
      return "divergence";
    case WRL_JUDGE:
      return "judge";
    case WRL_TRANSPORT:
      return "transport";
    case WRL_INTERNAL:
      return "internal";
  }
  return "unknown";
}

const char* wrl_verdict_token(wrl_verdict verdict) {
  if (verdict < WRL_A_MUCH_BETTER || verdict > WRL_B_MUCH_BETTER) return "";
  return writerl::verdict_token(static_cast<writerl::Verdict>(verdict)).data();
}

void wrl_set_log_level(wrl_log_level level) {
  static auto logger = [] {
    auto l = spdlog::stderr_color_mt("writerl");
    l->set_pattern("[%l] %v");
    spdlog::set_default_logger(l);
    return l;
  }();
  logger->set_level(static_cast<spdlog::level::level_enum>(level));
}

void wrl_string_free(char* s) { std::free(s); }

wrl_status wrl_word_count(const char* text, int64_t* out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = writerl::word_count(text);
  });
}

wrl_status wrl_length_reward(int64_t length, const wrl_length_spec* spec, double* out) {
  return guarded([&] {
    require(spec, "spec");
    require(out, "out");
    *out = writerl::length_reward(length, from_c(*spec));
  });
}

wrl_status wrl_format_reward(const char* text, wrl_output_mode mode, double* out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    writerl::FormatPolicy policy;
    policy.mode = mode == WRL_MODE_ANSWER ? writerl::OutputMode::kAnswerOnly
                                          : writerl::OutputMode::kThinkRequired;
    *out = writerl::format_reward(text, policy);
  });
}

wrl_status wrl_bt_pair_loss(double score_chosen, double score_rejected, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = writerl::bt_pair_loss(score_chosen, score_rejected);
  });
}

wrl_status wrl_group_normalize(const double* rewards, size_t n, double* out) {
  return guarded([&] {
    require(rewards, "rewards");
    require(out, "out");
    const auto a = writerl::group_normalize(std::span<const double>(rewards, n));
    std::copy(a.begin(), a.end(), out);
  });
}

wrl_status wrl_fused_advantages(const wrl_rewards* rewards, size_t n, double* out) {
  return guarded([&] {
    require(rewards, "rewards");
    require(out, "out");
    std::vector<writerl::RewardVector> rv(n);
    for (size_t i = 0; i < n; ++i) rv[i] = {rewards[i].length, rewards[i].write, rewards[i].format};
    const auto adv = writerl::composite_advantages(rv);
    for (size_t i = 0; i < n; ++i) out[i] = adv[i].fused;
  });
}

wrl_status wrl_clipped_surrogate(double ratio, double advantage, double epsilon, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = writerl::clipped_surrogate(ratio, advantage, epsilon);
  });
}

wrl_status wrl_elo_expected(double r_a, double r_b, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = writerl::elo_expected(r_a, r_b);
  });
}

wrl_status wrl_parse_verdict(const char* text, wrl_verdict* out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = static_cast<wrl_verdict>(writerl::parse_verdict(text));
  });
}

wrl_status wrl_explicit_length_rule(const char* query, int* found, wrl_length_spec* out) {
  return guarded([&] {
    require(query, "query");
    require(found, "found");
    require(out, "out");
    const auto spec = writerl::explicit_length_rule(query);
    *found = spec ? 1 : 0;
    if (spec) *out = to_c(*spec);
  });
}

wrl_status wrl_config_new(wrl_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new wrl_config{};
  });
}

wrl_status wrl_config_load(const char* path, wrl_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new wrl_config{writerl::load_config(path)};
  });
}

wrl_status wrl_config_set(wrl_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    writerl::set_config_value(config->config, key, value);
  });
}

wrl_status wrl_config_validate(const wrl_config* config) {
  return guarded([&] {
    require(config, "config");
    writerl::validate(config->config);
  });
}

wrl_status wrl_config_render(const wrl_config* config, char** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    const std::string text = writerl::render_config(config->config);
    char* buf = static_cast<char*>(std::malloc(text.size() + 1));
    if (buf == nullptr) throw std::bad_alloc();
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out = buf;
  });
}

void wrl_config_free(wrl_config* config) { delete config; }

wrl_status wrl_writing_rm_load(const char* path, wrl_writing_rm** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new wrl_writing_rm{writerl::load_writing_rm(path)};
  });
}

wrl_status wrl_writing_rm_score(const wrl_writing_rm* rm, const char* prompt, const char* answer,
                                double* out) {
  return guarded([&] {
    require(rm, "rm");
    require(prompt, "prompt");
    require(answer, "answer");
    require(out, "out");
    *out = writerl::writing_rm_score(rm->model, prompt, answer);
  });
}

void wrl_writing_rm_free(wrl_writing_rm* rm) { delete rm; }

wrl_status wrl_judge_open(const char* spec, wrl_judge** out) {
  return guarded([&] {
    require(spec, "spec");
    require(out, "out");
    auto judge = writerl::make_judge(spec);
    if (!judge) writerl::fail(writerl::ErrorCode::kInvalidArgument, "judge spec selects no judge");
    *out = new wrl_judge{std::move(judge)};
  });
}

wrl_status wrl_judge_classify(wrl_judge* judge, const char* query, int* writing, int64_t* lower,
                              int64_t* upper) {
  return guarded([&] {
    require(judge, "judge");
    require(query, "query");
    require(writing, "writing");
    require(lower, "lower");
    require(upper, "upper");
    const auto c = judge->judge->classify_writing_task(query);
    *writing = c.writing ? 1 : 0;
    *lower = c.range ? c.range->first : 0;
    *upper = c.range ? c.range->second : 0;
  });
}

wrl_status wrl_judge_length(wrl_judge* judge, const char* query, int* unfulfillable,
                            int* rule_violation, wrl_length_spec* out) {
  return guarded([&] {
    require(judge, "judge");
    require(query, "query");
    require(unfulfillable, "unfulfillable");
    require(rule_violation, "rule_violation");
    require(out, "out");
    const auto p = judge->judge->predict_length_range(query);
    *unfulfillable = p.unfulfillable ? 1 : 0;
    *rule_violation = p.rule_violation ? 1 : 0;
    if (p.spec) *out = to_c(*p.spec);
  });
}

wrl_status wrl_judge_pairwise(wrl_judge* judge, const char* prompt, const char* response_a,
                              const char* response_b, wrl_verdict* out) {
  return guarded([&] {
    require(judge, "judge");
    require(prompt, "prompt");
    require(response_a, "response_a");
    require(response_b, "response_b");
    require(out, "out");
    *out = static_cast<wrl_verdict>(judge->judge->pairwise_judge(prompt, response_a, response_b));
  });
}

void wrl_judge_free(wrl_judge* judge) { delete judge; }

int wrl_cmd_train(const wrl_train_args* args) {
  return guarded_command([&] {
    require(args, "args");
    writerl::TrainArgs a;
    a.config = str_or_empty(args->config_path);
    a.out = str_or_empty(args->out_dir);
    a.judge = args->judge ? args->judge : "none";
    for (size_t i = 0; i < args->n_overrides; ++i) {
      a.overrides.emplace_back(args->override_keys[i], args->override_values[i]);
    }
    return writerl::cmd_train(a);
  });
}

int wrl_cmd_rm_train(const wrl_rm_train_args* args) {
  return guarded_command([&] {
    require(args, "args");
    writerl::RmTrainArgs a;
    a.pairs = str_or_empty(args->pairs_path);
    a.model_out = str_or_empty(args->model_out);
    a.seed = args->seed;
    a.holdout = args->holdout;
    a.epochs = args->epochs;
    return writerl::cmd_rm_train(a);
  });
}

int wrl_cmd_gen_pairs(const wrl_gen_pairs_args* args) {
  return guarded_command([&] {
    require(args, "args");
    return writerl::cmd_gen_pairs({str_or_empty(args->out_path), args->count, args->seed});
  });
}

int wrl_cmd_score(const wrl_score_args* args) {
  return guarded_command([&] {
    require(args, "args");
    writerl::ScoreArgs a;
    a.input = str_or_empty(args->input_path);
    a.output = str_or_empty(args->output_path);
    a.config = str_or_empty(args->config_path);
    a.judge = args->judge ? args->judge : "none";
    return writerl::cmd_score(a);
  });
}

int wrl_cmd_arena(const wrl_arena_args* args) {
  return guarded_command([&] {
    require(args, "args");
    writerl::ArenaArgs a;
    a.prompts = str_or_empty(args->prompts_path);
    a.candidate = {str_or_empty(args->candidate.name), str_or_empty(args->candidate.path)};
    for (size_t i = 0; i < args->n_baselines; ++i) {
      a.baselines.emplace_back(str_or_empty(args->baselines[i].name),
                               str_or_empty(args->baselines[i].path));
    }
    a.out = str_or_empty(args->out_dir);
    a.judge = str_or_empty(args->judge);
    a.threads = args->threads;
    a.method = args->online_elo ? writerl::EloMethod::kOnline : writerl::EloMethod::kBradleyTerry;
    return writerl::cmd_arena(a);
  });
}

}  // extern "C"
