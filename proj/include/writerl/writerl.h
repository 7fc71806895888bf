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

/* C interface to the writerl library.
 *
 * Every fallible function returns a wrl_status. On failure the message is
 * available from wrl_last_error() on the calling thread until the next call
 * into the library from that thread. Objects are opaque handles released with
 * the matching *_free function; strings returned through char** are released
 * with wrl_string_free.
 */
#ifndef WRITERL_WRITERL_H_
#define WRITERL_WRITERL_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define WRL_API __declspec(dllexport)
#else
#define WRL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wrl_status {
  WRL_OK = 0,
  WRL_INVALID_ARGUMENT = 1,
  WRL_PARSE = 2,
  WRL_IO = 3,
  WRL_DIVERGENCE = 4,
  WRL_JUDGE = 5,
  WRL_TRANSPORT = 6,
  WRL_INTERNAL = 7
} wrl_status;

typedef enum wrl_verdict {
  WRL_A_MUCH_BETTER = 0,
  WRL_A_BETTER = 1,
  WRL_TIE = 2,
  WRL_B_BETTER = 3,
  WRL_B_MUCH_BETTER = 4
} wrl_verdict;

typedef enum wrl_output_mode { WRL_MODE_THINK = 0, WRL_MODE_ANSWER = 1 } wrl_output_mode;

typedef enum wrl_log_level {
  WRL_LOG_TRACE = 0,
  WRL_LOG_DEBUG = 1,
  WRL_LOG_INFO = 2,
  WRL_LOG_WARN = 3,
  WRL_LOG_ERROR = 4,
  WRL_LOG_OFF = 6
} wrl_log_level;

typedef struct wrl_length_spec {
  int64_t lower;
  int64_t upper;
  int64_t max;
} wrl_length_spec;

typedef struct wrl_rewards {
  double length;
  double write;
  double format;
} wrl_rewards;

WRL_API const char* wrl_version(void);
WRL_API const char* wrl_last_error(void);
WRL_API const char* wrl_status_name(wrl_status status);
WRL_API const char* wrl_verdict_token(wrl_verdict verdict);
/* Routes library logging to stderr at the given level. */
WRL_API void wrl_set_log_level(wrl_log_level level);
WRL_API void wrl_string_free(char* s);

/* ---- Pure functions ---------------------------------------------------- */

WRL_API wrl_status wrl_word_count(const char* text, int64_t* out);
WRL_API wrl_status wrl_length_reward(int64_t length, const wrl_length_spec* spec, double* out);
/* Format reward with the default repetition settings (k = 8, threshold 0.8,
 * weight 2). */
WRL_API wrl_status wrl_format_reward(const char* text, wrl_output_mode mode, double* out);
WRL_API wrl_status wrl_bt_pair_loss(double score_chosen, double score_rejected, double* out);
/* Population-std group normalization; `out` holds n values. */
WRL_API wrl_status wrl_group_normalize(const double* rewards, size_t n, double* out);
/* Fused advantages for a group: the mean of the three independently
 * normalized channels. `out` holds n values. */
WRL_API wrl_status wrl_fused_advantages(const wrl_rewards* rewards, size_t n, double* out);
WRL_API wrl_status wrl_clipped_surrogate(double ratio, double advantage, double epsilon,
                                         double* out);
WRL_API wrl_status wrl_elo_expected(double r_a, double r_b, double* out);
WRL_API wrl_status wrl_parse_verdict(const char* text, wrl_verdict* out);
/* *found is 0 and *out untouched when the query has no explicit count. */
WRL_API wrl_status wrl_explicit_length_rule(const char* query, int* found, wrl_length_spec* out);

/* ---- Training configuration -------------------------------------------- */

typedef struct wrl_config wrl_config;

WRL_API wrl_status wrl_config_new(wrl_config** out);
WRL_API wrl_status wrl_config_load(const char* path, wrl_config** out);
WRL_API wrl_status wrl_config_set(wrl_config* config, const char* key, const char* value);
WRL_API wrl_status wrl_config_validate(const wrl_config* config);
WRL_API wrl_status wrl_config_render(const wrl_config* config, char** out);
WRL_API void wrl_config_free(wrl_config* config);

/* ---- Writing reward model ---------------------------------------------- */

typedef struct wrl_writing_rm wrl_writing_rm;

WRL_API wrl_status wrl_writing_rm_load(const char* path, wrl_writing_rm** out);
WRL_API wrl_status wrl_writing_rm_score(const wrl_writing_rm* rm, const char* prompt,
                                        const char* answer, double* out);
WRL_API void wrl_writing_rm_free(wrl_writing_rm* rm);

/* ---- Judge ------------------------------------------------------------- */

typedef struct wrl_judge wrl_judge;

/* spec: "mock:<path>", "live" or "rule". */
WRL_API wrl_status wrl_judge_open(const char* spec, wrl_judge** out);
WRL_API wrl_status wrl_judge_classify(wrl_judge* judge, const char* query, int* writing,
                                      int64_t* lower, int64_t* upper);
/* *unfulfillable set means the judge returned [0, 0] and *out is untouched. */
WRL_API wrl_status wrl_judge_length(wrl_judge* judge, const char* query, int* unfulfillable,
                                    int* rule_violation, wrl_length_spec* out);
WRL_API wrl_status wrl_judge_pairwise(wrl_judge* judge, const char* prompt,
                                      const char* response_a, const char* response_b,
                                      wrl_verdict* out);
WRL_API void wrl_judge_free(wrl_judge* judge);

/* ---- Commands (return process exit codes: 0 ok, 1 input, 2 run) -------- */

typedef struct wrl_train_args {
  const char* config_path; /* may be NULL */
  const char* out_dir;
  const char* judge; /* NULL or "none" for no judge */
  const char* const* override_keys;
  const char* const* override_values;
  size_t n_overrides;
} wrl_train_args;

typedef struct wrl_rm_train_args {
  const char* pairs_path;
  const char* model_out;
  uint64_t seed;
  double holdout;
  int epochs;
} wrl_rm_train_args;

typedef struct wrl_gen_pairs_args {
  const char* out_path;
  size_t count;
  uint64_t seed;
} wrl_gen_pairs_args;

typedef struct wrl_score_args {
  const char* input_path;
  const char* output_path; /* NULL: stdout */
  const char* config_path; /* may be NULL */
  const char* judge;
} wrl_score_args;

typedef struct wrl_named_path {
  const char* name;
  const char* path;
} wrl_named_path;

typedef struct wrl_arena_args {
  const char* prompts_path;
  wrl_named_path candidate;
  const wrl_named_path* baselines;
  size_t n_baselines;
  const char* out_dir;
  const char* judge;
  int threads;
  int online_elo; /* nonzero: online K-factor Elo instead of Bradley-Terry */
} wrl_arena_args;

WRL_API int wrl_cmd_train(const wrl_train_args* args);
WRL_API int wrl_cmd_rm_train(const wrl_rm_train_args* args);
WRL_API int wrl_cmd_gen_pairs(const wrl_gen_pairs_args* args);
WRL_API int wrl_cmd_score(const wrl_score_args* args);
WRL_API int wrl_cmd_arena(const wrl_arena_args* args);

#ifdef __cplusplus
}
#endif

#endif /* WRITERL_WRITERL_H_ */
