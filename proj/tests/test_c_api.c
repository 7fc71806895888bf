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

/* Exercises the shared library through its C header only. */

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "writerl/writerl.h"

static int failures = 0;

#define EXPECT(cond)                                               \
  do {                                                             \
    if (!(cond)) {                                                 \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                  \
    }                                                              \
  } while (0)

static int near(double a, double b, double tol) { return fabs(a - b) <= tol; }

int main(void) {
  wrl_set_log_level(WRL_LOG_OFF);
  EXPECT(strlen(wrl_version()) > 0);
  EXPECT(strcmp(wrl_status_name(WRL_PARSE), "parse") == 0);

  int64_t n = -1;
  EXPECT(wrl_word_count("hello world", &n) == WRL_OK && n == 2);
  EXPECT(wrl_word_count("\xe4\xbd\xa0\xe5\xa5\xbdworld", &n) == WRL_OK && n == 3);
  EXPECT(wrl_word_count(NULL, &n) == WRL_INVALID_ARGUMENT);
  EXPECT(strlen(wrl_last_error()) > 0);

  wrl_length_spec spec = {2700, 3300, 13000};
  double r = -1;
  EXPECT(wrl_length_reward(3000, &spec, &r) == WRL_OK && r == 1.0);
  EXPECT(wrl_length_reward(1350, &spec, &r) == WRL_OK && near(r, 0.5, 1e-15));
  EXPECT(wrl_length_reward(13001, &spec, &r) == WRL_INVALID_ARGUMENT);

  EXPECT(wrl_format_reward("<think>a</think><answer>Fine text.</answer>", WRL_MODE_THINK, &r) ==
             WRL_OK &&
         r == 1.0);
  EXPECT(wrl_format_reward("<answer>x</answer>", WRL_MODE_THINK, &r) == WRL_OK && r == 0.0);
  EXPECT(wrl_bt_pair_loss(1.0, 1.0, &r) == WRL_OK && near(r, log(2.0), 1e-12));

  double in[3] = {1, 2, 3};
  double out[3];
  EXPECT(wrl_group_normalize(in, 3, out) == WRL_OK && near(out[2], 1.224745, 1e-6));
  EXPECT(wrl_group_normalize(in, 1, out) == WRL_INVALID_ARGUMENT);

  wrl_rewards rw[2] = {{2.0, 0.0, 1.0}, {0.0, 1.0, 0.0}};
  double fused[2];
  EXPECT(wrl_fused_advantages(rw, 2, fused) == WRL_OK && near(fused[0], 1.0 / 3.0, 1e-12));

  EXPECT(wrl_clipped_surrogate(1.5, 1.0, 0.2, &r) == WRL_OK && near(r, 1.2, 1e-12));
  EXPECT(wrl_elo_expected(1400, 1000, &r) == WRL_OK && near(r, 10.0 / 11.0, 1e-12));

  wrl_verdict v;
  EXPECT(wrl_parse_verdict("My final verdict is tie: [[A=B]]", &v) == WRL_OK && v == WRL_TIE);
  EXPECT(wrl_parse_verdict("nothing", &v) == WRL_PARSE);
  EXPECT(strcmp(wrl_verdict_token(WRL_B_MUCH_BETTER), "[[B>>A]]") == 0);

  int found = 0;
  wrl_length_spec ls;
  EXPECT(wrl_explicit_length_rule("write a 2,000-word essay", &found, &ls) == WRL_OK && found &&
         ls.lower == 1800 && ls.upper == 2200);
  EXPECT(wrl_explicit_length_rule("tell me about cats", &found, &ls) == WRL_OK && !found);

  wrl_config* cfg = NULL;
  EXPECT(wrl_config_new(&cfg) == WRL_OK);
  EXPECT(wrl_config_set(cfg, "group_size", "8") == WRL_OK);
  EXPECT(wrl_config_set(cfg, "nope", "1") == WRL_PARSE);
  EXPECT(wrl_config_set(cfg, "epsilon", "1.5") == WRL_OK);
  EXPECT(wrl_config_validate(cfg) == WRL_INVALID_ARGUMENT);
  EXPECT(strstr(wrl_last_error(), "epsilon") != NULL);
  EXPECT(wrl_config_set(cfg, "epsilon", "0.2") == WRL_OK);
  EXPECT(wrl_config_validate(cfg) == WRL_OK);
  char* rendered = NULL;
  EXPECT(wrl_config_render(cfg, &rendered) == WRL_OK && strstr(rendered, "group_size = 8"));
  wrl_string_free(rendered);
  wrl_config_free(cfg);

  wrl_config* missing = NULL;
  EXPECT(wrl_config_load("/nonexistent/writerl.conf", &missing) == WRL_PARSE && missing == NULL);

  wrl_judge* judge = NULL;
  EXPECT(wrl_judge_open("rule", &judge) == WRL_OK);
  int writing = 0;
  int64_t lo = 0, hi = 0;
  EXPECT(wrl_judge_classify(judge, "Translate hello into Spanish.", &writing, &lo, &hi) ==
             WRL_OK &&
         !writing);
  int unful = 0, viol = 0;
  EXPECT(wrl_judge_length(judge, "Write a blog post about tea", &unful, &viol, &ls) == WRL_OK &&
         !unful && ls.upper > ls.lower);
  EXPECT(wrl_judge_pairwise(judge, "x", "Same text.", "Same text.", &v) == WRL_OK &&
         v == WRL_TIE);
  wrl_judge_free(judge);
  EXPECT(wrl_judge_open("bogus", &judge) == WRL_INVALID_ARGUMENT);

  wrl_train_args bad = {NULL, NULL, NULL, NULL, NULL, 0};
  EXPECT(wrl_cmd_train(&bad) == 1);
  EXPECT(wrl_cmd_train(NULL) == 1);

  if (failures) {
    fprintf(stderr, "%d failure(s)\n", failures);
    return 1;
  }
  printf("c api ok\n");
  return 0;
}
