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

#include <random>
#include <string>

#include "test_util.hpp"
#include "writerl/core.hpp"
#include "writerl/error.hpp"
#include "writerl/text.hpp"

using namespace writerl;
using writerl::testing::TempDir;
using writerl::testing::write_file;

TEST_SUITE("core") {
  TEST_CASE("word_count examples") {
    CHECK(word_count("hello world") == 2);
    CHECK(word_count("") == 0);
    CHECK(word_count("你好world") == 3);
    CHECK(word_count("  spaced\tout\n words ") == 3);
    CHECK(word_count("日本語です") == 5);
    CHECK(word_count("你好，世界。") == 4);
  }

  TEST_CASE("word_count is additive over a space join") {
    std::mt19937_64 rng(11);
    const std::vector<std::string> parts = {"alpha", "beta gamma", "你好", "x", "", "中文 text",
                                           "a.b", "  lead", "trail  "};
    for (int i = 0; i < 200; ++i) {
      const auto& a = parts[rng() % parts.size()];
      const auto& b = parts[rng() % parts.size()];
      CHECK(word_count(a + " " + b) == word_count(a) + word_count(b));
    }
  }

  TEST_CASE("parse canonical structure") {
    auto r = parse_structured_output("<think>plan</think><answer>text</answer>");
    REQUIRE(r.ok());
    CHECK(r.output->think == "plan");
    CHECK(r.output->answer == "text");

    auto ws = parse_structured_output("  <think>p</think>\n <answer>a b</answer>\n");
    REQUIRE(ws.ok());
    CHECK(ws.output->answer == "a b");
  }

  TEST_CASE("answer-only mode") {
    auto r = parse_structured_output("<answer>text</answer>", OutputMode::kAnswerOnly);
    REQUIRE(r.ok());
    CHECK(r.output->think.empty());
    CHECK(r.output->answer == "text");
    CHECK(parse_structured_output("<answer>text</answer>").failure ==
          StructureFailure::kMissingTag);
    CHECK(parse_structured_output("<think>p</think><answer>t</answer>", OutputMode::kAnswerOnly)
              .ok());
  }

  TEST_CASE("structure failures carry reasons") {
    CHECK(parse_structured_output("<think>a</think><think>b</think><answer>c</answer>").failure ==
          StructureFailure::kDuplicateTag);
    CHECK(parse_structured_output("<think>a</think><answer>c").failure ==
          StructureFailure::kMissingTag);
    CHECK(parse_structured_output("<answer>c</answer><think>a</think>").failure ==
          StructureFailure::kWrongOrder);
    CHECK(parse_structured_output("<think>a</think><answer>c</answer> extra").failure ==
          StructureFailure::kTrailingContent);
    CHECK(parse_structured_output("pre <think>a</think><answer>c</answer>").failure ==
          StructureFailure::kTrailingContent);
    CHECK(std::string(structure_failure_name(StructureFailure::kDuplicateTag)) == "duplicate-tag");
  }

  TEST_CASE("parse is idempotent on serialized output") {
    for (const char* raw : {"<think>plan it</think><answer>the text</answer>",
                            " <think></think>\n<answer>x</answer>"}) {
      auto first = parse_structured_output(raw);
      REQUIRE(first.ok());
      auto second = parse_structured_output(serialize_structured_output(*first.output));
      REQUIRE(second.ok());
      CHECK(second.output->think == first.output->think);
      CHECK(second.output->answer == first.output->answer);
    }
  }

  TEST_CASE("load_config defaults and overrides") {
    TempDir dir;
    write_file(dir / "a.conf", "# comment\nseed = 7\n");
    const TrainConfig c = load_config(dir / "a.conf");
    CHECK(c.seed == 7);
    CHECK(c.group_size == 32);
    CHECK(c.epsilon == 0.2);
    CHECK(c.beta == 0.0);
    CHECK(c.temperature == 0.8);
    CHECK(c.top_p == 1.0);
  }

  TEST_CASE("load_config rejects bad values and missing files") {
    TempDir dir;
    write_file(dir / "bad.conf", "epsilon = 1.5\n");
    try {
      load_config(dir / "bad.conf");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kInvalidArgument);
      CHECK(std::string(e.what()).find("epsilon") != std::string::npos);
    }
    write_file(dir / "unknown.conf", "bogus = 1\n");
    CHECK_THROWS_AS(load_config(dir / "unknown.conf"), Error);
    write_file(dir / "syntax.conf", "group_size 4\n");
    CHECK_THROWS_AS(load_config(dir / "syntax.conf"), Error);
    try {
      load_config(dir / "missing.conf");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kParse);
    }
  }

  TEST_CASE("render_config round-trips") {
    TempDir dir;
    TrainConfig c;
    set_config_value(c, "group_size", "16");
    set_config_value(c, "lr", "0.125");
    set_config_value(c, "init", "chain");
    set_config_value(c, "mode", "answer");
    set_config_value(c, "init_self_bias", "3.5");
    set_config_value(c, "seed", "18446744073709551615");
    write_file(dir / "c.conf", render_config(c));
    const TrainConfig back = load_config(dir / "c.conf");
    CHECK(render_config(back) == render_config(c));
    CHECK(back.learning_rate == 0.125);
    CHECK(back.seed == 18446744073709551615ULL);
  }

  TEST_CASE("relative paths resolve against the config directory") {
    TempDir dir;
    std::filesystem::create_directories(dir / "cfg");
    write_file(dir / "cfg/x.conf", "prompts = \"../p.jsonl\"\n");
    const TrainConfig c = load_config(dir / "cfg/x.conf");
    CHECK(std::filesystem::path(c.prompts) == (dir.path() / "p.jsonl").lexically_normal());
  }

  TEST_CASE("make_length_spec cap") {
    CHECK(make_length_spec(2700, 3300) == LengthSpec{2700, 3300, 13000});
    CHECK(make_length_spec(6000, 10000).max == 20000);
    CHECK(make_length_spec(40, 60).valid());
  }

  TEST_CASE("utf8 decoding replaces malformed bytes") {
    const auto cps = text::decode_utf8(std::string("a\xff") + "b");
    REQUIRE(cps.size() == 3);
    CHECK(cps[1] == 0xFFFD);
    CHECK(text::encode_utf8(text::decode_utf8("héllo 你好")) == "héllo 你好");
  }
}
