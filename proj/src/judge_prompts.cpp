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

#include <string>
#include <string_view>

#include "writerl/judge.hpp"

namespace writerl {
namespace {

constexpr std::string_view kQuerySlot = "{query}";

constexpr std::string_view kWritingTaskTemplate = R"PROMPT(Task Goal
Given a user query,

1. Decide if it asks for original written content.

2. If NotWriting, stop.

3. If Writing, output a reasonable word-count range "[lower, upper]" (ignore ±10%).

Response Format
- If not writing – respond exactly: NotWriting.
- If writing – respond with only the code block {"range": [lower, upper]}

Heuristics for Range Estimation
1. Depth & Complexity: more analysis → higher upper bound.
2. Scope: multiple sub-topics/sections → longer.
3. Requested Form:
      tweets/notes (0–300); short blog/letter (300–800); school essay (800–1 200); report/article (1200–2500); thesis/proposal/business plan (4000–10000).
4. Explicit Length Clues: honour any word/page requirement if stated.

Few-Shot Examples

Example 1
Query: Write a Weibo post titled “Tips for Preparing for College Final Exams.”
Answer:
{"range": [0, 300]}

Example 2
Query: Translate “Seize the day” into Spanish.
Answer: NotWriting

Example 3
Query: Draft a comprehensive 10-page business plan for a new cat-litter product.
Answer:
{"range": [4000, 6000]}

Query: {query}
Answer:)PROMPT";

constexpr std::string_view kLengthRangeTemplate = R"PROMPT(You are a professional query text–length assessor. Based on the type of the query content, you should:

1. Deeply understand the core requirement of the query (e.g., essay, blog post, summary, outline, thesis section, etc.).
For example, the query “How do I start writing my thesis from scratch” asks for guidance on “how to begin writing a thesis,” so you would estimate a word‑count range of [400, 800], rather than the total words needed to complete the entire thesis [7000, 10000].

2. Choose a lower bound that is a multiple of 100, with a minimum of 0.

3. Choose an upper bound that is a multiple of 100, with a maximum of 12,000.
   If the reasonable range certainly exceeds these limits, output:
   {"range": [0, 0]}

4. Ignore the 10% of extreme length cases to keep the range reasonable for most scenarios, and ensure the difference between upper and lower bounds does not exceed 3,000.

5. If the query contains an explicit word-count requirement, set the range to ±10% of that number.
   - For “write a 2,000-word essay,” output: {"range": [1800, 2200]}
   - For “no more than 2,000 words,” output [1800, 2000]; for “at least 2,000 words,” output [2000, 2200].

6. If the query cannot be fulfilled under the given conditions—for example, “Read and analyze this paper” without providing the paper, or “Analyze a project’s prospects” without specifying the project details—then output: {"range": [0, 0]}

Example:

Input “Write a high school essay” → {"range": [800, 1000]}

Input “Complete an academic paper on green cities” → {"range": [6000, 10000]}

Please process the current query: {query}

Analyze and output the JSON range accordingly.)PROMPT";

constexpr std::string_view kPairwiseSystemPrompt = R"PROMPT(Please act as an impartial judge and evaluate the quality of the written responses provided by two AI assistants to the user’s writing prompt below. You will be given Assistant A’s response and Assistant B’s response. Your job is to determine which assistant's writing is superior.

Evaluate them on the following criteria:
1. Relevance and Completeness: Does the assistant fully respond to the writing prompt? Does the length meet the user's query expectations? Is the content relevant to the topic, and does it provide sufficient depth, length, and detail, rather than drifting off-topic or simplistic?
2. Writing Quality: Evaluate whether the assistant's writing is clear, fluent, and free of obvious grammatical errors. The overall quality of the writing is high, with elegant.
3. Creativity and Originality: If applicable, assess the creativity of the response. Does the assistant offer fresh perspectives, unique insights, or demonstrate a certain level of originality?
4. Specificity and Detail: Determine whether the assistant provides concrete examples or detailed explanations. Properly justified repetition is permissible.
5. Tone and Style: Is the tone appropriate for the writing prompt? Is the writing style consistent throughout? Consider whether it aligns with the expectations of the intended audience or writing purpose.

After evaluating each response, determine which one is superior based on the factors above. Provide your explanation and then select one of the following final verdicts:

- Assistant A is significantly better: [[A>>B]]
- Assistant A is slightly better: [[A>B]]
- Tie, relatively the same: [[A=B]]
- Assistant B is slightly better: [[B>A]]
- Assistant B is significantly better: [[B>>A]]

Example output: My final verdict is tie: [[A=B]].)PROMPT";

std::string fill(std::string_view tmpl, std::string_view query) {
  const auto pos = tmpl.rfind(kQuerySlot);
  std::string out;
  out.reserve(tmpl.size() + query.size());
  out.append(tmpl.substr(0, pos));
  out.append(query);
  out.append(tmpl.substr(pos + kQuerySlot.size()));
  return out;
}

}  // namespace

std::string writing_task_prompt(std::string_view query) {
  return fill(kWritingTaskTemplate, query);
}

std::string length_range_prompt(std::string_view query) {
  return fill(kLengthRangeTemplate, query);
}

std::string_view pairwise_system_prompt() { return kPairwiseSystemPrompt; }

std::string pairwise_user_message(std::string_view prompt, std::string_view response_a,
                                  std::string_view response_b) {
  std::string out;
  out += "<|User Prompt|>\n";
  out += prompt;
  out += "\n\n<|The Start of Assistant A's Answer|>\n";
  out += response_a;
  out += "\n<|The End of Assistant A's Answer|>\n\n<|The Start of Assistant B's Answer|>\n";
  out += response_b;
  out += "\n<|The End of Assistant B's Answer|>";
  return out;
}

ChatRequest classify_request(std::string_view query) {
  return ChatRequest{{{"user", writing_task_prompt(query)}}};
}

ChatRequest length_request(std::string_view query) {
  return ChatRequest{{{"user", length_range_prompt(query)}}};
}

ChatRequest pairwise_request(std::string_view prompt, std::string_view response_a,
                             std::string_view response_b) {
  return ChatRequest{{{"system", std::string(pairwise_system_prompt())},
                      {"user", pairwise_user_message(prompt, response_a, response_b)}}};
}

}  // namespace writerl
