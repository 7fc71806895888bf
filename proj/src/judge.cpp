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

#include "writerl/judge.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "writerl/error.hpp"
#include "writerl/rewards.hpp"
#include "writerl/text.hpp"
#include "writerl/writing_rm.hpp"

namespace writerl {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 5> kVerdictTokens = {"[[A>>B]]", "[[A>B]]", "[[A=B]]",
                                                            "[[B>A]]", "[[B>>A]]"};
constexpr std::array<std::string_view, 5> kVerdictNames = {"A_much_better", "A_better", "tie",
                                                           "B_better", "B_much_better"};

std::string excerpt(std::string_view raw, std::size_t limit = 400) {
  if (raw.size() <= limit) return std::string(raw);
  return std::string(raw.substr(0, limit)) + "...";
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::int64_t parse_count(const std::string& digits) {
  std::string clean;
  for (char c : digits) {
    if (c != ',') clean += c;
  }
  if (clean.empty() || clean.size() > 12) return -1;
  return std::stoll(clean);
}

const std::regex& range_regex() {
  static const std::regex re(R"re(\{\s*"range"\s*:\s*\[\s*(-?\d+)\s*,\s*(-?\d+)\s*\]\s*\})re");
  return re;
}

// Last {"range": [a, b]} in the reply, with its byte offset.
std::optional<std::pair<std::size_t, std::pair<std::int64_t, std::int64_t>>> last_range(
    const std::string& reply) {
  std::optional<std::pair<std::size_t, std::pair<std::int64_t, std::int64_t>>> found;
  for (auto it = std::sregex_iterator(reply.begin(), reply.end(), range_regex());
       it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    found = {static_cast<std::size_t>(m.position(0)),
             {std::stoll(m.str(1)), std::stoll(m.str(2))}};
  }
  return found;
}

}  // namespace

std::string_view verdict_token(Verdict v) { return kVerdictTokens[static_cast<std::size_t>(v)]; }

std::string_view verdict_name(Verdict v) { return kVerdictNames[static_cast<std::size_t>(v)]; }

std::optional<Verdict> verdict_from_name(std::string_view name) {
  for (Verdict v : kAllVerdicts) {
    if (verdict_name(v) == name) return v;
  }
  return std::nullopt;
}

Verdict parse_verdict(std::string_view text) {
  std::optional<Verdict> best;
  std::size_t best_pos = 0;
  for (Verdict v : kAllVerdicts) {
    const auto pos = text.rfind(verdict_token(v));
    if (pos == std::string_view::npos) continue;
    if (!best || pos > best_pos) {
      best = v;
      best_pos = pos;
    }
  }
  if (!best) fail(ErrorCode::kParse, "no verdict found in judge reply: " + excerpt(text));
  return *best;
}

void JudgeEndpoint::validate() const {
  static const std::regex url(R"(^https?://[^/\s]+(/\S*)?$)");
  if (!std::regex_match(base_url, url)) {
    fail(ErrorCode::kInvalidArgument, "judge base_url must be an http(s) URL: '" + base_url + "'");
  }
  if (model_name.empty()) fail(ErrorCode::kInvalidArgument, "judge model_name is empty");
  if (timeout.count() <= 0) fail(ErrorCode::kInvalidArgument, "judge timeout must be positive");
  if (max_retries < 0) fail(ErrorCode::kInvalidArgument, "judge max_retries must be >= 0");
  if (max_in_flight < 1 || max_in_flight > 1024) {
    fail(ErrorCode::kInvalidArgument, "judge max_in_flight must be in [1, 1024]");
  }
  if (backoff.count() < 0) fail(ErrorCode::kInvalidArgument, "judge backoff must be >= 0");
}

JudgeEndpoint JudgeEndpoint::from_env() {
  JudgeEndpoint ep;
  if (const char* v = std::getenv("JUDGE_ENDPOINT"); v && *v) ep.base_url = v;
  if (const char* v = std::getenv("JUDGE_API_KEY"); v) ep.api_key = v;
  if (const char* v = std::getenv("JUDGE_MODEL"); v && *v) ep.model_name = v;
  if (const char* v = std::getenv("JUDGE_TIMEOUT_SECS"); v && *v) {
    char* end = nullptr;
    const double secs = std::strtod(v, &end);
    if (end == v || *end != '\0' || !(secs > 0.0) || !std::isfinite(secs)) {
      fail(ErrorCode::kInvalidArgument,
           std::string("JUDGE_TIMEOUT_SECS must be a positive number, got '") + v + "'");
    }
    ep.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(secs * 1000.0)));
  }
  ep.validate();
  return ep;
}

std::string request_hash(const ChatRequest& request) {
  json messages = json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  const std::string canonical = messages.dump(-1, ' ', false, json::error_handler_t::replace);
  return text::hex64(text::fnv1a64(canonical));
}

// ---------------------------------------------------------------------------
// HTTP backend

HttpChatBackend::HttpChatBackend(JudgeEndpoint endpoint)
    : endpoint_(std::move(endpoint)), in_flight_(1) {
  endpoint_.validate();
  static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  std::regex_match(endpoint_.base_url, m, url);
  scheme_host_port_ = m.str(1);
  path_prefix_ = m.str(2);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  // counting_semaphore has no setter; release the remaining permits.
  in_flight_.release(endpoint_.max_in_flight - 1);
}

std::string HttpChatBackend::complete(const ChatRequest& request) {
  struct Permit {
    std::counting_semaphore<1024>& sem;
    explicit Permit(std::counting_semaphore<1024>& s) : sem(s) { sem.acquire(); }
    ~Permit() { sem.release(); }
  } permit(in_flight_);

  json body;
  body["model"] = endpoint_.model_name;
  body["temperature"] = 0.0;
  body["messages"] = json::array();
  for (const auto& m : request.messages) {
    body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  }
  const std::string payload = body.dump(-1, ' ', false, json::error_handler_t::replace);
  const std::string path = path_prefix_ + "/chat/completions";
  const std::string id = request_hash(request);

  httplib::Headers headers;
  if (!endpoint_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + endpoint_.api_key);
  }

  std::string last_error;
  for (int attempt = 0; attempt <= endpoint_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(endpoint_.backoff * (1LL << std::min(attempt - 1, 16)));
    }
    spdlog::debug("judge request {} attempt {} POST {}{} authorization={} body={}", id, attempt,
                  scheme_host_port_, path, endpoint_.api_key.empty() ? "none" : "Bearer ***",
                  payload);
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(endpoint_.timeout);
    client.set_read_timeout(endpoint_.timeout);
    client.set_write_timeout(endpoint_.timeout);
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      spdlog::debug("judge request {} failed: {}", id, last_error);
      continue;
    }
    spdlog::debug("judge response {} status {} body={}", id, res->status, res->body);
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + excerpt(res->body, 200);
      continue;
    }
    if (res->status != 200) {
      fail(ErrorCode::kTransport,
           "judge returned HTTP " + std::to_string(res->status) + ": " + excerpt(res->body, 200));
    }
    try {
      const json reply = json::parse(res->body);
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      fail(ErrorCode::kParse,
           std::string("malformed chat completion response: ") + e.what() + ": " +
               excerpt(res->body, 200));
    }
  }
  fail(ErrorCode::kTransport, "judge request failed after " +
                                  std::to_string(endpoint_.max_retries + 1) +
                                  " attempts: " + last_error);
}

// ---------------------------------------------------------------------------
// Mock backend

std::shared_ptr<MockChatBackend> MockChatBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open mock judge script " + path.string());
  auto mock = std::make_shared<MockChatBackend>();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorCode::kParse, where + ": invalid JSON: " + e.what());
    }
    if (!j.is_object()) fail(ErrorCode::kParse, where + ": expected a JSON object");
    auto str = [&](const char* key) -> std::string {
      if (!j.contains(key) || !j[key].is_string()) {
        fail(ErrorCode::kParse, where + ": missing string field '" + key + "'");
      }
      return j[key].get<std::string>();
    };
    std::string hash;
    if (j.contains("hash")) {
      hash = str("hash");
    } else if (j.contains("kind")) {
      const std::string kind = str("kind");
      if (kind == "classify") {
        hash = request_hash(classify_request(str("query")));
      } else if (kind == "length") {
        hash = request_hash(length_request(str("query")));
      } else if (kind == "pairwise") {
        hash = request_hash(pairwise_request(str("prompt"), str("a"), str("b")));
      } else {
        fail(ErrorCode::kParse, where + ": unknown kind '" + kind + "'");
      }
    } else {
      fail(ErrorCode::kParse, where + ": needs 'hash' or 'kind'");
    }
    if (j.contains("error")) {
      mock->add_error(hash, str("error"));
    } else {
      mock->add_reply(hash, str("reply"));
    }
  }
  return mock;
}

void MockChatBackend::add_reply(std::string hash, std::string reply) {
  std::lock_guard lock(mu_);
  entries_[std::move(hash)] = Entry{std::move(reply), std::nullopt};
}

void MockChatBackend::add_error(std::string hash, std::string message) {
  std::lock_guard lock(mu_);
  entries_[std::move(hash)] = Entry{"", std::move(message)};
}

std::string MockChatBackend::complete(const ChatRequest& request) {
  const std::string hash = request_hash(request);
  std::lock_guard lock(mu_);
  ++calls_;
  auto it = entries_.find(hash);
  if (it == entries_.end()) it = entries_.find("*");
  if (it == entries_.end()) {
    fail(ErrorCode::kJudge, "mock judge has no reply for request " + hash);
  }
  if (it->second.error) fail(ErrorCode::kTransport, *it->second.error);
  return it->second.reply;
}

std::size_t MockChatBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

// ---------------------------------------------------------------------------
// Reply parsing

TaskClassification parse_classification(std::string_view reply) {
  TaskClassification out;
  out.raw = std::string(reply);
  const auto range = last_range(out.raw);
  const auto not_writing = out.raw.rfind("NotWriting");
  if (range && (not_writing == std::string::npos || range->first > not_writing)) {
    const auto [lo, hi] = range->second;
    if (lo < 0 || hi < lo) {
      fail(ErrorCode::kParse, "judge returned an invalid range: " + excerpt(reply));
    }
    out.writing = true;
    out.range = range->second;
    return out;
  }
  if (not_writing != std::string::npos) return out;
  fail(ErrorCode::kParse, "unparseable task classification: " + excerpt(reply));
}

LengthPrediction parse_length_prediction(std::string_view reply) {
  LengthPrediction out;
  out.raw = std::string(reply);
  const auto range = last_range(out.raw);
  if (!range) fail(ErrorCode::kParse, "no length range in judge reply: " + excerpt(reply));
  const auto [lo, hi] = range->second;
  if (lo == 0 && hi == 0) {
    out.unfulfillable = true;
    return out;
  }
  if (lo < 0 || hi < lo || hi == 0) {
    fail(ErrorCode::kParse, "judge returned an invalid range: " + excerpt(reply));
  }
  std::vector<std::string> problems;
  if (lo % 100 != 0 || hi % 100 != 0) problems.emplace_back("bounds not multiples of 100");
  if (hi > 12000) problems.emplace_back("upper bound above 12000");
  if (hi - lo > 3000) problems.emplace_back("range wider than 3000");
  if (!problems.empty()) {
    out.rule_violation = true;
    out.warning = "length range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]:";
    for (std::size_t i = 0; i < problems.size(); ++i) {
      out.warning += (i == 0 ? " " : "; ") + problems[i];
    }
  }
  out.spec = make_length_spec(lo, hi);
  return out;
}

// ---------------------------------------------------------------------------
// LLM judge

LlmJudge::LlmJudge(std::shared_ptr<ChatBackend> backend) : backend_(std::move(backend)) {
  if (!backend_) fail(ErrorCode::kInvalidArgument, "LlmJudge needs a backend");
}

TaskClassification LlmJudge::classify_writing_task(std::string_view query) {
  return parse_classification(backend_->complete(classify_request(query)));
}

LengthPrediction LlmJudge::predict_length_range(std::string_view query) {
  return parse_length_prediction(backend_->complete(length_request(query)));
}

Verdict LlmJudge::pairwise_judge(std::string_view prompt, std::string_view response_a,
                                 std::string_view response_b) {
  return parse_verdict(backend_->complete(pairwise_request(prompt, response_a, response_b)));
}

// ---------------------------------------------------------------------------
// Explicit length rule

namespace {

constexpr const char* kNum = R"((\d{1,3}(?:,\d{3})+|\d+))";

struct LengthPattern {
  std::regex re;
  enum Kind { kPlain, kAtMost, kAtLeast, kSpan } kind;
};

const std::vector<LengthPattern>& length_patterns() {
  static const std::vector<LengthPattern> patterns = [] {
    const std::string num = kNum;
    const std::string words = R"([\s-]*words?\b)";
    const auto icase = std::regex::ECMAScript | std::regex::icase;
    std::vector<LengthPattern> p;
    p.push_back({std::regex(num + R"(\s*(?:-|–|to)\s*)" + num + words, icase),
                 LengthPattern::kSpan});
    p.push_back({std::regex(R"((?:no more than|not more than|at most|up to|no longer than|)"
                            R"(not (?:to )?exceed(?:ing)?|within|under|less than|fewer than|)"
                            R"(maximum of|max(?:imum)?)\s+)" +
                                num + words,
                            icase),
                 LengthPattern::kAtMost});
    p.push_back({std::regex(R"((?:at least|no less than|no fewer than|not less than|)"
                            R"(minimum of|min(?:imum)?|more than|over)\s+)" +
                                num + words,
                            icase),
                 LengthPattern::kAtLeast});
    p.push_back({std::regex(num + words, icase), LengthPattern::kPlain});
    p.push_back({std::regex(R"((?:不少于|至少|不低于)\s*)" + num + R"(\s*字)"),
                 LengthPattern::kAtLeast});
    p.push_back({std::regex(R"((?:不超过|不多于|最多|至多)\s*)" + num + R"(\s*字)"),
                 LengthPattern::kAtMost});
    p.push_back({std::regex(num + R"(\s*字以上)"), LengthPattern::kAtLeast});
    p.push_back({std::regex(num + R"(\s*字(?:以内|以下))"), LengthPattern::kAtMost});
    p.push_back({std::regex(num + R"(\s*字)"), LengthPattern::kPlain});
    return p;
  }();
  return patterns;
}

}  // namespace

std::optional<LengthSpec> explicit_length_rule(std::string_view query) {
  const std::string q(query);
  for (const auto& pattern : length_patterns()) {
    std::smatch m;
    if (!std::regex_search(q, m, pattern.re)) continue;
    const std::int64_t n = parse_count(m.str(1));
    if (n <= 0) continue;
    const auto lo10 = static_cast<std::int64_t>(std::llround(0.9 * static_cast<double>(n)));
    const auto hi10 = static_cast<std::int64_t>(std::llround(1.1 * static_cast<double>(n)));
    switch (pattern.kind) {
      case LengthPattern::kPlain:
        return make_length_spec(lo10, hi10);
      case LengthPattern::kAtMost:
        return make_length_spec(lo10, n);
      case LengthPattern::kAtLeast:
        return make_length_spec(n, hi10);
      case LengthPattern::kSpan: {
        const std::int64_t hi = parse_count(m.str(2));
        if (hi < n) continue;
        return make_length_spec(n, hi);
      }
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Rule judge

namespace {

bool contains_any(const std::string& haystack, std::initializer_list<std::string_view> needles) {
  return std::any_of(needles.begin(), needles.end(), [&](std::string_view n) {
    return haystack.find(n) != std::string::npos;
  });
}

bool starts_with_any(const std::string& s, std::initializer_list<std::string_view> prefixes) {
  return std::any_of(prefixes.begin(), prefixes.end(),
                     [&](std::string_view p) { return s.rfind(p, 0) == 0; });
}

std::optional<std::int64_t> page_count(const std::string& lowered) {
  static const std::regex re(R"((\d+)[\s-]*pages?\b)");
  std::smatch m;
  if (!std::regex_search(lowered, m, re)) return std::nullopt;
  return parse_count(m.str(1));
}

// Requested-form table; nullopt when nothing matches.
std::optional<std::pair<std::int64_t, std::int64_t>> form_range(const std::string& q) {
  if (auto pages = page_count(q); pages && *pages > 0) {
    return std::pair{400 * *pages, 600 * *pages};
  }
  if (contains_any(q, {"thesis", "dissertation", "proposal", "business plan", "academic paper"})) {
    return std::pair<std::int64_t, std::int64_t>{4000, 10000};
  }
  if (contains_any(q, {"report", "article", "paper"})) {
    return std::pair<std::int64_t, std::int64_t>{1200, 2500};
  }
  if (contains_any(q, {"essay", "作文"})) return std::pair<std::int64_t, std::int64_t>{800, 1200};
  if (contains_any(q, {"blog", "letter", "speech", "review", "信"})) {
    return std::pair<std::int64_t, std::int64_t>{300, 800};
  }
  if (contains_any(q, {"tweet", "note", "weibo", "post", "caption", "slogan", "poem", "微博"})) {
    return std::pair<std::int64_t, std::int64_t>{0, 300};
  }
  return std::nullopt;
}

bool looks_writing(const std::string& q) {
  if (starts_with_any(q, {"translate", "calculate", "solve", "convert", "compute", "what is",
                          "what's", "how many", "how much", "debug", "fix ", "翻译", "计算"})) {
    return false;
  }
  return contains_any(q, {"write", "draft", "compose", "create", "essay", "story", "poem",
                          "article", "blog", "post", "letter", "report", "proposal", "plan",
                          "thesis", "paper", "speech", "script", "narrative", "写", "作文", "文章"});
}

}  // namespace

TaskClassification RuleJudge::classify_writing_task(std::string_view query) {
  TaskClassification out;
  const std::string q = lower_ascii(query);
  if (!looks_writing(q)) {
    out.raw = "NotWriting";
    return out;
  }
  out.writing = true;
  if (auto spec = explicit_length_rule(query)) {
    out.range = std::pair{spec->lower, spec->upper};
  } else if (auto form = form_range(q)) {
    out.range = form;
  } else {
    out.range = std::pair<std::int64_t, std::int64_t>{300, 1200};
  }
  out.raw = json{{"range", {out.range->first, out.range->second}}}.dump();
  return out;
}

LengthPrediction RuleJudge::predict_length_range(std::string_view query) {
  const std::string q = lower_ascii(query);
  std::int64_t lo = 300;
  std::int64_t hi = 1200;
  if (contains_any(q, {"this paper", "this article", "this document", "the attached",
                       "the following text"}) &&
      query.size() < 200) {
    lo = hi = 0;
  } else if (auto spec = explicit_length_rule(query)) {
    lo = spec->lower;
    hi = spec->upper;
  } else if (auto form = form_range(q)) {
    lo = form->first / 100 * 100;
    hi = std::min<std::int64_t>(12000, (form->second + 99) / 100 * 100);
    hi = std::min(hi, lo + 3000);
  }
  return parse_length_prediction(json{{"range", {lo, hi}}}.dump());
}

Verdict RuleJudge::pairwise_judge(std::string_view prompt, std::string_view response_a,
                                  std::string_view response_b) {
  WritingRM heuristic;
  heuristic.weights = {0.5, 0.5, 2.0, 0.0, -3.0, 0.3, 1.0};
  const auto target = explicit_length_rule(prompt);
  auto score = [&](std::string_view response) {
    double s = writing_rm_score(heuristic, prompt, response);
    if (target) {
      const std::int64_t n = std::min(word_count(response), target->max);
      s += 2.0 * length_reward(n, *target);
    }
    return s;
  };
  const double d = score(response_a) - score(response_b);
  if (std::fabs(d) < 0.05) return Verdict::kTie;
  if (d >= 0.5) return Verdict::kAMuchBetter;
  if (d > 0.0) return Verdict::kABetter;
  if (d <= -0.5) return Verdict::kBMuchBetter;
  return Verdict::kBBetter;
}

std::unique_ptr<Judge> make_judge(std::string_view spec) {
  if (spec.empty() || spec == "none") return nullptr;
  if (spec == "rule") return std::make_unique<RuleJudge>();
  if (spec == "live") {
    return std::make_unique<LlmJudge>(
        std::make_shared<HttpChatBackend>(JudgeEndpoint::from_env()));
  }
  if (spec.rfind("mock:", 0) == 0) {
    const auto path = spec.substr(5);
    if (path.empty()) fail(ErrorCode::kInvalidArgument, "--judge mock: needs a script path");
    return std::make_unique<LlmJudge>(MockChatBackend::from_file(std::string(path)));
  }
  fail(ErrorCode::kInvalidArgument,
       "unknown judge '" + std::string(spec) + "' (expected mock:<path>, live, rule or none)");
}

const char* length_source_name(LengthSource source) {
  switch (source) {
    case LengthSource::kExplicit:
      return "explicit";
    case LengthSource::kJudge:
      return "judge";
    case LengthSource::kDefault:
      return "default";
    case LengthSource::kUnfulfillable:
      return "unfulfillable";
  }
  return "unknown";
}

ResolvedLength resolve_length_spec(std::string_view query, Judge* judge,
                                   std::int64_t default_lower, std::int64_t default_upper) {
  ResolvedLength out;
  if (auto spec = explicit_length_rule(query)) {
    out.spec = spec;
    out.source = LengthSource::kExplicit;
    return out;
  }
  std::string reason = "no judge configured";
  if (judge != nullptr) {
    try {
      auto pred = judge->predict_length_range(query);
      if (pred.unfulfillable) {
        out.source = LengthSource::kUnfulfillable;
        out.warning = "judge marked the query unfulfillable";
        return out;
      }
      out.spec = pred.spec;
      out.source = LengthSource::kJudge;
      out.warning = pred.warning;
      return out;
    } catch (const Error& e) {
      reason = std::string("judge failed: ") + e.what();
    }
  }
  out.spec = make_length_spec(default_lower, default_upper);
  out.source = LengthSource::kDefault;
  out.warning = reason + "; using default range [" + std::to_string(default_lower) + ", " +
                std::to_string(default_upper) + "]";
  return out;
}

}  // namespace writerl
