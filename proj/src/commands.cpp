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

#include "writerl/commands.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "writerl/error.hpp"
#include "writerl/grpo.hpp"
#include "writerl/judge.hpp"
#include "writerl/policy.hpp"
#include "writerl/rewards.hpp"
#include "writerl/synthetic.hpp"
#include "writerl/text.hpp"
#include "writerl/writing_rm.hpp"

#ifndef WRITERL_VERSION
#define WRITERL_VERSION "0.0.0"
#endif

namespace writerl {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << body;
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    fail(ErrorCode::kIo, "cannot create output directory " + dir.string() +
                             (ec ? ": " + ec.message() : ""));
  }
}

std::optional<std::pair<std::int64_t, std::int64_t>> read_range(const json& j,
                                                                const std::string& where) {
  if (!j.contains("range") || j["range"].is_null()) return std::nullopt;
  const auto& r = j["range"];
  if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer() || !r[1].is_number_integer()) {
    fail(ErrorCode::kParse, where + ": range must be [lower, upper] integers");
  }
  return std::pair{r[0].get<std::int64_t>(), r[1].get<std::int64_t>()};
}

std::optional<std::int64_t> read_max(const json& j, const std::string& where) {
  if (!j.contains("max") || j["max"].is_null()) return std::nullopt;
  if (!j["max"].is_number_integer()) fail(ErrorCode::kParse, where + ": max must be an integer");
  return j["max"].get<std::int64_t>();
}

LengthSpec build_spec(std::int64_t lower, std::int64_t upper, std::optional<std::int64_t> max,
                      const TrainConfig& config) {
  LengthSpec spec{lower, upper, max ? *max : std::max(config.length_cap, 2 * upper)};
  if (!spec.valid()) {
    fail(ErrorCode::kInvalidArgument,
         "invalid length spec [" + std::to_string(lower) + ", " + std::to_string(upper) +
             "] with max " + std::to_string(spec.max));
  }
  return spec;
}

RewardStack make_reward_stack(const TrainConfig& config) {
  RewardStack stack;
  stack.format = format_policy_from(config);
  if (!config.writing_rm.empty()) stack.writing = load_writing_rm(config.writing_rm);
  return stack;
}

TrainConfig config_or_default(const fs::path& path) {
  return path.empty() ? TrainConfig{} : load_config(path);
}

ordered_json metrics_json(std::uint64_t step, const StepMetrics& m) {
  ordered_json j;
  j["step"] = step;
  j["objective"] = m.objective;
  j["length_rm_mean"] = m.length_rm_mean;
  j["writing_rm_mean"] = m.writing_rm_mean;
  j["format_rm_mean"] = m.format_rm_mean;
  if (m.mean_nonoverlong_len == kNoNonOverlong) {
    j["mean_nonoverlong_len"] = nullptr;
  } else {
    j["mean_nonoverlong_len"] = m.mean_nonoverlong_len;
  }
  j["format_compliance_rate"] = m.format_compliance_rate;
  j["clip_fraction"] = m.clip_fraction;
  return j;
}

std::string checkpoint_name(std::uint64_t step) {
  std::ostringstream os;
  os << "policy_step_" << std::setw(6) << std::setfill('0') << step << ".json";
  return os.str();
}

}  // namespace

std::vector<TrainingPrompt> load_training_prompts(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open prompt file " + path.string());
  std::vector<TrainingPrompt> rows;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    TrainingPrompt row;
    try {
      const json j = json::parse(line);
      row.id = j.at("id").get<std::string>();
      row.prompt = j.at("prompt").get<std::string>();
      row.range = read_range(j, where);
      row.max = read_max(j, where);
    } catch (const json::exception& e) {
      fail(ErrorCode::kParse, where + ": " + e.what());
    }
    if (!ids.insert(row.id).second) fail(ErrorCode::kParse, where + ": duplicate id '" + row.id + "'");
    rows.push_back(std::move(row));
  }
  return rows;
}

std::optional<PromptSpec> resolve_prompt(const TrainingPrompt& row, const TrainConfig& config,
                                         Judge* judge) {
  PromptSpec spec{row.id, row.prompt, std::nullopt};
  if (row.range) {
    spec.length_spec = build_spec(row.range->first, row.range->second, row.max, config);
    return spec;
  }
  const auto resolved =
      resolve_length_spec(row.prompt, judge, config.default_lower, config.default_upper);
  if (!resolved.warning.empty()) {
    spdlog::warn("prompt '{}': {}", row.id, resolved.warning);
  }
  if (!resolved.spec) {
    spdlog::warn("prompt '{}' dropped: unfulfillable length request", row.id);
    return std::nullopt;
  }
  spec.length_spec = build_spec(resolved.spec->lower, resolved.spec->upper, row.max, config);
  return spec;
}

json to_json(const RunManifest& m) {
  return json{{"run_id", m.run_id},           {"config", m.config},
              {"code_version", m.code_version}, {"started_at", m.started_at},
              {"finished_at", m.finished_at},   {"status", m.status},
              {"checkpoints", m.checkpoints}};
}

int cmd_train(const TrainArgs& args) {
  TrainConfig config;
  std::vector<PromptSpec> prompts;
  RewardStack stack;
  std::unique_ptr<Judge> judge;
  std::ofstream log;
  const fs::path ckpt_dir = args.out / "checkpoints";
  try {
    config = config_or_default(args.config);
    for (const auto& [k, v] : args.overrides) set_config_value(config, k, v);
    validate(config);
    if (config.prompts.empty()) fail(ErrorCode::kInvalidArgument, "config sets no prompts file");
    if (args.out.empty()) fail(ErrorCode::kInvalidArgument, "no output directory given");
    ensure_dir(ckpt_dir);
    log.open(args.out / "train_log.jsonl", std::ios::binary | std::ios::trunc);
    if (!log) fail(ErrorCode::kIo, "cannot write " + (args.out / "train_log.jsonl").string());

    judge = make_judge(args.judge);
    for (const auto& row : load_training_prompts(config.prompts)) {
      if (auto p = resolve_prompt(row, config, judge.get())) prompts.push_back(std::move(*p));
    }
    if (prompts.empty()) fail(ErrorCode::kInvalidArgument, "no usable training prompts");
    stack = make_reward_stack(config);
  } catch (const Error& e) {
    spdlog::error("train: {}", e.what());
    return kExitInput;
  }

  const std::string rendered = render_config(config);
  RunManifest manifest;
  manifest.run_id = "run-" + text::hex64(text::fnv1a64(rendered));
  manifest.config = rendered;
  manifest.code_version = WRITERL_VERSION;
  manifest.started_at = utc_now();
  manifest.status = "running";

  auto write_manifest = [&] {
    write_text(args.out / "manifest.json", to_json(manifest).dump(2) + "\n");
  };
  ToyPolicy policy = make_initial_policy(config);
  const std::optional<ToyPolicy> reference =
      config.beta > 0.0 ? std::optional<ToyPolicy>(policy) : std::nullopt;
  auto checkpoint = [&](std::uint64_t step) {
    const std::string name = checkpoint_name(step);
    save_policy(policy, ckpt_dir / name);
    manifest.checkpoints.push_back("checkpoints/" + name);
  };

  const std::size_t n = prompts.size();
  const std::size_t batch = std::min<std::size_t>(n, static_cast<std::size_t>(config.batch_prompts));
  try {
    checkpoint(0);
    write_manifest();
    StepMetrics last;
    for (int s = 0; s < config.steps; ++s) {
      std::vector<PromptSpec> window;
      window.reserve(batch);
      for (std::size_t i = 0; i < batch; ++i) {
        window.push_back(prompts[(static_cast<std::size_t>(s) * batch + i) % n]);
      }
      try {
        last = train_step(policy, window, stack, config, static_cast<std::uint64_t>(s),
                          reference ? &*reference : nullptr);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDivergence) throw;
        spdlog::error("train: diverged at step {}: {}", s + 1, e.what());
        save_policy(policy, ckpt_dir / "policy_last_good.json");
        manifest.checkpoints.push_back("checkpoints/policy_last_good.json");
        manifest.status = "diverged";
        manifest.finished_at = utc_now();
        write_manifest();
        return kExitRun;
      }
      const auto step = static_cast<std::uint64_t>(s) + 1;
      log << metrics_json(step, last).dump() << '\n';
      log.flush();
      if (step % static_cast<std::uint64_t>(config.checkpoint_every) == 0 ||
          s + 1 == config.steps) {
        checkpoint(step);
      }
      if (step % 50 == 0 || s + 1 == config.steps) {
        spdlog::info("step {} length_rm {:.4f} format_compliance {:.4f} nonoverlong_len {:.1f}",
                     step, last.length_rm_mean, last.format_compliance_rate,
                     last.mean_nonoverlong_len);
      }
    }
    manifest.status = "completed";
    manifest.finished_at = utc_now();
    write_manifest();
    if (!log) fail(ErrorCode::kIo, "failed writing train_log.jsonl");
    std::cout << "trained " << config.steps << " steps on " << n << " prompts; log "
              << (args.out / "train_log.jsonl").string() << "\n";
  } catch (const Error& e) {
    spdlog::error("train: {}", e.what());
    return e.code() == ErrorCode::kIo || e.code() == ErrorCode::kInvalidArgument ? kExitInput
                                                                                 : kExitRun;
  }
  return kExitOk;
}

int cmd_rm_train(const RmTrainArgs& args) {
  try {
    if (!(args.holdout >= 0.0 && args.holdout < 1.0)) {
      fail(ErrorCode::kInvalidArgument, "holdout fraction must be in [0, 1)");
    }
    if (args.epochs < 1) fail(ErrorCode::kInvalidArgument, "epochs must be >= 1");
    if (args.model_out.empty()) fail(ErrorCode::kInvalidArgument, "no model output path");
    auto data = load_preference_pairs(args.pairs);
    if (data.duplicates_removed > 0) {
      spdlog::warn("removed {} duplicate preference pairs", data.duplicates_removed);
    }
    if (data.pairs.empty()) fail(ErrorCode::kInvalidArgument, "no preference pairs in " + args.pairs.string());

    // Seeded Fisher-Yates over indices; independent of the standard library.
    std::vector<std::size_t> order(data.pairs.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(args.seed);
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i)) % i;
      std::swap(order[i - 1], order[j]);
    }
    const auto n_hold = data.pairs.size() < 2
                            ? std::size_t{0}
                            : static_cast<std::size_t>(args.holdout *
                                                       static_cast<double>(data.pairs.size()));
    std::vector<PreferencePair> train;
    std::vector<PreferencePair> held;
    for (std::size_t k = 0; k < order.size(); ++k) {
      (k < n_hold ? held : train).push_back(data.pairs[order[k]]);
    }

    RmTrainOptions options;
    options.epochs = args.epochs;
    RmTrainReport report;
    const WritingRM model = train_writing_rm(train, options, &report);
    if (!args.model_out.parent_path().empty()) ensure_dir(args.model_out.parent_path());
    save_writing_rm(model, args.model_out);

    std::cout << std::fixed << std::setprecision(4);
    std::cout << "pairs " << data.pairs.size() << " (train " << train.size() << ", held-out "
              << held.size() << ")\n";
    std::cout << "final_loss " << report.final_loss << " after " << report.epochs_run
              << " epochs\n";
    std::cout << "train_accuracy " << pairwise_accuracy(model, train) << "\n";
    if (!held.empty()) {
      std::cout << "heldout_accuracy " << pairwise_accuracy(model, held) << "\n";
    }
    std::cout << "top_features";
    for (const auto& [name, w] : top_weighted_features(model, 3)) {
      std::cout << " " << name << "=" << w;
    }
    std::cout << "\nmodel " << args.model_out.string() << "\n";
  } catch (const Error& e) {
    spdlog::error("rm-train: {}", e.what());
    return e.code() == ErrorCode::kDivergence ? kExitRun : kExitInput;
  }
  return kExitOk;
}

int cmd_gen_pairs(const GenPairsArgs& args) {
  try {
    if (args.count == 0) fail(ErrorCode::kInvalidArgument, "count must be positive");
    if (args.out.empty()) fail(ErrorCode::kInvalidArgument, "no output path");
    if (!args.out.parent_path().empty()) ensure_dir(args.out.parent_path());
    const auto pairs = synthetic_preference_pairs(args.count, args.seed, default_hidden_weights());
    save_preference_pairs(pairs, args.out);
    std::cout << "wrote " << pairs.size() << " pairs to " << args.out.string() << "\n";
  } catch (const Error& e) {
    spdlog::error("gen-pairs: {}", e.what());
    return kExitInput;
  }
  return kExitOk;
}

int cmd_score(const ScoreArgs& args) {
  TrainConfig config;
  RewardStack stack;
  std::unique_ptr<Judge> judge;
  std::ifstream in;
  std::ofstream file_out;
  try {
    config = config_or_default(args.config);
    validate(config);
    stack = make_reward_stack(config);
    judge = make_judge(args.judge);
    in.open(args.input);
    if (!in) fail(ErrorCode::kIo, "cannot open " + args.input.string());
    if (!args.output.empty()) {
      if (!args.output.parent_path().empty()) ensure_dir(args.output.parent_path());
      file_out.open(args.output, std::ios::binary | std::ios::trunc);
      if (!file_out) fail(ErrorCode::kIo, "cannot write " + args.output.string());
    }
  } catch (const Error& e) {
    spdlog::error("score: {}", e.what());
    return kExitInput;
  }
  std::ostream& out = args.output.empty() ? std::cout : file_out;

  std::size_t total = 0;
  std::size_t failed = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    ++total;
    const std::string where = "line " + std::to_string(line_no);
    ordered_json result;
    try {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        fail(ErrorCode::kParse, std::string("invalid JSON: ") + e.what());
      }
      if (!j.is_object() || !j.contains("prompt") || !j["prompt"].is_string() ||
          !j.contains("text") || !j["text"].is_string()) {
        fail(ErrorCode::kParse, "expected string fields prompt and text");
      }
      TrainingPrompt row{"line-" + std::to_string(line_no), j["prompt"].get<std::string>(),
                         read_range(j, where), read_max(j, where)};
      const auto prompt = resolve_prompt(row, config, judge.get());
      if (!prompt) fail(ErrorCode::kInvalidArgument, "prompt has no fulfillable length range");
      const std::string raw = j["text"].get<std::string>();
      Trajectory traj;
      traj.prompt_id = prompt->id;
      traj.raw_text = raw;
      const auto parsed = parse_structured_output(raw, config.mode);
      if (parsed.ok()) {
        traj.think = parsed.output->think;
        traj.answer = parsed.output->answer;
      }
      traj.word_len = word_count(traj.answer ? *traj.answer : raw);
      const RewardVector r = score_trajectory(traj, *prompt, stack);
      result["length"] = r.length;
      result["write"] = r.write;
      result["format"] = r.format;
    } catch (const Error& e) {
      ++failed;
      result = ordered_json{{"error", where + ": " + e.what()}};
    }
    out << result.dump() << '\n';
  }
  out.flush();
  if (total == 0) {
    spdlog::error("score: no input lines in {}", args.input.string());
    return kExitInput;
  }
  if (failed > 0) spdlog::warn("score: {} of {} lines failed", failed, total);
  return failed == total ? kExitInput : kExitOk;
}

int cmd_arena(const ArenaArgs& args) {
  std::vector<ArenaPrompt> prompts;
  std::vector<ModelOutput> outputs;
  std::unique_ptr<Judge> judge;
  std::vector<std::string> baseline_names;
  try {
    if (args.out.empty()) fail(ErrorCode::kInvalidArgument, "no output directory given");
    if (args.baselines.empty()) fail(ErrorCode::kInvalidArgument, "at least one --baseline is required");
    if (args.judge.empty() || args.judge == "none") {
      fail(ErrorCode::kInvalidArgument, "arena needs a judge (--judge mock:<path>, live or rule)");
    }
    prompts = load_arena_prompts(args.prompts);
    if (prompts.empty()) fail(ErrorCode::kInvalidArgument, "no prompts in " + args.prompts.string());
    std::set<std::string> seen{args.candidate.first};
    auto load_model = [&](const std::string& name, const fs::path& path) {
      if (!fs::exists(path)) {
        fail(ErrorCode::kIo, "outputs for model '" + name + "' not found: " + path.string());
      }
      std::size_t found = 0;
      for (auto& o : load_model_outputs(path)) {
        if (o.model != name) continue;
        outputs.push_back(std::move(o));
        ++found;
      }
      if (found == 0) {
        fail(ErrorCode::kInvalidArgument,
             "no outputs for model '" + name + "' in " + path.string());
      }
    };
    load_model(args.candidate.first, args.candidate.second);
    for (const auto& [name, path] : args.baselines) {
      if (!seen.insert(name).second) fail(ErrorCode::kInvalidArgument, "model '" + name + "' listed twice");
      load_model(name, path);
      baseline_names.push_back(name);
    }
    judge = make_judge(args.judge);
    ensure_dir(args.out);
  } catch (const Error& e) {
    spdlog::error("arena: {}", e.what());
    return kExitInput;
  }

  try {
    const OutputTable table = index_outputs(outputs);
    const auto records =
        run_arena(prompts, args.candidate.first, baseline_names, table, *judge, args.threads);
    std::string body;
    std::size_t errored = 0;
    for (const auto& r : records) {
      body += to_json(r).dump() + "\n";
      if (!r.ok()) ++errored;
    }
    write_text(args.out / "records.jsonl", body);

    const auto outcomes = aggregate_records(records);
    const auto rows = win_rate_report(outcomes);
    json report{{"candidate", args.candidate.first},
                {"baselines", baseline_names},
                {"records", records.size()},
                {"errored_records", errored},
                {"win_rates", json::array()}};
    for (const auto& row : rows) report["win_rates"].push_back(to_json(row));

    json leaderboard = json::array();
    if (!outcomes.empty()) {
      EloOptions options;
      options.anchor_models = baseline_names;
      options.method = args.method;
      const auto games = games_from_outcomes(outcomes);
      const EloFit fit = fit_elo(games, options);
      for (const auto& r : fit.ratings) leaderboard.push_back(to_json(r));
      report["elo_method"] = args.method == EloMethod::kOnline ? "online" : "bradley_terry";
      report["elo_warning"] = fit.warning;
      std::cout << std::fixed << std::setprecision(1);
      for (const auto& r : fit.ratings) {
        std::cout << std::left << std::setw(24) << r.model << std::right << std::setw(9) << r.elo
                  << std::setw(7) << r.games << "\n";
      }
    }
    write_text(args.out / "leaderboard.json", leaderboard.dump(2) + "\n");
    write_text(args.out / "report.json", report.dump(2) + "\n");
    std::cout << std::setprecision(3);
    for (const auto& row : rows) {
      std::cout << std::left << std::setw(24) << row.baseline << std::right << " W " << row.wins
                << " T " << row.ties << " L " << row.losses << " win_rate " << row.win_rate
                << "\n";
    }
    if (2 * errored > records.size()) {
      spdlog::error("arena: {} of {} judge calls failed", errored, records.size());
      return kExitRun;
    }
  } catch (const Error& e) {
    spdlog::error("arena: {}", e.what());
    return e.code() == ErrorCode::kInvalidArgument || e.code() == ErrorCode::kIo ? kExitInput
                                                                                 : kExitRun;
  }
  return kExitOk;
}

}  // namespace writerl
