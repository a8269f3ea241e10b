// Copyright 2026 The proact Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "proact/streaming.hpp"

#include <chrono>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "proact/error.hpp"

namespace proact::stream {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void append(std::vector<int>& dst, std::span<const int> src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

}  // namespace

std::string UtteranceSegment::rendered() const {
  if (silent) return std::string(text::kSilencePlaceholder);
  if (continues) return text.empty() ? "..." : text + " ...";
  return text;
}

std::optional<double> ChunkTiming::token_s() const {
  if (tokens == 0) return std::nullopt;
  return forward_s / tokens;
}

std::vector<int> serialize_chunk(const ChunkInput& chunk,
                                 const text::Vocab& vocab) {
  const auto& sp = vocab.special();
  std::vector<int> out;
  out.push_back(sp.history_start);
  if (chunk.history) append(out, vocab.encode(*chunk.history));
  out.push_back(sp.history_end);
  out.push_back(sp.vision_bos);
  for (int v : chunk.visual) out.push_back(vocab.visual(v));
  out.push_back(sp.vision_eos);
  out.push_back(sp.query_start);
  if (chunk.query) append(out, vocab.encode(*chunk.query));
  out.push_back(sp.query_end);
  out.push_back(sp.flag);
  return out;
}

Engine::Engine(const model::Transformer& model, const text::Vocab& vocab,
               EngineConfig cfg, const model::RawKeyTap* tap)
    : model_(model),
      vocab_(vocab),
      cfg_(std::move(cfg)),
      tap_(tap),
      cache_(model.make_cache(cfg_.window > 0 ? cfg_.window
                                              : model.config().window)) {
  if (vocab.size() != model.config().vocab_size) {
    throw Error(ErrorCode::kInvalidConfig,
                "vocabulary size does not match the model");
  }
  if (cfg_.frame_tokens < 1 || cfg_.fps < 1) {
    throw Error(ErrorCode::kInvalidConfig, "frame budget must be positive");
  }
  cfg_.window = cache_.window();
  const auto& sp = vocab.special();
  std::vector<int> system = {sp.im_start, sp.role_system};
  append(system, vocab.encode(cfg_.system_prompt));
  system.push_back(sp.im_end);
  model_.prefill(system, cache_, kv::Segment::kSystem, tap_);
  transcript_ = system;
}

std::vector<int> Engine::user_turn(const ChunkInput& chunk) {
  if (last_t_ && chunk.t <= *last_t_) {
    throw Error(ErrorCode::kPositionOrder,
                fmt::format("chunk t={} does not follow t={}", chunk.t,
                            *last_t_));
  }
  const auto budget = static_cast<std::size_t>(cfg_.frame_tokens) *
                      static_cast<std::size_t>(cfg_.fps);
  if (chunk.visual.size() > budget) {
    throw Error(ErrorCode::kShape,
                fmt::format("chunk t={} carries {} visual tokens, budget {}",
                            chunk.t, chunk.visual.size(), budget));
  }
  const auto& sp = vocab_.special();
  std::vector<int> turn = {sp.im_start, sp.role_user};
  append(turn, serialize_chunk(chunk, vocab_));
  turn.push_back(sp.im_end);
  return turn;
}

std::vector<kv::EvictionReport> Engine::reserve(std::int64_t turn_len) {
  // user turn + <|im_start|> assistant + budget + "..." + <|im_end|>
  const std::int64_t worst = turn_len + model_.config().gen_budget + 4;
  return cache_.maybe_evict(worst, model_.freqs());
}

model::ForwardResult Engine::feed(std::span<const int> tokens) {
  append(transcript_, tokens);
  return model_.prefill(tokens, cache_, kv::Segment::kStreaming, tap_);
}

StepRecord Engine::step(const ChunkInput& chunk, double tau) {
  const auto start = Clock::now();
  const auto& sp = vocab_.special();
  const int budget = model_.config().gen_budget;

  StepRecord rec;
  rec.t = chunk.t;
  const std::vector<int> turn = user_turn(chunk);

  const auto ingest_start = Clock::now();
  rec.evictions = reserve(static_cast<std::int64_t>(turn.size()));
  const model::ForwardResult ingested = feed(turn);
  rec.timing.cache_s = seconds_since(ingest_start);
  last_t_ = chunk.t;

  const auto forward_start = Clock::now();
  const model::FlagState flag =
      model::flag_hidden(ingested, turn, sp.flag, model_.config().n_layers);
  rec.p = model::response_score(flag, model_.weights().head);
  rec.action = model::decide(rec.p, tau);

  const int prefix[2] = {sp.im_start, sp.role_assistant};
  model::Vec logits = feed(prefix).last_logits;
  if (rec.action == model::Action::kSilence) {
    const int fill[2] = {sp.ellipsis, sp.im_end};
    feed(fill);
    rec.segment = UtteranceSegment{};
    in_utterance_ = false;
  } else {
    std::vector<int> words;
    bool continues = true;
    while (static_cast<int>(words.size()) < budget) {
      // Greedy over word tokens; the turn may only close once it has content.
      int best = -1;
      double best_logit = -std::numeric_limits<double>::infinity();
      for (int id = 0; id < logits.size(); ++id) {
        const bool allowed =
            vocab_.is_word(id) ||
            (!words.empty() && (id == sp.im_end || id == sp.ellipsis));
        if (allowed && logits(id) > best_logit) {
          best_logit = logits(id);
          best = id;
        }
      }
      if (best < 0) {
        throw Error(ErrorCode::kInvalidConfig,
                    "vocabulary has no word tokens to generate");
      }
      if (best == sp.im_end) {
        continues = false;
        break;
      }
      if (best == sp.ellipsis) break;
      words.push_back(best);
      logits = model_.decode_step(best, cache_, tap_);
      transcript_.push_back(best);
    }
    if (continues) {
      const int close[2] = {sp.ellipsis, sp.im_end};
      feed(close);
    } else {
      const int close[1] = {sp.im_end};
      feed(close);
    }
    rec.segment.silent = false;
    rec.segment.continues = continues;
    rec.segment.text = vocab_.decode(words);
    rec.timing.tokens = static_cast<int>(words.size());
    in_utterance_ = continues;
  }
  rec.timing.forward_s = seconds_since(forward_start);
  rec.timing.chunk_s = seconds_since(start);
  return rec;
}

ForcedStep Engine::step_forced(const ChunkInput& chunk,
                               const std::optional<std::string>& reply) {
  const auto& sp = vocab_.special();
  const std::vector<int> turn = user_turn(chunk);
  reserve(static_cast<std::int64_t>(turn.size()));
  const model::ForwardResult ingested = feed(turn);
  last_t_ = chunk.t;

  ForcedStep out;
  out.flag =
      model::flag_hidden(ingested, turn, sp.flag, model_.config().n_layers);
  out.flag.chunk_index = chunk.t;
  out.p = model::response_score(out.flag, model_.weights().head);

  std::vector<int> assistant = {sp.im_start, sp.role_assistant};
  std::vector<int> reply_ids;
  if (reply) reply_ids = vocab_.encode(*reply);
  out.active = reply.has_value() && !reply_ids.empty() &&
               !(reply_ids.size() == 1 && reply_ids[0] == sp.ellipsis);
  if (!out.active) reply_ids = {sp.ellipsis};
  const auto budget = static_cast<std::size_t>(model_.config().gen_budget) + 1;
  if (reply_ids.size() > budget) reply_ids.resize(budget);
  append(assistant, reply_ids);
  assistant.push_back(sp.im_end);
  const model::ForwardResult turn_states = feed(assistant);

  if (out.active) {
    // Column j predicts token j + 1; supervise the reply and the closing tag.
    const model::Mat& last = turn_states.hidden.back();
    const auto n_targets = static_cast<Eigen::Index>(reply_ids.size() + 1);
    out.lm_features.resize(model_.config().d_model, n_targets);
    for (Eigen::Index j = 0; j < n_targets; ++j) {
      out.lm_features.col(j) = model_.final_features(last.col(j + 1));
      out.lm_targets.push_back(assistant[static_cast<std::size_t>(j + 2)]);
    }
  }
  return out;
}

StreamRunRecord run_stream(const model::Transformer& model,
                           const text::Vocab& vocab,
                           std::span<const ChunkInput> chunks,
                           const EngineConfig& cfg,
                           const model::RawKeyTap* tap) {
  StreamRunRecord record;
  record.frame_tokens = cfg.frame_tokens;
  if (chunks.empty()) {
    record.window = cfg.window > 0 ? cfg.window : model.config().window;
    return record;
  }
  Engine engine(model, vocab, cfg, tap);
  record.window = engine.cache().window();
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    try {
      record.steps.push_back(engine.step(chunks[i]));
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("chunk {} (t={}): {}", i, chunks[i].t,
                                        e.detail()));
    }
  }
  record.transcript = engine.transcript();
  return record;
}

ProfileRow profile_row(const StreamRunRecord& record) {
  if (record.steps.empty()) {
    throw Error(ErrorCode::kUndefinedMetric, "cannot profile an empty run");
  }
  ProfileRow row;
  row.frame_tokens = record.frame_tokens;
  row.window = record.window;
  double gen_time = 0.0;
  long gen_tokens = 0;
  for (const auto& s : record.steps) {
    row.cache_s += s.timing.cache_s;
    row.forward_s += s.timing.forward_s;
    row.chunk_s += s.timing.chunk_s;
    if (s.timing.tokens > 0) {
      gen_time += s.timing.forward_s;
      gen_tokens += s.timing.tokens;
    }
  }
  const auto n = static_cast<double>(record.steps.size());
  row.cache_s /= n;
  row.forward_s /= n;
  row.chunk_s /= n;
  if (gen_tokens > 0) row.token_s = gen_time / static_cast<double>(gen_tokens);
  return row;
}

std::string profile_table(std::span<const ProfileRow> rows) {
  std::string out = fmt::format("{:>6} {:>7} {:>9} {:>9} {:>9} {:>10}\n",
                                "Frame", "WS", "Cache", "Forward", "Chunk",
                                "Token");
  for (const auto& r : rows) {
    out += fmt::format("{:>6} {:>7} {:>9.4f} {:>9.4f} {:>9.4f} {:>10}\n",
                       r.frame_tokens, r.window, r.cache_s, r.forward_s,
                       r.chunk_s,
                       r.token_s ? fmt::format("{:.6f}", *r.token_s) : "-");
  }
  return out;
}

LintResult lint_context(std::span<const int> transcript,
                        const text::Vocab& vocab) {
  const auto& sp = vocab.special();
  LintResult res;
  std::size_t i = 0;
  auto fail = [&](const std::string& msg) {
    res.ok = false;
    res.message = fmt::format("token {}: {}", i, msg);
    return res;
  };
  auto expect = [&](int id) {
    if (i >= transcript.size() || transcript[i] != id) return false;
    ++i;
    return true;
  };
  // Scans to the next <|im_end|>, returning the turn body.
  auto body = [&]() -> std::optional<std::span<const int>> {
    const std::size_t begin = i;
    while (i < transcript.size() && transcript[i] != sp.im_end) {
      if (transcript[i] == sp.im_start) return std::nullopt;
      ++i;
    }
    if (i >= transcript.size()) return std::nullopt;
    auto out = transcript.subspan(begin, i - begin);
    ++i;
    return out;
  };

  if (!expect(sp.im_start) || !expect(sp.role_system)) {
    return fail("context must open with a system turn");
  }
  if (!body()) return fail("unterminated system turn");

  while (i < transcript.size()) {
    if (!expect(sp.im_start) || !expect(sp.role_user)) {
      return fail("expected a user turn");
    }
    auto user = body();
    if (!user) return fail("unterminated user turn");
    // delimiters must appear once each, in template order, FLAG last
    const int order[7] = {sp.history_start, sp.history_end, sp.vision_bos,
                          sp.vision_eos,    sp.query_start, sp.query_end,
                          sp.flag};
    std::size_t next = 0;
    for (int tok : *user) {
      if (vocab.is_special(tok) && tok != sp.unk && tok != sp.ellipsis &&
          tok != sp.role_user && tok != sp.role_system &&
          tok != sp.role_assistant) {
        if (next >= 7 || tok != order[next]) {
          return fail("user content delimiters out of order");
        }
        ++next;
      }
    }
    if (next != 7 || user->back() != sp.flag) {
      return fail("user content must end with a single FLAG");
    }
    ++res.user_turns;

    if (!expect(sp.im_start) || !expect(sp.role_assistant)) {
      return fail("user turn not followed by an assistant turn");
    }
    auto reply = body();
    if (!reply) return fail("unterminated assistant turn");
    if (reply->empty()) return fail("empty assistant turn");
    if (reply->size() == 1 && reply->front() == sp.ellipsis) {
      ++res.silent_turns;
    } else {
      for (std::size_t k = 0; k < reply->size(); ++k) {
        const int tok = (*reply)[k];
        const bool last = k + 1 == reply->size();
        if (tok == sp.ellipsis ? !last : vocab.is_special(tok) && tok != sp.unk) {
          return fail("assistant turn carries structural tokens");
        }
      }
    }
    ++res.assistant_turns;
  }
  return res;
}

ChunkInput parse_chunk(std::string_view json_line) {
  ChunkInput c;
  try {
    auto j = nlohmann::json::parse(json_line);
    c.t = j.at("t").get<std::int64_t>();
    c.visual = j.at("visual").get<std::vector<int>>();
    if (j.contains("query") && !j["query"].is_null()) {
      c.query = j["query"].get<std::string>();
    }
    if (j.contains("history") && !j["history"].is_null()) {
      c.history = j["history"].get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
  return c;
}

namespace {

template <typename T, typename Parse>
std::vector<T> read_jsonl(const std::string& path, Parse parse) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::vector<T> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse(line));
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("{}:{}: {}", path, lineno, e.detail()));
    }
  }
  return out;
}

}  // namespace

std::vector<ChunkInput> read_stream(const std::string& path) {
  return read_jsonl<ChunkInput>(path, parse_chunk);
}

std::string to_json_line(const StepRecord& step, bool with_timing) {
  nlohmann::json timing = {{"tokens", step.timing.tokens}};
  if (with_timing) {
    timing["cache_s"] = step.timing.cache_s;
    timing["forward_s"] = step.timing.forward_s;
    timing["chunk_s"] = step.timing.chunk_s;
    auto ts = step.timing.token_s();
    timing["token_s"] = ts ? nlohmann::json(*ts) : nlohmann::json(nullptr);
  }
  nlohmann::json j = {
      {"t", step.t},
      {"p", step.p},
      {"action", step.action == model::Action::kSpeak ? "speak" : "silence"},
      {"text", step.segment.rendered()},
      {"continues", step.segment.continues},
      {"timing", timing}};
  return j.dump();
}

StepRecord parse_step(std::string_view json_line) {
  StepRecord s;
  try {
    auto j = nlohmann::json::parse(json_line);
    s.t = j.at("t").get<std::int64_t>();
    s.p = j.at("p").get<double>();
    const auto action = j.at("action").get<std::string>();
    if (action != "speak" && action != "silence") {
      throw Error(ErrorCode::kParse, "unknown action '" + action + "'");
    }
    s.action = action == "speak" ? model::Action::kSpeak
                                 : model::Action::kSilence;
    s.segment.silent = s.action == model::Action::kSilence;
    s.segment.continues = j.value("continues", false);
    // "text" is the rendered form; strip the placeholder/marker back off.
    std::string text = j.value("text", std::string());
    const std::string placeholder(text::kSilencePlaceholder);
    if (text == placeholder && (s.segment.silent || s.segment.continues)) {
      text.clear();
    }
    const std::string marker = " " + placeholder;
    if (s.segment.continues && text.size() >= marker.size() &&
        text.compare(text.size() - marker.size(), marker.size(), marker) == 0) {
      text.resize(text.size() - marker.size());
    }
    s.segment.text = std::move(text);
    if (j.contains("timing")) {
      const auto& t = j["timing"];
      s.timing.tokens = t.value("tokens", 0);
      s.timing.cache_s = t.value("cache_s", 0.0);
      s.timing.forward_s = t.value("forward_s", 0.0);
      s.timing.chunk_s = t.value("chunk_s", 0.0);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
  return s;
}

std::vector<StepRecord> read_run(const std::string& path) {
  return read_jsonl<StepRecord>(path, parse_step);
}

}  // namespace proact::stream
