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

#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "proact/error.hpp"
#include "proact/streaming.hpp"
#include "proact/synth.hpp"

using namespace proact;

namespace {

struct Rig {
  text::Vocab vocab = text::Vocab::build(synth::corpus(), 48, 8);
  model::ModelConfig cfg = testing::toy_config(vocab.size());
  model::Transformer model{cfg, model::ModelWeights::random(cfg, 21)};

  std::vector<stream::ChunkInput> chunks(int n, std::uint64_t seed = 1) const {
    synth::SynthConfig sc;
    sc.seconds = n;
    sc.seed = seed;
    return synth::generate(sc).chunks;
  }
};

const Rig& rig() {
  static const Rig r;
  return r;
}

}  // namespace

TEST_CASE("chunk with three frames and no history or query is ten tokens") {
  const auto& v = rig().vocab;
  stream::ChunkInput c;
  c.visual = {0, 1, 2};
  const auto ids = stream::serialize_chunk(c, v);
  const auto& sp = v.special();
  const std::vector<int> want = {sp.history_start, sp.history_end, sp.vision_bos,
                                 v.visual(0),      v.visual(1),    v.visual(2),
                                 sp.vision_eos,    sp.query_start, sp.query_end,
                                 sp.flag};
  CHECK(ids == want);
}

TEST_CASE("history and query text land between their delimiters") {
  const auto& v = rig().vocab;
  stream::ChunkInput c;
  c.visual = {5};
  c.history = "big fight";
  c.query = "what now";
  const auto ids = stream::serialize_chunk(c, v);
  CHECK(ids.size() == 10 + 2 + 2 - 2);
  CHECK(ids[1] == v.id("big"));
  CHECK(ids.back() == v.special().flag);
  CHECK(std::count(ids.begin(), ids.end(), v.special().flag) == 1);
}

TEST_CASE("threshold above one never speaks, zero always speaks") {
  const auto& r = rig();
  const auto chunks = r.chunks(15);
  stream::EngineConfig ec;
  ec.tau = 1.5;
  const auto silent = stream::run_stream(r.model, r.vocab, chunks, ec);
  for (const auto& s : silent.steps) {
    CHECK(s.action == model::Action::kSilence);
    CHECK(s.segment.rendered() == "...");
    CHECK(s.timing.tokens == 0);
  }
  ec.tau = 0.0;
  const auto loud = stream::run_stream(r.model, r.vocab, chunks, ec);
  for (const auto& s : loud.steps) {
    CHECK(s.action == model::Action::kSpeak);
    CHECK(!s.segment.text.empty());
    CHECK(s.timing.tokens >= 1);
    CHECK(s.timing.tokens <= r.cfg.gen_budget);
  }
  CHECK(stream::lint_context(silent.transcript, r.vocab).ok);
  CHECK(stream::lint_context(loud.transcript, r.vocab).ok);
}

TEST_CASE("silent turns are filled with the placeholder") {
  const auto& r = rig();
  stream::Engine e(r.model, r.vocab, {});
  const auto& sp = r.vocab.special();
  const auto before = e.transcript().size();
  e.step(r.chunks(1)[0], 2.0);
  const auto& t = e.transcript();
  const std::vector<int> tail(t.end() - 4, t.end());
  CHECK(tail == std::vector<int>{sp.im_start, sp.role_assistant, sp.ellipsis, sp.im_end});
  CHECK(t.size() > before);
}

TEST_CASE("generated text carries only words") {
  const auto& r = rig();
  stream::EngineConfig ec;
  ec.tau = 0.0;
  const auto rec = stream::run_stream(r.model, r.vocab, r.chunks(8), ec);
  for (const auto& s : rec.steps) {
    std::istringstream in(s.segment.text);
    std::string w;
    while (in >> w) CHECK(r.vocab.is_word(r.vocab.id(w)));
    if (s.segment.continues) {
      CHECK(s.segment.rendered() == s.segment.text + " ...");
    }
  }
}

TEST_CASE("long streams evict and keep alternating") {
  const auto& r = rig();
  stream::EngineConfig ec;
  ec.window = 300;
  ec.tau = 0.3;
  const auto rec = stream::run_stream(r.model, r.vocab, r.chunks(80, 3), ec);
  long evictions = 0;
  for (const auto& s : rec.steps) evictions += static_cast<long>(s.evictions.size());
  CHECK(evictions >= 3);
  CHECK(rec.window == 300);
  const auto lint = stream::lint_context(rec.transcript, r.vocab);
  CHECK_MESSAGE(lint.ok, lint.message);
  CHECK(lint.user_turns == 80);
  CHECK(lint.assistant_turns == 80);
}

TEST_CASE("linter rejects broken transcripts") {
  const auto& r = rig();
  stream::EngineConfig ec;
  ec.tau = 2.0;
  const auto rec = stream::run_stream(r.model, r.vocab, r.chunks(3), ec);
  const auto& sp = r.vocab.special();
  auto t = rec.transcript;
  REQUIRE(stream::lint_context(t, r.vocab).ok);
  CHECK(stream::lint_context(t, r.vocab).silent_turns == 3);

  auto dropped = t;
  dropped.pop_back();
  CHECK(!stream::lint_context(dropped, r.vocab).ok);

  auto two_users = t;
  const std::vector<int> extra = {sp.im_start, sp.role_user, sp.history_start,
                                  sp.history_end, sp.vision_bos, sp.vision_eos,
                                  sp.query_start, sp.query_end, sp.flag, sp.im_end};
  two_users.insert(two_users.end(), extra.begin(), extra.end());
  two_users.insert(two_users.end(), extra.begin(), extra.end());
  CHECK(!stream::lint_context(two_users, r.vocab).ok);

  auto empty_reply = t;
  empty_reply.erase(empty_reply.end() - 2);  // drop the "..." filler
  CHECK(!stream::lint_context(empty_reply, r.vocab).ok);
}

TEST_CASE("chunks must move forward in time and respect the frame budget") {
  const auto& r = rig();
  stream::Engine e(r.model, r.vocab, {});
  auto chunks = r.chunks(2);
  e.step(chunks[1]);
  try {
    e.step(chunks[0]);
    FAIL("expected position-order");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::kPositionOrder);
  }
  stream::EngineConfig ec;
  ec.frame_tokens = 2;
  stream::Engine small(r.model, r.vocab, ec);
  CHECK_THROWS_AS(small.step(chunks[0]), Error);
}

TEST_CASE("run errors name the failing chunk") {
  const auto& r = rig();
  auto chunks = r.chunks(5);
  chunks[3].t = 1;
  try {
    stream::run_stream(r.model, r.vocab, chunks, {});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("chunk 3") != std::string::npos);
  }
}

TEST_CASE("teacher-forced steps expose FLAG state and LM targets") {
  const auto& r = rig();
  stream::Engine e(r.model, r.vocab, {});
  const auto chunks = r.chunks(2);
  const auto a = e.step_forced(chunks[0], std::string("big fight ..."));
  CHECK(a.active);
  const auto& sp = r.vocab.special();
  CHECK(a.lm_targets == std::vector<int>{r.vocab.id("big"), r.vocab.id("fight"),
                                         sp.ellipsis, sp.im_end});
  CHECK(a.lm_features.cols() == 4);
  CHECK(a.p == doctest::Approx(model::response_score(a.flag, r.model.weights().head)));
  const auto b = e.step_forced(chunks[1], std::nullopt);
  CHECK(!b.active);
  CHECK(b.lm_targets.empty());
  CHECK(stream::lint_context(e.transcript(), r.vocab).ok);
}

TEST_CASE("forced and gated steps see the same FLAG score") {
  const auto& r = rig();
  const auto chunks = r.chunks(4);
  stream::Engine forced(r.model, r.vocab, {});
  stream::Engine gated(r.model, r.vocab, {});
  for (const auto& c : chunks) {
    const auto s = gated.step(c, 2.0);
    const auto f = forced.step_forced(c, std::nullopt);
    CHECK(s.p == doctest::Approx(f.p).epsilon(1e-12));
  }
}

TEST_CASE("run records round-trip through JSONL") {
  const auto& r = rig();
  stream::EngineConfig ec;
  ec.tau = 0.0;
  const auto rec = stream::run_stream(r.model, r.vocab, r.chunks(3), ec);
  for (const auto& s : rec.steps) {
    const auto back = stream::parse_step(stream::to_json_line(s, true));
    CHECK(back.t == s.t);
    CHECK(back.p == s.p);
    CHECK(back.action == s.action);
    CHECK(back.segment.text == s.segment.text);
    CHECK(back.segment.continues == s.segment.continues);
    CHECK(back.timing.tokens == s.timing.tokens);
    CHECK(back.timing.forward_s == s.timing.forward_s);
  }
  const auto no_timing = stream::to_json_line(rec.steps[0], false);
  CHECK(no_timing.find("chunk_s") == std::string::npos);
  CHECK_THROWS_AS(stream::parse_step("{\"t\":1}"), Error);
  CHECK_THROWS_AS(stream::parse_chunk("{\"t\":1,\"visual\":\"x\"}"), Error);
  const auto c = stream::parse_chunk(R"({"t":4,"visual":[1,2],"query":"who"})");
  CHECK(c.t == 4);
  CHECK(c.query == std::optional<std::string>("who"));
  CHECK(!c.history);
}

TEST_CASE("profile rows are means over the run") {
  stream::StreamRunRecord rec;
  rec.window = 8192;
  rec.frame_tokens = 64;
  for (int i = 0; i < 4; ++i) {
    stream::StepRecord s;
    s.timing.cache_s = 0.1 * (i + 1);
    s.timing.forward_s = 0.2;
    s.timing.chunk_s = 0.5;
    s.timing.tokens = i % 2 ? 4 : 0;
    s.action = i % 2 ? model::Action::kSpeak : model::Action::kSilence;
    rec.steps.push_back(s);
  }
  const auto row = stream::profile_row(rec);
  CHECK(row.cache_s == doctest::Approx(0.25));
  CHECK(row.forward_s == doctest::Approx(0.2));
  CHECK(row.chunk_s == doctest::Approx(0.5));
  REQUIRE(row.token_s.has_value());
  CHECK(*row.token_s == doctest::Approx(0.4 / 8.0));

  for (auto& s : rec.steps) {
    s.timing.tokens = 0;
    s.action = model::Action::kSilence;
  }
  const auto quiet = stream::profile_row(rec);
  CHECK(!quiet.token_s);
  const std::vector<stream::ProfileRow> rows = {row, quiet};
  const auto table = stream::profile_table(rows);
  const auto header = table.substr(0, table.find('\n'));
  for (const char* col : {"WS", "Cache", "Forward", "Chunk", "Token"}) {
    CHECK(header.find(col) != std::string::npos);
  }
  CHECK(std::count(table.begin(), table.end(), '\n') == 3);
  CHECK(table.find(" -\n") != std::string::npos);
  CHECK_THROWS_AS(stream::profile_row(stream::StreamRunRecord{}), Error);
}
