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

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "proact/kv_cache.hpp"
#include "proact/model.hpp"
#include "proact/vocab.hpp"

namespace proact::stream {

/// One second of stream input.
struct ChunkInput {
  std::int64_t t = 0;
  std::vector<int> visual;  // indices into the visual pseudo-token range
  std::optional<std::string> query;
  std::optional<std::string> history;
};

struct UtteranceSegment {
  std::string text;  // words only; the continuation marker is not included
  bool continues = false;
  bool silent = true;

  /// "..." when silent, "<text> ..." when the utterance carries on.
  std::string rendered() const;
};

struct ChunkTiming {
  double cache_s = 0.0;    // eviction + ingesting the user turn
  double forward_s = 0.0;  // assistant turn: prefix, generation, closing
  double chunk_s = 0.0;    // wall clock for the whole step
  int tokens = 0;          // generated words

  std::optional<double> token_s() const;
};

struct StepRecord {
  std::int64_t t = 0;
  double p = 0.0;
  model::Action action = model::Action::kSilence;
  UtteranceSegment segment;
  ChunkTiming timing;
  std::vector<kv::EvictionReport> evictions;
};

struct StreamRunRecord {
  std::vector<StepRecord> steps;
  std::vector<int> transcript;  // every token fed to the model, in order
  std::int64_t window = 0;
  int frame_tokens = 0;
};

struct EngineConfig {
  double tau = model::kDefaultThreshold;
  std::int64_t window = 0;  // 0 means "use the model config window"
  int frame_tokens = 64;    // per-frame visual token budget
  int fps = 1;
  std::string system_prompt =
      "you are a live game commentator . speak only when something happens";
};

/// User content for one chunk:
///   <|history_start|> H <|history_end|> <|vision_bos|> V <|vision_eos|>
///   <|query_start|> Q <|query_end|> <|FLAG|>
std::vector<int> serialize_chunk(const ChunkInput& chunk,
                                 const text::Vocab& vocab);

/// Result of a teacher-forced step, used to build training features.
struct ForcedStep {
  model::FlagState flag;
  double p = 0.0;
  bool active = false;        // assistant spoke this second
  model::Mat lm_features;     // [d_model x n_targets], final-normed
  std::vector<int> lm_targets;
};

/// Decide-then-generate engine over one stream. Owns the cache; borrows the
/// model and vocabulary, which must outlive it.
class Engine {
 public:
  Engine(const model::Transformer& model, const text::Vocab& vocab,
         EngineConfig cfg, const model::RawKeyTap* tap = nullptr);

  StepRecord step(const ChunkInput& chunk, double tau);
  StepRecord step(const ChunkInput& chunk) { return step(chunk, cfg_.tau); }

  /// Same ingestion as `step`, but the assistant turn is the given reply
  /// (nullopt means silence) instead of a gated generation.
  ForcedStep step_forced(const ChunkInput& chunk,
                         const std::optional<std::string>& reply);

  const kv::DualCache& cache() const { return cache_; }
  const std::vector<int>& transcript() const { return transcript_; }
  const EngineConfig& config() const { return cfg_; }

 private:
  std::vector<int> user_turn(const ChunkInput& chunk);
  std::vector<kv::EvictionReport> reserve(std::int64_t turn_len);
  model::ForwardResult feed(std::span<const int> tokens);

  const model::Transformer& model_;
  const text::Vocab& vocab_;
  EngineConfig cfg_;
  const model::RawKeyTap* tap_;
  kv::DualCache cache_;
  std::vector<int> transcript_;
  std::optional<std::int64_t> last_t_;
  bool in_utterance_ = false;
};

/// One step per chunk. Errors are rethrown with the failing chunk index.
StreamRunRecord run_stream(const model::Transformer& model,
                           const text::Vocab& vocab,
                           std::span<const ChunkInput> chunks,
                           const EngineConfig& cfg,
                           const model::RawKeyTap* tap = nullptr);

struct ProfileRow {
  int frame_tokens = 0;
  std::int64_t window = 0;
  double cache_s = 0.0;
  double forward_s = 0.0;
  double chunk_s = 0.0;
  std::optional<double> token_s;  // absent when nothing was generated
};

/// Means over the run; token_s = generation time of speaking steps divided
/// by the number of generated tokens.
ProfileRow profile_row(const StreamRunRecord& record);

/// Columns: Frame, WS, Cache, Forward, Chunk, Token.
std::string profile_table(std::span<const ProfileRow> rows);

struct LintResult {
  bool ok = true;
  std::string message;
  int user_turns = 0;
  int assistant_turns = 0;
  int silent_turns = 0;
};

/// Checks system turn first, then strict user/assistant alternation with a
/// well-formed user content and a silence-filled or spoken assistant turn.
LintResult lint_context(std::span<const int> transcript,
                        const text::Vocab& vocab);

// JSONL wire format.
ChunkInput parse_chunk(std::string_view json_line);
std::vector<ChunkInput> read_stream(const std::string& path);
std::string to_json_line(const StepRecord& step, bool with_timing);
StepRecord parse_step(std::string_view json_line);
std::vector<StepRecord> read_run(const std::string& path);

}  // namespace proact::stream
