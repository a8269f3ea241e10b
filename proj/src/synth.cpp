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

#include "proact/synth.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "proact/error.hpp"

namespace proact::synth {

namespace {

std::vector<std::string> text_words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

const std::vector<std::string>& phrases() {
  static const std::vector<std::string> kPhrases = {
      "what a strike from the edge of the box",
      "he dodges left and counters with a heavy combo",
      "the defense collapses and the keeper is beaten",
      "big fight in the middle of the map right now",
      "she lands the final hit and takes the objective",
      "that was a clean headshot from long range",
      "they rotate quickly and catch the enemy off guard",
      "huge save and the crowd is on its feet",
  };
  return kPhrases;
}

}  // namespace

void SynthConfig::validate() const {
  if (seconds < 0) throw Error(ErrorCode::kInvalidConfig, "seconds must be >= 0");
  if (!(n_event > 0 && n_event < n_visual)) {
    throw Error(ErrorCode::kInvalidConfig, "need 0 < n_event < n_visual");
  }
  if (!(event_tokens >= 1 && event_tokens <= tokens_per_chunk)) {
    throw Error(ErrorCode::kInvalidConfig,
                "event_tokens must lie in [1, tokens_per_chunk]");
  }
  if (!(onset > 0.0 && onset <= 1.0 && offset > 0.0 && offset <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "transition rates must be in (0, 1]");
  }
  if (!(min_words >= 1 && max_words >= min_words)) {
    throw Error(ErrorCode::kInvalidConfig, "bad words-per-second range");
  }
}

std::optional<std::string> SynthStream::reply(std::int64_t t) const {
  auto it = std::lower_bound(
      captions.begin(), captions.end(), t,
      [](const data::PerSecondCaption& c, std::int64_t s) { return c.second < s; });
  if (it == captions.end() || it->second != t) return std::nullopt;
  return it->text();
}

SynthStream generate(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> plain(0, cfg.n_visual - cfg.n_event - 1);
  std::uniform_int_distribution<int> event(cfg.n_visual - cfg.n_event,
                                           cfg.n_visual - 1);
  std::uniform_int_distribution<int> n_words(cfg.min_words, cfg.max_words);
  std::uniform_int_distribution<std::size_t> pick(0, phrases().size() - 1);

  SynthStream out;
  int y = unit(rng) < cfg.label_rate() ? 1 : 0;
  std::vector<std::string> words;
  std::size_t cursor = 0;
  for (std::int64_t t = 0; t < cfg.seconds; ++t) {
    if (t > 0) {
      y = y ? (unit(rng) < cfg.offset ? 0 : 1) : (unit(rng) < cfg.onset ? 1 : 0);
    }
    out.labels.push_back(y);

    stream::ChunkInput c;
    c.t = t;
    for (int k = 0; k < cfg.tokens_per_chunk; ++k) c.visual.push_back(plain(rng));
    if (y) {
      for (int k = 0; k < cfg.event_tokens; ++k) c.visual[static_cast<std::size_t>(k)] = event(rng);
      std::shuffle(c.visual.begin(), c.visual.end(), rng);
    }
    out.chunks.push_back(std::move(c));

    if (!y) continue;
    if (out.captions.empty() || out.captions.back().second != t - 1) {
      words = text_words(phrases()[pick(rng)]);
      cursor = 0;
    }
    data::PerSecondCaption cap;
    cap.second = t;
    const int n = n_words(rng);
    for (int k = 0; k < n; ++k) {
      if (cursor == words.size()) {
        words = text_words(phrases()[pick(rng)]);
        cursor = 0;
      }
      cap.words.push_back(words[cursor++]);
    }
    out.captions.push_back(std::move(cap));
  }
  // Every second of a run but the last carries on.
  for (std::size_t i = 0; i + 1 < out.captions.size(); ++i) {
    out.captions[i].continues =
        out.captions[i + 1].second == out.captions[i].second + 1;
  }
  return out;
}

std::vector<std::string> corpus() {
  std::vector<std::string> out = phrases();
  out.push_back(stream::EngineConfig{}.system_prompt);
  return out;
}

}  // namespace proact::synth
