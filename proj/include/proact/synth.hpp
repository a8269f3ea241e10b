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
#include <string>
#include <vector>

#include "proact/data.hpp"
#include "proact/streaming.hpp"

// Synthetic "event token means speak" streams with matching captions.

namespace proact::synth {

struct SynthConfig {
  std::int64_t seconds = 600;
  int n_visual = 48;
  int n_event = 8;
  int tokens_per_chunk = 4;
  int event_tokens = 4;   // event tokens placed in a positive chunk
  double onset = 0.12;    // P(y_t = 1 | y_{t-1} = 0)
  double offset = 0.18;   // P(y_t = 0 | y_{t-1} = 1)
  int min_words = 2;
  int max_words = 4;
  std::uint64_t seed = 0;

  void validate() const;
  double label_rate() const { return onset / (onset + offset); }
};

struct SynthStream {
  std::vector<stream::ChunkInput> chunks;
  std::vector<int> labels;
  std::vector<data::PerSecondCaption> captions;  // positive seconds only

  /// Reply for second t as the assistant would say it, nullopt when silent.
  std::optional<std::string> reply(std::int64_t t) const;
};

SynthStream generate(const SynthConfig& cfg);

/// Every word a synthetic caption can use, plus the default system prompt.
std::vector<std::string> corpus();

}  // namespace proact::synth
