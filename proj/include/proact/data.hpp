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

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Turning segment-level ASR transcripts into per-second supervision and
// cutting/stratifying benchmark clips.

namespace proact::data {

struct AsrSegment {
  double start_s = 0.0;
  double end_s = 0.0;
  std::string text;
  std::string speaker;
};

struct PerSecondCaption {
  std::int64_t second = 0;
  std::vector<std::string> words;
  bool continues = false;
  int segment = -1;  // index of the source segment, -1 after merging

  /// Words joined by spaces, with " ..." appended while the utterance runs on.
  std::string text() const;
};

struct ClipSpec {
  std::int64_t start_s = 0;
  std::int64_t end_s = 0;
  std::int64_t clip_len = 36;
  std::int64_t overlap = 18;
  double response_rate = 0.0;
};

std::int64_t round_half_up(double seconds);

/// Spreads the n words of a segment over its t rounded seconds: the first
/// n mod t seconds get floor(n/t) + 1 words, the rest floor(n/t). Every second
/// but the last is marked as continuing.
std::vector<PerSecondCaption> split_caption(const AsrSegment& seg,
                                            int segment_index = -1);

/// Concatenates captions that landed on the same second (adjacent segments
/// can collide after rounding). Input must be ordered by second.
std::vector<PerSecondCaption> merge_collisions(
    std::span<const PerSecondCaption> captions);

/// y[t] = 1 iff a caption with at least one word sits at second t.
std::vector<int> derive_labels(std::span<const PerSecondCaption> captions,
                               std::int64_t horizon);

std::vector<ClipSpec> segment_clips(std::int64_t video_len_s,
                                    std::int64_t clip_len = 36,
                                    std::int64_t overlap = 18);

/// Fills response_rate from a per-second label timeline.
void assign_response_rates(std::span<ClipSpec> clips,
                           std::span<const int> labels);

/// 0 for [0, 0.3), 1 for [0.3, 0.7), 2 for [0.7, 1].
int rate_bin(double response_rate);

struct StratifiedSample {
  std::array<std::vector<ClipSpec>, 3> bins;
  std::array<int, 3> shortfall{};

  std::vector<ClipSpec> all() const;
};

inline constexpr std::array<int, 3> kDefaultQuotas = {60, 120, 60};

/// Uniform sampling without replacement inside each response-rate bin.
StratifiedSample stratify(std::span<const ClipSpec> clips,
                          std::array<int, 3> quotas, std::uint64_t seed);

// JSONL / JSON wire format.
AsrSegment parse_asr(std::string_view json_line);
std::vector<AsrSegment> read_asr(const std::string& path);
std::string to_json_line(const PerSecondCaption& c);
PerSecondCaption parse_caption(std::string_view json_line);
std::string labels_json(std::span<const int> labels);
std::vector<int> parse_labels(std::string_view json);
std::string clips_json(std::span<const ClipSpec> clips);
std::vector<ClipSpec> parse_clips(std::string_view json);

}  // namespace proact::data
