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

// Time-aligned proactivity metrics.
//
// Conventions: a ground-truth interval [a, b] covers the per-second bins
// a, a+1, ..., b-1 for F1 and PAUC, while a prediction start counts as
// "inside" for TimeDiff when a <= start <= b.

namespace proact::metrics {

struct GtInterval {
  std::int64_t a = 0;
  std::int64_t b = 0;
};

struct PredTimeline {
  std::vector<std::int64_t> starts;         // first second of each speak run
  std::vector<std::int64_t> speak_seconds;  // sorted, unique

  static PredTimeline from_speak_seconds(std::vector<std::int64_t> seconds);
  static PredTimeline from_actions(std::span<const int> speak_per_second);
};

struct TimeDiffConfig {
  double delta = 3.0;
  double penalty_alpha = 1.0;
};

struct TimeDiffResult {
  std::vector<double> per_interval;
  double mean = 0.0;
};

/// Intervals are sorted internally; they must not overlap.
std::vector<GtInterval> normalize_intervals(std::span<const GtInterval> gt);

TimeDiffResult timediff(std::span<const GtInterval> gt,
                        const PredTimeline& pred, const TimeDiffConfig& cfg);

struct F1Result {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  long tp = 0;
  long fp = 0;
  long fn = 0;
};

F1Result temporal_f1(std::span<const GtInterval> gt, const PredTimeline& pred,
                     std::int64_t horizon);

struct JudgeScore {
  std::int64_t t = 0;
  int score = 0;  // 1..3
};

inline constexpr double kMaxJudgeScore = 3.0;

/// Smoothed trajectory S_t = (1 - omega) S_{t-1} + omega q_t over the
/// in-interval seconds, q_t being the judge score of a response at t (0 when
/// none). Returns mean(S) / 3.
double pauc(std::span<const GtInterval> gt, std::span<const JudgeScore> scores,
            double omega = 0.5, double s0 = 0.0);

std::vector<GtInterval> intervals_from_labels(std::span<const int> labels);
std::vector<int> labels_from_intervals(std::span<const GtInterval> gt,
                                       std::int64_t horizon);

// Wire format.
std::vector<GtInterval> parse_intervals(std::string_view json);
std::string intervals_json(std::span<const GtInterval> gt);
std::vector<JudgeScore> read_scores(const std::string& path);

struct Report {
  double timediff = 0.0;
  F1Result f1;
  std::optional<double> pauc;

  std::string to_json() const;
};

}  // namespace proact::metrics
