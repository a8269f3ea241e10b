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

#include "proact/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "proact/error.hpp"

namespace proact::metrics {

PredTimeline PredTimeline::from_speak_seconds(
    std::vector<std::int64_t> seconds) {
  std::sort(seconds.begin(), seconds.end());
  seconds.erase(std::unique(seconds.begin(), seconds.end()), seconds.end());
  PredTimeline p;
  for (std::size_t i = 0; i < seconds.size(); ++i) {
    if (i == 0 || seconds[i] != seconds[i - 1] + 1) {
      p.starts.push_back(seconds[i]);
    }
  }
  p.speak_seconds = std::move(seconds);
  return p;
}

PredTimeline PredTimeline::from_actions(std::span<const int> speak_per_second) {
  std::vector<std::int64_t> s;
  for (std::size_t t = 0; t < speak_per_second.size(); ++t) {
    if (speak_per_second[t]) s.push_back(static_cast<std::int64_t>(t));
  }
  return from_speak_seconds(std::move(s));
}

std::vector<GtInterval> normalize_intervals(std::span<const GtInterval> gt) {
  std::vector<GtInterval> out(gt.begin(), gt.end());
  std::sort(out.begin(), out.end(),
            [](const GtInterval& x, const GtInterval& y) { return x.a < y.a; });
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].b <= out[i].a) {
      throw Error(ErrorCode::kShape,
                  fmt::format("interval [{}, {}] is empty", out[i].a, out[i].b));
    }
    if (i > 0 && out[i].a < out[i - 1].b) {
      throw Error(ErrorCode::kShape,
                  fmt::format("intervals [{}, {}] and [{}, {}] overlap",
                              out[i - 1].a, out[i - 1].b, out[i].a, out[i].b));
    }
  }
  return out;
}

TimeDiffResult timediff(std::span<const GtInterval> gt_in,
                        const PredTimeline& pred, const TimeDiffConfig& cfg) {
  if (gt_in.empty()) {
    throw Error(ErrorCode::kUndefinedMetric,
                "TimeDiff needs at least one ground-truth interval");
  }
  const auto gt = normalize_intervals(gt_in);
  std::vector<std::int64_t> starts = pred.starts;
  std::sort(starts.begin(), starts.end());

  // Each start belongs to the interval with the nearest onset; ties go to the
  // earlier interval.
  std::vector<std::vector<std::int64_t>> associated(gt.size());
  for (std::int64_t s : starts) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < gt.size(); ++i) {
      if (std::llabs(s - gt[i].a) < std::llabs(s - gt[best].a)) best = i;
    }
    associated[best].push_back(s);
  }

  TimeDiffResult res;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const auto& iv = gt[i];
    double base = static_cast<double>(iv.b - iv.a);
    for (std::int64_t s : starts) {
      if (s >= iv.a && s <= iv.b) {
        base = std::min(base, static_cast<double>(s - iv.a));
      }
    }
    double misses = 0.0;
    for (std::int64_t s : associated[i]) {
      const auto x = static_cast<double>(s);
      if (x < static_cast<double>(iv.a) - cfg.delta ||
          x > static_cast<double>(iv.b) + cfg.delta) {
        misses += 1.0;
      }
    }
    res.per_interval.push_back(base + cfg.penalty_alpha * misses);
  }
  double sum = 0.0;
  for (double v : res.per_interval) sum += v;
  res.mean = sum / static_cast<double>(res.per_interval.size());
  return res;
}

F1Result temporal_f1(std::span<const GtInterval> gt_in,
                     const PredTimeline& pred, std::int64_t horizon) {
  const auto gt = normalize_intervals(gt_in);
  std::vector<char> truth(static_cast<std::size_t>(std::max<std::int64_t>(horizon, 0)), 0);
  for (const auto& iv : gt) {
    if (iv.a < 0 || iv.b > horizon) {
      throw Error(ErrorCode::kOutOfRange,
                  fmt::format("interval [{}, {}] outside horizon {}", iv.a,
                              iv.b, horizon));
    }
    for (std::int64_t t = iv.a; t < iv.b; ++t) {
      truth[static_cast<std::size_t>(t)] = 1;
    }
  }
  std::vector<char> spoken(truth.size(), 0);
  for (std::int64_t s : pred.speak_seconds) {
    if (s < 0 || s >= horizon) {
      throw Error(ErrorCode::kOutOfRange,
                  fmt::format("speak second {} outside horizon {}", s, horizon));
    }
    spoken[static_cast<std::size_t>(s)] = 1;
  }

  F1Result r;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (spoken[t] && truth[t]) ++r.tp;
    if (spoken[t] && !truth[t]) ++r.fp;
    if (!spoken[t] && truth[t]) ++r.fn;
  }
  r.precision_undefined = r.tp + r.fp == 0;
  r.recall_undefined = r.tp + r.fn == 0;
  r.precision = r.precision_undefined
                    ? 0.0
                    : static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp);
  r.recall = r.recall_undefined
                 ? 0.0
                 : static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
  r.f1 = r.precision + r.recall > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

double pauc(std::span<const GtInterval> gt_in,
            std::span<const JudgeScore> scores, double omega, double s0) {
  if (!(omega >= 0.0 && omega <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "omega must lie in [0, 1]");
  }
  std::map<std::int64_t, int> by_second;
  for (const auto& s : scores) {
    if (s.score < 1 || s.score > 3) {
      throw Error(ErrorCode::kInvalidScore,
                  fmt::format("score {} at t={} is outside {{1, 2, 3}}",
                              s.score, s.t));
    }
    if (!by_second.emplace(s.t, s.score).second) {
      throw Error(ErrorCode::kInvalidScore,
                  fmt::format("duplicate score for t={}", s.t));
    }
  }
  const auto gt = normalize_intervals(gt_in);
  double state = s0;
  double sum = 0.0;
  long n = 0;
  for (const auto& iv : gt) {
    for (std::int64_t t = iv.a; t < iv.b; ++t) {
      auto it = by_second.find(t);
      const double q = it == by_second.end() ? 0.0 : it->second;
      state = (1.0 - omega) * state + omega * q;
      sum += state;
      ++n;
    }
  }
  if (n == 0) {
    throw Error(ErrorCode::kUndefinedMetric,
                "PAUC needs at least one in-interval second");
  }
  return sum / static_cast<double>(n) / kMaxJudgeScore;
}

std::vector<GtInterval> intervals_from_labels(std::span<const int> labels) {
  std::vector<GtInterval> out;
  std::size_t t = 0;
  while (t < labels.size()) {
    if (!labels[t]) {
      ++t;
      continue;
    }
    const std::size_t start = t;
    while (t < labels.size() && labels[t]) ++t;
    out.push_back({static_cast<std::int64_t>(start), static_cast<std::int64_t>(t)});
  }
  return out;
}

std::vector<int> labels_from_intervals(std::span<const GtInterval> gt,
                                       std::int64_t horizon) {
  std::vector<int> y(static_cast<std::size_t>(std::max<std::int64_t>(horizon, 0)), 0);
  for (const auto& iv : normalize_intervals(gt)) {
    for (std::int64_t t = std::max<std::int64_t>(iv.a, 0);
         t < std::min(iv.b, horizon); ++t) {
      y[static_cast<std::size_t>(t)] = 1;
    }
  }
  return y;
}

std::vector<GtInterval> parse_intervals(std::string_view json) {
  std::vector<GtInterval> out;
  try {
    for (const auto& j : nlohmann::json::parse(json)) {
      out.push_back({j.at("a").get<std::int64_t>(), j.at("b").get<std::int64_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
  return out;
}

std::string intervals_json(std::span<const GtInterval> gt) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& iv : gt) arr.push_back({{"a", iv.a}, {"b", iv.b}});
  return arr.dump();
}

std::vector<JudgeScore> read_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::vector<JudgeScore> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      out.push_back({j.at("t").get<std::int64_t>(), j.at("score").get<int>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParse,
                  fmt::format("{}:{}: {}", path, lineno, e.what()));
    }
  }
  return out;
}

std::string Report::to_json() const {
  nlohmann::json j = {{"timediff", timediff},
                      {"precision", f1.precision},
                      {"recall", f1.recall},
                      {"f1", f1.f1}};
  if (pauc) j["pauc"] = *pauc;
  return j.dump(2);
}

}  // namespace proact::metrics
