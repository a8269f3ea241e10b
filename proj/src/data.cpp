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

#include "proact/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "proact/error.hpp"

namespace proact::data {

namespace {

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) out.push_back(std::move(w));
  return out;
}

}  // namespace

std::string PerSecondCaption::text() const {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  if (continues) out += out.empty() ? "..." : " ...";
  return out;
}

std::int64_t round_half_up(double seconds) {
  return static_cast<std::int64_t>(std::floor(seconds + 0.5));
}

std::vector<PerSecondCaption> split_caption(const AsrSegment& seg,
                                            int segment_index) {
  if (!(seg.end_s > seg.start_s)) {
    throw Error(ErrorCode::kParse,
                fmt::format("segment [{}, {}] has non-positive duration",
                            seg.start_s, seg.end_s));
  }
  const auto words = split_words(seg.text);
  if (words.empty()) throw Error(ErrorCode::kParse, "segment has no words");

  const std::int64_t first = round_half_up(seg.start_s);
  std::int64_t span = round_half_up(seg.end_s) - first;
  if (span < 1) {
    spdlog::info("segment [{}, {}] rounds to {} s, keeping it in one second",
                 seg.start_s, seg.end_s, span);
    span = 1;
  }
  const auto n = static_cast<std::int64_t>(words.size());
  const std::int64_t q = n / span;
  const std::int64_t r = n - span * q;

  std::vector<PerSecondCaption> out;
  out.reserve(static_cast<std::size_t>(span));
  auto next = words.begin();
  for (std::int64_t i = 0; i < span; ++i) {
    PerSecondCaption c;
    c.second = first + i;
    c.segment = segment_index;
    c.continues = i + 1 < span;
    const std::int64_t count = i < r ? q + 1 : q;
    c.words.assign(next, next + count);
    next += count;
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<PerSecondCaption> merge_collisions(
    std::span<const PerSecondCaption> captions) {
  std::vector<PerSecondCaption> out;
  for (const auto& c : captions) {
    if (!out.empty() && out.back().second == c.second) {
      spdlog::info("two captions land on second {}, concatenating", c.second);
      auto& prev = out.back();
      prev.words.insert(prev.words.end(), c.words.begin(), c.words.end());
      prev.continues = c.continues;
      prev.segment = -1;
      continue;
    }
    if (!out.empty() && c.second < out.back().second) {
      throw Error(ErrorCode::kPositionOrder, "captions are not time ordered");
    }
    out.push_back(c);
  }
  return out;
}

std::vector<int> derive_labels(std::span<const PerSecondCaption> captions,
                               std::int64_t horizon) {
  if (horizon < 0) throw Error(ErrorCode::kOutOfRange, "negative horizon");
  std::vector<int> y(static_cast<std::size_t>(horizon), 0);
  for (const auto& c : captions) {
    if (c.second < 0 || c.second >= horizon) {
      throw Error(ErrorCode::kOutOfRange,
                  fmt::format("caption at second {} outside horizon [0, {})",
                              c.second, horizon));
    }
    if (!c.words.empty()) y[static_cast<std::size_t>(c.second)] = 1;
  }
  return y;
}

std::vector<ClipSpec> segment_clips(std::int64_t video_len_s,
                                    std::int64_t clip_len,
                                    std::int64_t overlap) {
  if (!(clip_len > overlap && overlap >= 0)) {
    throw Error(ErrorCode::kInvalidConfig,
                "clip length must exceed a non-negative overlap");
  }
  std::vector<ClipSpec> out;
  const std::int64_t stride = clip_len - overlap;
  for (std::int64_t s = 0; s + clip_len <= video_len_s; s += stride) {
    out.push_back(ClipSpec{s, s + clip_len, clip_len, overlap, 0.0});
  }
  return out;
}

void assign_response_rates(std::span<ClipSpec> clips,
                           std::span<const int> labels) {
  for (auto& c : clips) {
    long speak = 0;
    for (std::int64_t t = c.start_s; t < c.end_s; ++t) {
      if (t >= 0 && t < static_cast<std::int64_t>(labels.size()) &&
          labels[static_cast<std::size_t>(t)]) {
        ++speak;
      }
    }
    c.response_rate = c.end_s > c.start_s
                          ? static_cast<double>(speak) /
                                static_cast<double>(c.end_s - c.start_s)
                          : 0.0;
  }
}

int rate_bin(double response_rate) {
  if (response_rate < 0.3) return 0;
  if (response_rate < 0.7) return 1;
  return 2;
}

std::vector<ClipSpec> StratifiedSample::all() const {
  std::vector<ClipSpec> out;
  for (const auto& b : bins) out.insert(out.end(), b.begin(), b.end());
  return out;
}

StratifiedSample stratify(std::span<const ClipSpec> clips,
                          std::array<int, 3> quotas, std::uint64_t seed) {
  std::array<std::vector<ClipSpec>, 3> pools;
  for (const auto& c : clips) {
    if (!(c.response_rate >= 0.0 && c.response_rate <= 1.0)) {
      throw Error(ErrorCode::kOutOfRange, "response rate outside [0, 1]");
    }
    pools[static_cast<std::size_t>(rate_bin(c.response_rate))].push_back(c);
  }
  std::mt19937_64 rng(seed);
  StratifiedSample out;
  for (std::size_t b = 0; b < 3; ++b) {
    const auto quota = static_cast<std::size_t>(std::max(quotas[b], 0));
    if (pools[b].size() < quota) {
      out.shortfall[b] = static_cast<int>(quota - pools[b].size());
      spdlog::warn("response-rate bin {} has {} clips for a quota of {}", b,
                   pools[b].size(), quota);
    }
    std::sample(pools[b].begin(), pools[b].end(),
                std::back_inserter(out.bins[b]), quota, rng);
  }
  return out;
}

AsrSegment parse_asr(std::string_view json_line) {
  AsrSegment s;
  try {
    auto j = nlohmann::json::parse(json_line);
    s.start_s = j.at("start").get<double>();
    s.end_s = j.at("end").get<double>();
    s.text = j.at("text").get<std::string>();
    s.speaker = j.value("speaker", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
  return s;
}

std::vector<AsrSegment> read_asr(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::vector<AsrSegment> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_asr(line));
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("{}:{}: {}", path, lineno, e.detail()));
    }
  }
  return out;
}

std::string to_json_line(const PerSecondCaption& c) {
  nlohmann::json j = {{"second", c.second},
                      {"words", c.words},
                      {"text", c.text()},
                      {"continues", c.continues},
                      {"segment", c.segment}};
  return j.dump();
}

PerSecondCaption parse_caption(std::string_view json_line) {
  PerSecondCaption c;
  try {
    auto j = nlohmann::json::parse(json_line);
    c.second = j.at("second").get<std::int64_t>();
    c.words = j.at("words").get<std::vector<std::string>>();
    c.continues = j.value("continues", false);
    c.segment = j.value("segment", -1);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
  return c;
}

std::string labels_json(std::span<const int> labels) {
  nlohmann::json j;
  j["y"] = std::vector<int>(labels.begin(), labels.end());
  return j.dump();
}

std::vector<int> parse_labels(std::string_view json) {
  try {
    auto y = nlohmann::json::parse(json).at("y").get<std::vector<int>>();
    for (int v : y) {
      if (v != 0 && v != 1) throw Error(ErrorCode::kParse, "labels must be 0/1");
    }
    return y;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
}

std::string clips_json(std::span<const ClipSpec> clips) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : clips) {
    arr.push_back({{"start", c.start_s},
                   {"end", c.end_s},
                   {"clip_len", c.clip_len},
                   {"overlap", c.overlap},
                   {"response_rate", c.response_rate}});
  }
  return nlohmann::json{{"clips", arr}}.dump(2);
}

std::vector<ClipSpec> parse_clips(std::string_view json) {
  std::vector<ClipSpec> out;
  try {
    const auto doc = nlohmann::json::parse(json);
    for (const auto& c : doc.at("clips")) {
      out.push_back(ClipSpec{c.at("start").get<std::int64_t>(),
                             c.at("end").get<std::int64_t>(),
                             c.value("clip_len", std::int64_t{36}),
                             c.value("overlap", std::int64_t{18}),
                             c.value("response_rate", 0.0)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
  return out;
}

}  // namespace proact::data
