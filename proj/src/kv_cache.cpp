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

#include "proact/kv_cache.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "proact/error.hpp"

namespace proact::kv {

namespace {

std::int64_t eviction_count(double fraction, std::int64_t streaming_len) {
  const double x = fraction * static_cast<double>(streaming_len);
  // 0.2 * 85 lands a hair above 17 in binary; snap near-integers first.
  const double nearest = std::round(x);
  double k = std::abs(x - nearest) < 1e-9 * std::max(1.0, x) ? nearest
                                                             : std::ceil(x);
  return std::clamp<std::int64_t>(static_cast<std::int64_t>(k), 1,
                                  streaming_len);
}

void erase_front(std::vector<double>& rows, std::int64_t n, int kv_dim) {
  rows.erase(rows.begin(), rows.begin() + n * kv_dim);
}

}  // namespace

DualCache::DualCache(CacheShape shape, std::int64_t window,
                     double evict_fraction)
    : shape_(shape), window_(window), evict_fraction_(evict_fraction) {
  if (shape.n_layers < 1 || shape.n_heads < 1 || shape.head_dim < 2 ||
      shape.head_dim % 2 != 0) {
    throw Error(ErrorCode::kInvalidConfig, "invalid cache shape");
  }
  if (window < 1) {
    throw Error(ErrorCode::kInvalidConfig, "window budget must be positive");
  }
  if (!(evict_fraction > 0.0 && evict_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig,
                "eviction fraction must be in (0, 1]");
  }
  for (SegmentStore* s : {&system_, &streaming_}) {
    s->keys.resize(static_cast<std::size_t>(shape.n_layers));
    s->values.resize(static_cast<std::size_t>(shape.n_layers));
  }
}

void DualCache::check_positions(
    Segment segment, std::span<const std::int64_t> positions) const {
  if (positions.empty()) return;
  if (segment == Segment::kSystem && !streaming_.positions.empty()) {
    throw Error(ErrorCode::kSealedSegment,
                "system segment is sealed once streaming has begun");
  }
  for (std::size_t i = 1; i < positions.size(); ++i) {
    if (positions[i] <= positions[i - 1]) {
      throw Error(ErrorCode::kPositionOrder,
                  "positions must be strictly increasing (" +
                      std::to_string(positions[i - 1]) + " then " +
                      std::to_string(positions[i]) + ")");
    }
  }
  const std::int64_t first = positions.front();
  if (!system_.positions.empty() && first <= system_.positions.back()) {
    throw Error(ErrorCode::kPositionOrder,
                "position " + std::to_string(first) +
                    " does not follow system position " +
                    std::to_string(system_.positions.back()));
  }
  if (!streaming_.positions.empty() && first <= streaming_.positions.back()) {
    throw Error(ErrorCode::kPositionOrder,
                "position " + std::to_string(first) +
                    " does not follow streaming position " +
                    std::to_string(streaming_.positions.back()));
  }
  if (first < 0) {
    throw Error(ErrorCode::kPositionOrder, "negative position id");
  }
  const auto n = static_cast<std::int64_t>(positions.size());
  if (size() + n > window_) {
    throw Error(ErrorCode::kOverflow,
                "appending " + std::to_string(n) + " entries to a cache of " +
                    std::to_string(size()) + " exceeds window " +
                    std::to_string(window_));
  }
}

void DualCache::append(Segment segment, std::span<const CacheEntry> entries) {
  const auto layers = static_cast<std::size_t>(shape_.n_layers);
  const auto kv_dim = static_cast<std::size_t>(shape_.kv_dim());
  std::vector<std::int64_t> positions;
  std::vector<std::vector<double>> keys(layers), values(layers);
  for (const CacheEntry& e : entries) {
    if (e.keys.size() != layers || e.values.size() != layers) {
      throw Error(ErrorCode::kShape, "cache entry layer count mismatch");
    }
    positions.push_back(e.position);
    for (std::size_t l = 0; l < layers; ++l) {
      if (e.keys[l].size() != kv_dim || e.values[l].size() != kv_dim) {
        throw Error(ErrorCode::kShape, "cache entry width mismatch");
      }
      keys[l].insert(keys[l].end(), e.keys[l].begin(), e.keys[l].end());
      values[l].insert(values[l].end(), e.values[l].begin(),
                       e.values[l].end());
    }
  }
  append_block(segment, positions, keys, values);
}

void DualCache::append_block(Segment segment,
                             std::span<const std::int64_t> positions,
                             const std::vector<std::vector<double>>& keys,
                             const std::vector<std::vector<double>>& values) {
  const auto layers = static_cast<std::size_t>(shape_.n_layers);
  const std::size_t width = positions.size() *
                            static_cast<std::size_t>(shape_.kv_dim());
  if (keys.size() != layers || values.size() != layers) {
    throw Error(ErrorCode::kShape, "key/value block layer count mismatch");
  }
  for (std::size_t l = 0; l < layers; ++l) {
    if (keys[l].size() != width || values[l].size() != width) {
      throw Error(ErrorCode::kShape, "key/value block width mismatch");
    }
  }
  check_positions(segment, positions);

  SegmentStore& s = segment == Segment::kSystem ? system_ : streaming_;
  s.positions.insert(s.positions.end(), positions.begin(), positions.end());
  for (std::size_t l = 0; l < layers; ++l) {
    s.keys[l].insert(s.keys[l].end(), keys[l].begin(), keys[l].end());
    s.values[l].insert(s.values[l].end(), values[l].begin(), values[l].end());
  }
}

std::vector<EvictionReport> DualCache::maybe_evict(std::int64_t incoming_len,
                                                   const rope::RopeFreqs& f) {
  if (incoming_len < 0) {
    throw Error(ErrorCode::kInvalidConfig, "incoming length is negative");
  }
  if (f.dims != shape_.head_dim) {
    throw Error(ErrorCode::kShape, "rope frequencies do not match head_dim");
  }
  if (incoming_len > window_ - system_len()) {
    throw Error(ErrorCode::kOverflow,
                "incoming block of " + std::to_string(incoming_len) +
                    " entries cannot fit window " + std::to_string(window_) +
                    " next to a system segment of " +
                    std::to_string(system_len()));
  }
  std::vector<EvictionReport> reports;
  while (size() + incoming_len > window_) {
    evict_once(f);
    reports.push_back(history_.back());
  }
  return reports;
}

void DualCache::evict_once(const rope::RopeFreqs& f) {
  const std::int64_t before = streaming_len();
  const std::int64_t k = eviction_count(evict_fraction_, before);
  const int kv_dim = shape_.kv_dim();

  streaming_.positions.erase(streaming_.positions.begin(),
                             streaming_.positions.begin() + k);
  for (int l = 0; l < shape_.n_layers; ++l) {
    erase_front(streaming_.keys[static_cast<std::size_t>(l)], k, kv_dim);
    erase_front(streaming_.values[static_cast<std::size_t>(l)], k, kv_dim);
  }

  const std::int64_t first_free =
      system_.positions.empty() ? 0 : system_.positions.back() + 1;
  std::int64_t delta = 0;
  if (!streaming_.positions.empty()) {
    delta = streaming_.positions.front() - first_free;
  }
  if (delta != 0) {
    const rope::Rotation back =
        rope::make_rotation(-static_cast<double>(delta), f);
    const auto hd = static_cast<std::size_t>(shape_.head_dim);
    for (auto& layer_keys : streaming_.keys) {
      for (std::size_t off = 0; off < layer_keys.size(); off += hd) {
        rope::apply(back, std::span<double>(layer_keys.data() + off, hd));
      }
    }
    for (auto& p : streaming_.positions) p -= delta;
  }
  history_.push_back(EvictionReport{k, delta, first_free, before});
}

std::int64_t DualCache::next_position() const {
  if (!streaming_.positions.empty()) return streaming_.positions.back() + 1;
  if (!system_.positions.empty()) return system_.positions.back() + 1;
  return 0;
}

std::string DualCache::debug_dump() const {
  auto range = [](const SegmentStore& s) {
    if (s.positions.empty()) return nlohmann::json(nullptr);
    return nlohmann::json::array({s.positions.front(), s.positions.back()});
  };
  nlohmann::json j;
  j["window"] = window_;
  j["system_len"] = system_len();
  j["streaming_len"] = streaming_len();
  j["system_positions"] = range(system_);
  j["streaming_positions"] = range(streaming_);
  auto& hist = j["evictions"] = nlohmann::json::array();
  for (const auto& r : history_) {
    hist.push_back({{"evicted_count", r.evicted_count},
                    {"delta", r.delta},
                    {"new_first_position", r.new_first_position},
                    {"streaming_len_before", r.streaming_len_before}});
  }
  return j.dump(2);
}

}  // namespace proact::kv
