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
#include <span>
#include <string>
#include <vector>

#include "proact/rope.hpp"

namespace proact::kv {

enum class Segment { kSystem, kStreaming };

struct CacheShape {
  int n_layers = 0;
  int n_heads = 0;
  int head_dim = 0;

  int kv_dim() const { return n_heads * head_dim; }
};

/// One token's keys and values for every layer. Keys are already rotated at
/// `position`; heads are laid out back to back inside each layer row.
struct CacheEntry {
  std::int64_t position = 0;
  std::vector<std::vector<double>> keys;    // [layer][kv_dim]
  std::vector<std::vector<double>> values;  // [layer][kv_dim]
};

struct EvictionReport {
  std::int64_t evicted_count = 0;
  std::int64_t delta = 0;               // p_j - p_i
  std::int64_t new_first_position = 0;  // p_i
  std::int64_t streaming_len_before = 0;
};

/// Token-major storage for one segment: row r of layer l lives at
/// keys[l][r * kv_dim, (r + 1) * kv_dim).
struct SegmentStore {
  std::vector<std::int64_t> positions;
  std::vector<std::vector<double>> keys;
  std::vector<std::vector<double>> values;

  std::int64_t size() const {
    return static_cast<std::int64_t>(positions.size());
  }
};

/// Key/value cache split into a persistent system segment and an evictable
/// streaming segment, bounded by a total entry budget.
///
/// When an incoming block would push the total over the window, the oldest
/// ceil(fraction * streaming_len) streaming entries are dropped and the
/// survivors are re-based so that the first one sits right after the system
/// prompt. Re-basing rotates the cached keys by R(-delta) in place; values
/// carry no positional signal and are left alone.
///
/// Single owner, not thread safe.
class DualCache {
 public:
  DualCache(CacheShape shape, std::int64_t window,
            double evict_fraction = 0.2);

  void append(Segment segment, std::span<const CacheEntry> entries);

  /// Bulk form used by the model: keys/values are [layer][n * kv_dim].
  void append_block(Segment segment, std::span<const std::int64_t> positions,
                    const std::vector<std::vector<double>>& keys,
                    const std::vector<std::vector<double>>& values);

  /// Evicts until `incoming_len` more entries fit. Returns one report per
  /// eviction pass (empty when nothing was evicted).
  std::vector<EvictionReport> maybe_evict(std::int64_t incoming_len,
                                          const rope::RopeFreqs& f);

  /// max position + 1 over both segments, 0 when empty.
  std::int64_t next_position() const;

  const CacheShape& shape() const { return shape_; }
  std::int64_t window() const { return window_; }
  double evict_fraction() const { return evict_fraction_; }
  std::int64_t system_len() const { return system_.size(); }
  std::int64_t streaming_len() const { return streaming_.size(); }
  std::int64_t size() const { return system_len() + streaming_len(); }
  bool empty() const { return size() == 0; }

  const SegmentStore& segment(Segment s) const {
    return s == Segment::kSystem ? system_ : streaming_;
  }
  const std::vector<EvictionReport>& history() const { return history_; }

  /// JSON summary: segment lengths, position ranges and eviction history.
  std::string debug_dump() const;

 private:
  void check_positions(Segment segment,
                       std::span<const std::int64_t> positions) const;
  void evict_once(const rope::RopeFreqs& f);

  CacheShape shape_;
  std::int64_t window_;
  double evict_fraction_;
  SegmentStore system_;
  SegmentStore streaming_;
  std::vector<EvictionReport> history_;
};

}  // namespace proact::kv
