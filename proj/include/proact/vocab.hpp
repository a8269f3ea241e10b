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

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace proact::text {

using TokenId = int;

/// Fixed ids of the structural tokens. They always occupy the first slots of
/// the vocabulary in this order.
struct SpecialTokens {
  TokenId pad = 0;
  TokenId unk = 1;
  TokenId im_start = 2;
  TokenId im_end = 3;
  TokenId role_system = 4;
  TokenId role_user = 5;
  TokenId role_assistant = 6;
  TokenId history_start = 7;
  TokenId history_end = 8;
  TokenId vision_bos = 9;
  TokenId vision_eos = 10;
  TokenId query_start = 11;
  TokenId query_end = 12;
  TokenId flag = 13;
  TokenId ellipsis = 14;  // silence placeholder and continuation marker
};

inline constexpr int kNumSpecial = 15;
inline constexpr std::string_view kSilencePlaceholder = "...";

/// Whitespace tokenizer over [specials][visual pseudo-tokens][words].
///
/// Visual pseudo-tokens stand in for one frame's worth of vision features;
/// the last `n_event` of them form the synthetic "event" sub-range.
class Vocab {
 public:
  Vocab() = default;
  Vocab(int n_visual, int n_event, std::vector<std::string> words);

  /// Collects every whitespace-separated word of the corpus, in first-seen
  /// order, skipping anything that already is a special token.
  static Vocab build(std::span<const std::string> corpus, int n_visual,
                     int n_event);

  TokenId id(std::string_view token) const;  // unk fallback
  const std::string& token(TokenId id) const;
  int size() const { return static_cast<int>(tokens_.size()); }

  std::vector<TokenId> encode(std::string_view text) const;
  std::string decode(std::span<const TokenId> ids) const;

  const SpecialTokens& special() const { return special_; }
  int n_visual() const { return n_visual_; }
  int n_event() const { return n_event_; }
  TokenId visual(int index) const;
  bool is_special(TokenId id) const { return id >= 0 && id < kNumSpecial; }
  bool is_visual(TokenId id) const {
    return id >= kNumSpecial && id < kNumSpecial + n_visual_;
  }
  bool is_event(TokenId id) const {
    return is_visual(id) && id >= kNumSpecial + n_visual_ - n_event_;
  }
  bool is_word(TokenId id) const {
    return id >= kNumSpecial + n_visual_ && id < size();
  }
  std::vector<std::string> words() const;

  std::string to_json() const;
  static Vocab from_json(std::string_view json);

 private:
  SpecialTokens special_;
  int n_visual_ = 0;
  int n_event_ = 0;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace proact::text
