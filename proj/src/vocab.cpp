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

#include "proact/vocab.hpp"

#include <array>
#include <sstream>

#include <nlohmann/json.hpp>

#include "proact/error.hpp"

namespace proact::text {

namespace {

constexpr std::array<std::string_view, kNumSpecial> kSpecialNames = {
    "<|pad|>",         "<unk>",         "<|im_start|>",    "<|im_end|>",
    "system",          "user",          "assistant",       "<|history_start|>",
    "<|history_end|>", "<|vision_bos|>", "<|vision_eos|>", "<|query_start|>",
    "<|query_end|>",   "<|FLAG|>",      "...",
};

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) out.push_back(std::move(w));
  return out;
}

}  // namespace

Vocab::Vocab(int n_visual, int n_event, std::vector<std::string> words)
    : n_visual_(n_visual), n_event_(n_event) {
  if (n_visual < 1 || n_event < 0 || n_event > n_visual) {
    throw Error(ErrorCode::kInvalidConfig,
                "visual range must be non-empty and contain the event range");
  }
  for (auto name : kSpecialNames) tokens_.emplace_back(name);
  for (int i = 0; i < n_visual; ++i) {
    tokens_.push_back("<|v" + std::to_string(i) + "|>");
  }
  for (auto& w : words) tokens_.push_back(std::move(w));
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    auto [it, inserted] =
        index_.emplace(tokens_[i], static_cast<TokenId>(i));
    if (!inserted) {
      throw Error(ErrorCode::kInvalidConfig,
                  "duplicate vocabulary entry '" + tokens_[i] + "'");
    }
  }
}

Vocab Vocab::build(std::span<const std::string> corpus, int n_visual,
                   int n_event) {
  Vocab probe(n_visual, n_event, {});
  std::vector<std::string> words;
  std::unordered_map<std::string, bool> seen;
  for (const auto& line : corpus) {
    for (auto& w : split_words(line)) {
      if (probe.index_.contains(w) || seen.contains(w)) continue;
      seen.emplace(w, true);
      words.push_back(std::move(w));
    }
  }
  return Vocab(n_visual, n_event, std::move(words));
}

TokenId Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? special_.unk : it->second;
}

const std::string& Vocab::token(TokenId id) const {
  if (id < 0 || id >= size()) {
    throw Error(ErrorCode::kOutOfRange,
                "token id " + std::to_string(id) + " outside vocabulary");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> Vocab::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  for (const auto& w : split_words(text)) ids.push_back(id(w));
  return ids;
}

std::string Vocab::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId t : ids) {
    if (!out.empty()) out.push_back(' ');
    out += token(t);
  }
  return out;
}

TokenId Vocab::visual(int index) const {
  if (index < 0 || index >= n_visual_) {
    throw Error(ErrorCode::kOutOfRange,
                "visual token index " + std::to_string(index) +
                    " outside [0, " + std::to_string(n_visual_) + ")");
  }
  return kNumSpecial + index;
}

std::vector<std::string> Vocab::words() const {
  return {tokens_.begin() + kNumSpecial + n_visual_, tokens_.end()};
}

std::string Vocab::to_json() const {
  nlohmann::json j;
  j["n_visual"] = n_visual_;
  j["n_event"] = n_event_;
  j["words"] = words();
  return j.dump(1);
}

Vocab Vocab::from_json(std::string_view json) {
  try {
    auto j = nlohmann::json::parse(json);
    return Vocab(j.at("n_visual").get<int>(), j.at("n_event").get<int>(),
                 j.at("words").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("vocabulary: ") + e.what());
  }
}

}  // namespace proact::text
