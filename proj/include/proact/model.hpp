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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "proact/kv_cache.hpp"
#include "proact/rope.hpp"

namespace proact::model {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct ModelConfig {
  int n_layers = 2;
  int n_heads = 4;
  int d_model = 128;
  int d_head = 32;
  int mlp_hidden = 256;
  int head_hidden = 64;  // response head width
  int vocab_size = 0;
  std::int64_t window = 4096;
  double rope_base = rope::kDefaultBase;
  int gen_budget = 12;
  double norm_eps = 1e-6;
  // Heads [0, local_heads) get a shared query/key bias of this magnitude on
  // every rotation pair, which makes their scores peak at short relative
  // distance. Zero disables it.
  int local_heads = 4;
  double local_bias = 2.5;

  int kv_dim() const { return n_heads * d_head; }
  kv::CacheShape cache_shape() const { return {n_layers, n_heads, d_head}; }
  void validate() const;

  std::string to_json() const;
  static ModelConfig from_json(std::string_view json);
};

struct LayerWeights {
  Vec attn_norm;
  Mat wq, wk, wv, wo;  // [kv_dim x d_model], wo is [d_model x kv_dim]
  Vec bq, bk, bv;
  Vec mlp_norm;
  Mat w_gate, w_up;  // [mlp_hidden x d_model]
  Mat w_down;        // [d_model x mlp_hidden]
};

struct LmHeadWeights {
  Mat weight;  // [vocab x d_model]
  Vec bias;
};

/// p = sigmoid(w_out . (sigmoid(W_g h + b_g) * tanh(W_v h + b_v)) + b_out)
struct ResponseHeadWeights {
  Mat w_gate;   // [head_hidden x d_model]
  Vec b_gate;
  Mat w_value;  // [head_hidden x d_model]
  Vec b_value;
  Vec w_out;
  double b_out = 0.0;

  std::size_t num_params() const;
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
};

struct ModelWeights {
  Mat embedding;  // [d_model x vocab], one column per token
  std::vector<LayerWeights> layers;
  Vec final_norm;
  LmHeadWeights lm;
  ResponseHeadWeights head;

  static ModelWeights random(const ModelConfig& cfg, std::uint64_t seed);
};

/// Response-head parameters drawn the same way `ModelWeights::random` does.
ResponseHeadWeights random_response_head(const ModelConfig& cfg,
                                         std::uint64_t seed);

/// Called once per layer with the un-rotated keys of the tokens being
/// prefilled ([kv_dim x n]). Only tests hook this.
using RawKeyTap =
    std::function<void(kv::Segment, int layer,
                       std::span<const std::int64_t> positions,
                       const Mat& raw_keys)>;

struct ForwardResult {
  // hidden[0] is the embedding output, hidden[l] the residual stream after
  // block l; each is [d_model x n_new_tokens].
  std::vector<Mat> hidden;
  std::vector<std::int64_t> positions;
  Vec last_logits;
};

struct FlagState {
  Vec h;
  std::int64_t chunk_index = 0;
};

/// Decoder-only transformer: pre-norm blocks, RMS normalization, RoPE
/// attention with q/k/v biases and a SwiGLU MLP. Weights are immutable after
/// construction; all mutable state lives in the caller's DualCache.
class Transformer {
 public:
  Transformer(ModelConfig cfg, ModelWeights weights);

  const ModelConfig& config() const { return cfg_; }
  const ModelWeights& weights() const { return weights_; }
  ModelWeights& mutable_weights() { return weights_; }
  const rope::RopeFreqs& freqs() const { return freqs_; }

  kv::DualCache make_cache() const;
  kv::DualCache make_cache(std::int64_t window) const;

  /// Evicts if needed, runs causal attention over cache ++ tokens and
  /// appends the new keys/values to `segment`.
  ForwardResult prefill(std::span<const int> tokens, kv::DualCache& cache,
                        kv::Segment segment,
                        const RawKeyTap* tap = nullptr) const;

  Vec decode_step(int token, kv::DualCache& cache,
                  const RawKeyTap* tap = nullptr) const;

  /// Final norm, then LM head.
  Vec logits(const Eigen::Ref<const Vec>& last_hidden) const;
  Vec final_features(const Eigen::Ref<const Vec>& last_hidden) const;

 private:
  ModelConfig cfg_;
  ModelWeights weights_;
  rope::RopeFreqs freqs_;
};

/// Penultimate-layer vector at `flag_pos`.
FlagState flag_hidden(const ForwardResult& states, std::int64_t flag_pos,
                      int n_layers);

/// Locates the single FLAG token in `tokens` and extracts its state.
FlagState flag_hidden(const ForwardResult& states, std::span<const int> tokens,
                      int flag_id, int n_layers);

double response_score(const Vec& h, const ResponseHeadWeights& w);
inline double response_score(const FlagState& s, const ResponseHeadWeights& w) {
  return response_score(s.h, w);
}

/// p and dp/dtheta in `ResponseHeadWeights::flatten` order.
struct ScoreWithGrad {
  double p = 0.0;
  std::vector<double> dp;
};
ScoreWithGrad response_score_grad(const Vec& h, const ResponseHeadWeights& w);

enum class Action { kSilence, kSpeak };

inline Action decide(double p, double tau) {
  return p >= tau ? Action::kSpeak : Action::kSilence;
}

inline constexpr double kDefaultThreshold = 0.3;

}  // namespace proact::model
