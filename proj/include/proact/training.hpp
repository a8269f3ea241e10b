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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "proact/losses.hpp"
#include "proact/model.hpp"
#include "proact/streaming.hpp"
#include "proact/vocab.hpp"

// Head training over a frozen backbone. FLAG states and LM features do not
// depend on the trainable weights, so they are collected once up front.

namespace proact::train {

/// Teacher-forced features of one stream, one entry per second.
struct StreamFeatures {
  std::vector<model::Vec> h;
  std::vector<int> y;
  std::vector<model::Mat> lm_features;
  std::vector<std::vector<int>> lm_targets;
};

using ReplyFn = std::function<std::optional<std::string>(std::int64_t t)>;

/// y comes from `labels` when given (one per chunk), else from whether a
/// reply was spoken.
StreamFeatures collect_features(const model::Transformer& model,
                                const text::Vocab& vocab,
                                std::span<const stream::ChunkInput> chunks,
                                const ReplyFn& reply,
                                const stream::EngineConfig& cfg,
                                std::span<const int> labels = {});

struct ClipSample {
  std::vector<model::Vec> h;
  std::vector<int> y;
  model::Mat lm_features;  // [d_model x n], every active second concatenated
  std::vector<int> lm_targets;
};

/// Cuts the stream into clip_len-second windows every clip_len - overlap
/// seconds; a trailing partial window is dropped unless it is the only one.
std::vector<ClipSample> make_clips(const StreamFeatures& f,
                                   std::int64_t clip_len = 36,
                                   std::int64_t overlap = 18);

struct TrainConfig {
  loss::LossConfig loss;
  int steps = 2000;
  double lr = 3e-3;
  int batch = 8;
  double clip_norm = 1.0;  // global norm per head, <= 0 disables
  std::uint64_t seed = 0;
  bool train_lm = true;

  void validate() const;
};

class Adam {
 public:
  explicit Adam(std::size_t n, double lr, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);
  void step(std::span<double> params, std::span<const double> grad);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

struct LossPoint {
  int step = 0;
  double main = 0.0;
  double cls = 0.0;
  double reg = 0.0;
  double total = 0.0;
};

struct TrainResult {
  model::ResponseHeadWeights head;
  model::LmHeadWeights lm;
  std::vector<LossPoint> curve;
};

/// Loss terms of one clip under the given heads.
LossPoint evaluate_clip(const ClipSample& clip,
                        const model::ResponseHeadWeights& head,
                        const model::LmHeadWeights& lm,
                        const loss::LossConfig& cfg);

/// Mini-batch Adam on L_main + alpha (L_cls + L_reg). A non-finite loss
/// aborts with a numeric error naming the step and the offending terms.
TrainResult train_heads(const model::ResponseHeadWeights& head,
                        const model::LmHeadWeights& lm,
                        std::span<const ClipSample> clips,
                        const TrainConfig& cfg);

std::vector<double> predict(const model::ResponseHeadWeights& head,
                            std::span<const model::Vec> h);

/// step,main,cls,reg,total
std::string curve_csv(std::span<const LossPoint> curve);

}  // namespace proact::train
