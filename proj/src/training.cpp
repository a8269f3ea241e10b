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

#include "proact/training.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "proact/error.hpp"

namespace proact::train {

namespace {

void clip_grad(std::span<double> g, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (double v : g) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    for (double& v : g) v *= max_norm / norm;
  }
}

std::vector<double> flatten_lm(const model::LmHeadWeights& lm) {
  std::vector<double> out(lm.weight.data(), lm.weight.data() + lm.weight.size());
  out.insert(out.end(), lm.bias.data(), lm.bias.data() + lm.bias.size());
  return out;
}

void assign_lm(model::LmHeadWeights& lm, std::span<const double> flat) {
  std::copy_n(flat.begin(), lm.weight.size(), lm.weight.data());
  std::copy_n(flat.begin() + lm.weight.size(), lm.bias.size(), lm.bias.data());
}

// Every LM target of a clip is supervised.
class FullMask {
 public:
  explicit FullMask(std::size_t n) : n_(n), data_(new bool[n]) {
    std::fill_n(data_.get(), n, true);
  }
  std::span<const bool> span() const { return {data_.get(), n_}; }

 private:
  std::size_t n_;
  std::unique_ptr<bool[]> data_;
};

model::Mat lm_logits(const model::LmHeadWeights& lm, const model::Mat& f) {
  model::Mat z = lm.weight * f;
  z.colwise() += lm.bias;
  return z;
}

}  // namespace

StreamFeatures collect_features(const model::Transformer& model,
                                const text::Vocab& vocab,
                                std::span<const stream::ChunkInput> chunks,
                                const ReplyFn& reply,
                                const stream::EngineConfig& cfg,
                                std::span<const int> labels) {
  if (!labels.empty() && labels.size() != chunks.size()) {
    throw Error(ErrorCode::kShape,
                fmt::format("{} labels for {} chunks", labels.size(),
                            chunks.size()));
  }
  StreamFeatures out;
  stream::Engine engine(model, vocab, cfg);
  for (const auto& c : chunks) {
    auto step = engine.step_forced(c, reply(c.t));
    out.h.push_back(std::move(step.flag.h));
    out.y.push_back(labels.empty() ? (step.active ? 1 : 0)
                                   : labels[out.y.size()]);
    out.lm_features.push_back(std::move(step.lm_features));
    out.lm_targets.push_back(std::move(step.lm_targets));
  }
  return out;
}

std::vector<ClipSample> make_clips(const StreamFeatures& f,
                                   std::int64_t clip_len,
                                   std::int64_t overlap) {
  if (!(clip_len > overlap && overlap >= 0)) {
    throw Error(ErrorCode::kInvalidConfig,
                "clip length must exceed a non-negative overlap");
  }
  const auto n = static_cast<std::int64_t>(f.h.size());
  std::vector<std::pair<std::int64_t, std::int64_t>> spans;
  for (std::int64_t s = 0; s + clip_len <= n; s += clip_len - overlap) {
    spans.emplace_back(s, s + clip_len);
  }
  if (spans.empty() && n > 0) spans.emplace_back(0, n);

  std::vector<ClipSample> out;
  for (auto [a, b] : spans) {
    ClipSample c;
    Eigen::Index cols = 0;
    for (std::int64_t t = a; t < b; ++t) {
      cols += f.lm_features[static_cast<std::size_t>(t)].cols();
    }
    const Eigen::Index d = f.h.empty() ? 0 : f.h.front().size();
    c.lm_features.resize(d, cols);
    Eigen::Index at = 0;
    for (std::int64_t t = a; t < b; ++t) {
      const auto i = static_cast<std::size_t>(t);
      c.h.push_back(f.h[i]);
      c.y.push_back(f.y[i]);
      const auto& m = f.lm_features[i];
      if (m.cols() > 0) {
        c.lm_features.middleCols(at, m.cols()) = m;
        at += m.cols();
      }
      c.lm_targets.insert(c.lm_targets.end(), f.lm_targets[i].begin(),
                          f.lm_targets[i].end());
    }
    out.push_back(std::move(c));
  }
  return out;
}

void TrainConfig::validate() const {
  loss.validate();
  if (steps < 0) throw Error(ErrorCode::kInvalidConfig, "steps must be >= 0");
  if (!(lr > 0.0)) throw Error(ErrorCode::kInvalidConfig, "lr must be > 0");
  if (batch < 1) throw Error(ErrorCode::kInvalidConfig, "batch must be >= 1");
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw Error(ErrorCode::kShape, "optimizer state size mismatch");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

std::vector<double> predict(const model::ResponseHeadWeights& head,
                            std::span<const model::Vec> h) {
  std::vector<double> p;
  p.reserve(h.size());
  for (const auto& v : h) p.push_back(model::response_score(v, head));
  return p;
}

LossPoint evaluate_clip(const ClipSample& clip,
                        const model::ResponseHeadWeights& head,
                        const model::LmHeadWeights& lm,
                        const loss::LossConfig& cfg) {
  LossPoint pt;
  const auto p = predict(head, clip.h);
  if (cfg.use_cls) pt.cls = loss::loss_cls(p, clip.y, cfg);
  const auto r = loss::loss_reg_terms(p, clip.y);
  pt.reg = (cfg.use_smooth ? r.smooth : 0.0) + (cfg.use_rate ? r.rate : 0.0);
  if (!clip.lm_targets.empty()) {
    const FullMask mask(clip.lm_targets.size());
    pt.main = loss::loss_main(lm_logits(lm, clip.lm_features), clip.lm_targets,
                              mask.span());
  }
  pt.total = loss::loss_total(pt.main, pt.cls, pt.reg, cfg);
  return pt;
}

TrainResult train_heads(const model::ResponseHeadWeights& head,
                        const model::LmHeadWeights& lm,
                        std::span<const ClipSample> clips,
                        const TrainConfig& cfg) {
  cfg.validate();
  TrainResult res{head, lm, {}};
  if (cfg.steps == 0) return res;
  if (clips.empty()) throw Error(ErrorCode::kShape, "no training clips");

  std::vector<double> theta = res.head.flatten();
  std::vector<double> phi = flatten_lm(res.lm);
  Adam opt_head(theta.size(), cfg.lr);
  Adam opt_lm(phi.size(), cfg.lr);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, clips.size() - 1);
  const auto bsz = static_cast<double>(cfg.batch);

  std::vector<double> g_head(theta.size());
  model::Mat g_w(res.lm.weight.rows(), res.lm.weight.cols());
  model::Vec g_b(res.lm.bias.size());

  for (int step = 1; step <= cfg.steps; ++step) {
    std::fill(g_head.begin(), g_head.end(), 0.0);
    g_w.setZero();
    g_b.setZero();
    LossPoint pt;
    pt.step = step;

    for (int b = 0; b < cfg.batch; ++b) {
      const ClipSample& clip = clips[pick(rng)];
      std::vector<double> p;
      std::vector<std::vector<double>> chain;
      for (const auto& h : clip.h) {
        auto sg = model::response_score_grad(h, res.head);
        p.push_back(sg.p);
        chain.push_back(std::move(sg.dp));
      }
      if (cfg.loss.use_cls) pt.cls += loss::loss_cls(p, clip.y, cfg.loss) / bsz;
      const auto r = loss::loss_reg_terms(p, clip.y);
      pt.reg += ((cfg.loss.use_smooth ? r.smooth : 0.0) +
                 (cfg.loss.use_rate ? r.rate : 0.0)) / bsz;
      const auto g = loss::grad_response(p, clip.y, cfg.loss, chain);
      for (std::size_t k = 0; k < g.size(); ++k) g_head[k] += g[k] / bsz;

      if (!clip.lm_targets.empty()) {
        const model::Mat z = lm_logits(res.lm, clip.lm_features);
        const FullMask mask(clip.lm_targets.size());
        const auto m = mask.span();
        pt.main += loss::loss_main(z, clip.lm_targets, m) / bsz;
        if (cfg.train_lm) {
          const model::Mat gz = loss::grad_main(z, clip.lm_targets, m);
          g_w += gz * clip.lm_features.transpose() / bsz;
          g_b += gz.rowwise().sum() / bsz;
        }
      }
    }
    pt.total = loss::loss_total(pt.main, pt.cls, pt.reg, cfg.loss);
    if (!std::isfinite(pt.total)) {
      throw Error(ErrorCode::kNumeric,
                  fmt::format("non-finite loss at step {}: main={} cls={} reg={}",
                              step, pt.main, pt.cls, pt.reg));
    }
    res.curve.push_back(pt);

    clip_grad(g_head, cfg.clip_norm);
    opt_head.step(theta, g_head);
    if (cfg.train_lm) {
      std::vector<double> g_lm(g_w.data(), g_w.data() + g_w.size());
      g_lm.insert(g_lm.end(), g_b.data(), g_b.data() + g_b.size());
      clip_grad(g_lm, cfg.clip_norm);
      opt_lm.step(phi, g_lm);
      assign_lm(res.lm, phi);
    }
    res.head.assign(theta);
    if (step % 200 == 0 || step == cfg.steps) {
      spdlog::debug("step {} total {:.5f} main {:.5f} cls {:.5f} reg {:.5f}",
                    step, pt.total, pt.main, pt.cls, pt.reg);
    }
  }
  return res;
}

std::string curve_csv(std::span<const LossPoint> curve) {
  std::string out = "step,main,cls,reg,total\n";
  for (const auto& p : curve) {
    out += fmt::format("{},{:.10g},{:.10g},{:.10g},{:.10g}\n", p.step, p.main,
                       p.cls, p.reg, p.total);
  }
  return out;
}

}  // namespace proact::train
