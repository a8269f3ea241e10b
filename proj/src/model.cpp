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

#include "proact/model.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

#include "proact/error.hpp"

namespace proact::model {

namespace {

using ConstMap = Eigen::Map<const Mat>;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Keeps p inside the open interval even when the logit saturates.
double open_unit(double p) {
  return std::clamp(p, std::numeric_limits<double>::min(),
                    std::nextafter(1.0, 0.0));
}

Mat rms_norm(const Mat& x, const Vec& gain, double eps) {
  Mat out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double ms = x.col(c).squaredNorm() / static_cast<double>(x.rows());
    out.col(c) = x.col(c).cwiseProduct(gain) / std::sqrt(ms + eps);
  }
  return out;
}

class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed) : rng_(seed) {}

  Mat matrix(Eigen::Index rows, Eigen::Index cols, double stddev) {
    Mat m(rows, cols);
    std::normal_distribution<double> dist(0.0, stddev);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng_);
    return m;
  }
  Vec vector(Eigen::Index n, double stddev) { return matrix(n, 1, stddev); }

 private:
  std::mt19937_64 rng_;
};

constexpr std::uint64_t kHeadSeedSalt = 0x9e3779b97f4a7c15ULL;

}  // namespace

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kInvalidConfig, msg);
  };
  if (n_layers < 1) fail("n_layers must be >= 1");
  if (n_heads < 1) fail("n_heads must be >= 1");
  if (d_head < 2 || d_head % 2 != 0) fail("d_head must be even and >= 2");
  if (d_model != n_heads * d_head) fail("d_model must equal n_heads * d_head");
  if (mlp_hidden < 1 || head_hidden < 1) fail("hidden sizes must be >= 1");
  if (vocab_size < 1) fail("vocab_size must be >= 1");
  if (gen_budget < 1) fail("gen_budget must be >= 1");
  if (window < 1) fail("window must be >= 1");
  if (!(rope_base > 1.0)) fail("rope base must be > 1");
  if (local_heads < 0 || local_heads > n_heads) fail("local_heads out of range");
}

std::string ModelConfig::to_json() const {
  nlohmann::json j = {{"n_layers", n_layers},       {"n_heads", n_heads},
                      {"d_model", d_model},         {"d_head", d_head},
                      {"mlp_hidden", mlp_hidden},   {"head_hidden", head_hidden},
                      {"vocab_size", vocab_size},   {"window", window},
                      {"rope_base", rope_base},     {"gen_budget", gen_budget},
                      {"norm_eps", norm_eps},       {"local_heads", local_heads},
                      {"local_bias", local_bias}};
  return j.dump(2);
}

ModelConfig ModelConfig::from_json(std::string_view json) {
  ModelConfig c;
  try {
    auto j = nlohmann::json::parse(json);
    c.n_layers = j.value("n_layers", c.n_layers);
    c.n_heads = j.value("n_heads", c.n_heads);
    c.d_model = j.value("d_model", c.d_model);
    c.d_head = j.value("d_head", c.d_head);
    c.mlp_hidden = j.value("mlp_hidden", c.mlp_hidden);
    c.head_hidden = j.value("head_hidden", c.head_hidden);
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.window = j.value("window", c.window);
    c.rope_base = j.value("rope_base", c.rope_base);
    c.gen_budget = j.value("gen_budget", c.gen_budget);
    c.norm_eps = j.value("norm_eps", c.norm_eps);
    c.local_heads = j.value("local_heads", c.local_heads);
    c.local_bias = j.value("local_bias", c.local_bias);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

std::size_t ResponseHeadWeights::num_params() const {
  return static_cast<std::size_t>(w_gate.size() + b_gate.size() +
                                  w_value.size() + b_value.size() +
                                  w_out.size() + 1);
}

std::vector<double> ResponseHeadWeights::flatten() const {
  std::vector<double> out;
  out.reserve(num_params());
  out.insert(out.end(), w_gate.data(), w_gate.data() + w_gate.size());
  out.insert(out.end(), b_gate.data(), b_gate.data() + b_gate.size());
  out.insert(out.end(), w_value.data(), w_value.data() + w_value.size());
  out.insert(out.end(), b_value.data(), b_value.data() + b_value.size());
  out.insert(out.end(), w_out.data(), w_out.data() + w_out.size());
  out.push_back(b_out);
  return out;
}

void ResponseHeadWeights::assign(std::span<const double> flat) {
  if (flat.size() != num_params()) {
    throw Error(ErrorCode::kShape, "response head parameter count mismatch");
  }
  const double* p = flat.data();
  auto take = [&p](double* dst, Eigen::Index n) {
    std::copy(p, p + n, dst);
    p += n;
  };
  take(w_gate.data(), w_gate.size());
  take(b_gate.data(), b_gate.size());
  take(w_value.data(), w_value.size());
  take(b_value.data(), b_value.size());
  take(w_out.data(), w_out.size());
  b_out = *p;
}

ResponseHeadWeights random_response_head(const ModelConfig& cfg,
                                         std::uint64_t seed) {
  Gaussian g(seed ^ kHeadSeedSalt);
  const double in_std = 1.0 / std::sqrt(static_cast<double>(cfg.d_model));
  ResponseHeadWeights h;
  h.w_gate = g.matrix(cfg.head_hidden, cfg.d_model, in_std);
  h.b_gate = Vec::Zero(cfg.head_hidden);
  h.w_value = g.matrix(cfg.head_hidden, cfg.d_model, in_std);
  h.b_value = Vec::Zero(cfg.head_hidden);
  h.w_out = g.vector(cfg.head_hidden,
                     1.0 / std::sqrt(static_cast<double>(cfg.head_hidden)));
  h.b_out = 0.0;
  return h;
}

ModelWeights ModelWeights::random(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Gaussian g(seed);
  const double in_std = 1.0 / std::sqrt(static_cast<double>(cfg.d_model));
  ModelWeights w;
  w.embedding = g.matrix(cfg.d_model, cfg.vocab_size, 1.0);
  for (int l = 0; l < cfg.n_layers; ++l) {
    LayerWeights lw;
    lw.attn_norm = Vec::Ones(cfg.d_model);
    lw.wq = g.matrix(cfg.kv_dim(), cfg.d_model, in_std);
    lw.wk = g.matrix(cfg.kv_dim(), cfg.d_model, in_std);
    lw.wv = g.matrix(cfg.kv_dim(), cfg.d_model, in_std);
    lw.wo = g.matrix(cfg.d_model, cfg.kv_dim(),
                     1.0 / std::sqrt(static_cast<double>(cfg.kv_dim())));
    lw.bq = Vec::Zero(cfg.kv_dim());
    lw.bk = Vec::Zero(cfg.kv_dim());
    lw.bv = Vec::Zero(cfg.kv_dim());
    for (int h = 0; h < cfg.local_heads; ++h) {
      for (int m = 0; m < cfg.d_head / 2; ++m) {
        lw.bq(h * cfg.d_head + 2 * m) = cfg.local_bias;
        lw.bk(h * cfg.d_head + 2 * m) = cfg.local_bias;
      }
    }
    lw.mlp_norm = Vec::Ones(cfg.d_model);
    lw.w_gate = g.matrix(cfg.mlp_hidden, cfg.d_model, in_std);
    lw.w_up = g.matrix(cfg.mlp_hidden, cfg.d_model, in_std);
    lw.w_down = g.matrix(cfg.d_model, cfg.mlp_hidden,
                         1.0 / std::sqrt(static_cast<double>(cfg.mlp_hidden)));
    w.layers.push_back(std::move(lw));
  }
  w.final_norm = Vec::Ones(cfg.d_model);
  w.lm.weight = g.matrix(cfg.vocab_size, cfg.d_model, 0.02);
  w.lm.bias = Vec::Zero(cfg.vocab_size);
  w.head = random_response_head(cfg, seed);
  return w;
}

Transformer::Transformer(ModelConfig cfg, ModelWeights weights)
    : cfg_(cfg),
      weights_(std::move(weights)),
      freqs_(rope::default_freqs(cfg.d_head, cfg.rope_base)) {
  cfg_.validate();
  if (weights_.layers.size() != static_cast<std::size_t>(cfg_.n_layers) ||
      weights_.embedding.rows() != cfg_.d_model ||
      weights_.embedding.cols() != cfg_.vocab_size ||
      weights_.lm.weight.rows() != cfg_.vocab_size ||
      weights_.head.w_gate.cols() != cfg_.d_model) {
    throw Error(ErrorCode::kShape, "weights do not match model config");
  }
}

kv::DualCache Transformer::make_cache() const {
  return make_cache(cfg_.window);
}

kv::DualCache Transformer::make_cache(std::int64_t window) const {
  return kv::DualCache(cfg_.cache_shape(), window);
}

ForwardResult Transformer::prefill(std::span<const int> tokens,
                                   kv::DualCache& cache, kv::Segment segment,
                                   const RawKeyTap* tap) const {
  if (tokens.empty()) throw Error(ErrorCode::kShape, "prefill of zero tokens");
  const auto& shape = cache.shape();
  if (shape.n_layers != cfg_.n_layers || shape.n_heads != cfg_.n_heads ||
      shape.head_dim != cfg_.d_head) {
    throw Error(ErrorCode::kShape, "cache shape does not match model");
  }
  for (int t : tokens) {
    if (t < 0 || t >= cfg_.vocab_size) {
      throw Error(ErrorCode::kOutOfRange,
                  "token id " + std::to_string(t) + " outside vocabulary");
    }
  }
  const auto n = static_cast<Eigen::Index>(tokens.size());
  cache.maybe_evict(n, freqs_);

  ForwardResult out;
  const std::int64_t first = cache.next_position();
  out.positions.resize(tokens.size());
  std::vector<rope::Rotation> rotations;
  rotations.reserve(tokens.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    out.positions[static_cast<std::size_t>(i)] = first + i;
    rotations.push_back(
        rope::make_rotation(static_cast<double>(first + i), freqs_));
  }

  const int dh = cfg_.d_head;
  const int kv_dim = cfg_.kv_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto& sys = cache.segment(kv::Segment::kSystem);
  const auto& str = cache.segment(kv::Segment::kStreaming);
  const auto ns = static_cast<Eigen::Index>(sys.size());
  const auto nt = static_cast<Eigen::Index>(str.size());
  const Eigen::Index total = ns + nt + n;

  Mat x(cfg_.d_model, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.col(i) = weights_.embedding.col(tokens[static_cast<std::size_t>(i)]);
  }
  out.hidden.push_back(x);

  std::vector<std::vector<double>> new_keys(cfg_.n_layers), new_values(cfg_.n_layers);
  auto rotate_cols = [&](Mat& m) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int h = 0; h < cfg_.n_heads; ++h) {
        rope::apply(rotations[static_cast<std::size_t>(i)],
                    std::span<double>(m.col(i).data() + h * dh,
                                      static_cast<std::size_t>(dh)));
      }
    }
  };

  for (int l = 0; l < cfg_.n_layers; ++l) {
    const LayerWeights& lw = weights_.layers[static_cast<std::size_t>(l)];
    const auto li = static_cast<std::size_t>(l);
    const Mat xn = rms_norm(x, lw.attn_norm, cfg_.norm_eps);
    Mat q = (lw.wq * xn).colwise() + lw.bq;
    Mat k = (lw.wk * xn).colwise() + lw.bk;
    Mat v = (lw.wv * xn).colwise() + lw.bv;
    if (tap && *tap) (*tap)(segment, l, out.positions, k);
    rotate_cols(q);
    rotate_cols(k);

    const ConstMap ks(sys.keys[li].data(), kv_dim, ns);
    const ConstMap vs(sys.values[li].data(), kv_dim, ns);
    const ConstMap kt(str.keys[li].data(), kv_dim, nt);
    const ConstMap vt(str.values[li].data(), kv_dim, nt);

    Mat attn(kv_dim, n);
    Mat scores(total, n);
    for (int h = 0; h < cfg_.n_heads; ++h) {
      const auto qh = q.middleRows(h * dh, dh);
      scores.topRows(ns).noalias() = ks.middleRows(h * dh, dh).transpose() * qh;
      scores.middleRows(ns, nt).noalias() =
          kt.middleRows(h * dh, dh).transpose() * qh;
      scores.bottomRows(n).noalias() = k.middleRows(h * dh, dh).transpose() * qh;
      scores *= scale;
      for (Eigen::Index i = 0; i < n; ++i) {
        // new token i sees the whole cache plus new tokens 0..i
        const Eigen::Index visible = ns + nt + i + 1;
        auto col = scores.col(i);
        const double mx = col.head(visible).maxCoeff();
        col.head(visible) = (col.head(visible).array() - mx).exp();
        col.tail(total - visible).setZero();
        col /= col.head(visible).sum();
      }
      auto oh = attn.middleRows(h * dh, dh);
      oh.noalias() = vs.middleRows(h * dh, dh) * scores.topRows(ns);
      oh.noalias() += vt.middleRows(h * dh, dh) * scores.middleRows(ns, nt);
      oh.noalias() += v.middleRows(h * dh, dh) * scores.bottomRows(n);
    }
    x.noalias() += lw.wo * attn;

    const Mat xm = rms_norm(x, lw.mlp_norm, cfg_.norm_eps);
    const Mat gate = lw.w_gate * xm;
    const Mat up = lw.w_up * xm;
    const Mat act = (gate.array() / (1.0 + (-gate.array()).exp())) * up.array();
    x.noalias() += lw.w_down * act;
    out.hidden.push_back(x);

    new_keys[li].assign(k.data(), k.data() + k.size());
    new_values[li].assign(v.data(), v.data() + v.size());
  }

  cache.append_block(segment, out.positions, new_keys, new_values);
  out.last_logits = logits(x.col(n - 1));
  return out;
}

Vec Transformer::decode_step(int token, kv::DualCache& cache,
                             const RawKeyTap* tap) const {
  const int tokens[1] = {token};
  return prefill(tokens, cache, kv::Segment::kStreaming, tap).last_logits;
}

Vec Transformer::final_features(const Eigen::Ref<const Vec>& last_hidden) const {
  const double ms = last_hidden.squaredNorm() /
                    static_cast<double>(last_hidden.size());
  return last_hidden.cwiseProduct(weights_.final_norm) /
         std::sqrt(ms + cfg_.norm_eps);
}

Vec Transformer::logits(const Eigen::Ref<const Vec>& last_hidden) const {
  return weights_.lm.weight * final_features(last_hidden) + weights_.lm.bias;
}

FlagState flag_hidden(const ForwardResult& states, std::int64_t flag_pos,
                      int n_layers) {
  if (states.hidden.size() != static_cast<std::size_t>(n_layers) + 1) {
    throw Error(ErrorCode::kShape, "hidden state stack has wrong depth");
  }
  const Mat& penultimate = states.hidden[static_cast<std::size_t>(n_layers - 1)];
  if (flag_pos < 0 || flag_pos >= penultimate.cols()) {
    throw Error(ErrorCode::kMissingFlag,
                "flag position " + std::to_string(flag_pos) +
                    " outside the chunk span");
  }
  FlagState s;
  s.h = penultimate.col(flag_pos);
  return s;
}

FlagState flag_hidden(const ForwardResult& states, std::span<const int> tokens,
                      int flag_id, int n_layers) {
  std::int64_t pos = -1;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] != flag_id) continue;
    if (pos >= 0) {
      throw Error(ErrorCode::kMissingFlag, "chunk carries more than one FLAG");
    }
    pos = static_cast<std::int64_t>(i);
  }
  if (pos < 0) throw Error(ErrorCode::kMissingFlag, "chunk carries no FLAG");
  return flag_hidden(states, pos, n_layers);
}

double response_score(const Vec& h, const ResponseHeadWeights& w) {
  const Vec gate = (w.w_gate * h + w.b_gate).unaryExpr(&sigmoid);
  const Vec value = (w.w_value * h + w.b_value).array().tanh();
  const double z = w.w_out.dot(gate.cwiseProduct(value)) + w.b_out;
  return open_unit(sigmoid(z));
}

ScoreWithGrad response_score_grad(const Vec& h, const ResponseHeadWeights& w) {
  const Vec gate = (w.w_gate * h + w.b_gate).unaryExpr(&sigmoid);
  const Vec value = (w.w_value * h + w.b_value).array().tanh();
  const double z = w.w_out.dot(gate.cwiseProduct(value)) + w.b_out;
  const double sz = sigmoid(z);
  const double dz = sz * (1.0 - sz);

  const Vec d_gate_pre =
      (w.w_out.array() * value.array() * gate.array() * (1.0 - gate.array()))
          .matrix() * dz;
  const Vec d_value_pre =
      (w.w_out.array() * gate.array() * (1.0 - value.array().square()))
          .matrix() * dz;

  ResponseHeadWeights g;
  g.w_gate = d_gate_pre * h.transpose();
  g.b_gate = d_gate_pre;
  g.w_value = d_value_pre * h.transpose();
  g.b_value = d_value_pre;
  g.w_out = gate.cwiseProduct(value) * dz;
  g.b_out = dz;
  return {open_unit(sz), g.flatten()};
}

}  // namespace proact::model
