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

#include "proact/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <spdlog/spdlog.h>

#include "proact/error.hpp"

namespace proact::loss {

namespace {

void check_lengths(std::size_t p, std::size_t y) {
  if (p != y) {
    throw Error(ErrorCode::kShape, "probability/label length mismatch (" +
                                       std::to_string(p) + " vs " +
                                       std::to_string(y) + ")");
  }
  if (p == 0) throw Error(ErrorCode::kShape, "empty label timeline");
}

double mean_label(std::span<const int> y) {
  return static_cast<double>(std::accumulate(y.begin(), y.end(), 0L)) /
         static_cast<double>(y.size());
}

double mean(std::span<const double> p) {
  return std::accumulate(p.begin(), p.end(), 0.0) /
         static_cast<double>(p.size());
}

void check_targets(const Eigen::MatrixXd& logits, std::span<const int> targets,
                   std::span<const bool> mask) {
  const auto n = static_cast<std::size_t>(logits.cols());
  if (targets.size() != n || mask.size() != n) {
    throw Error(ErrorCode::kShape, "logits/targets/mask length mismatch");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i] && (targets[i] < 0 || targets[i] >= logits.rows())) {
      throw Error(ErrorCode::kInvalidTarget,
                  "target " + std::to_string(targets[i]) + " at position " +
                      std::to_string(i) + " outside vocabulary");
    }
  }
}

}  // namespace

void LossConfig::validate() const {
  if (!(gamma >= 1.0)) throw Error(ErrorCode::kInvalidConfig, "gamma must be >= 1");
  if (!(alpha >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "alpha must be >= 0");
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw Error(ErrorCode::kInvalidConfig, "epsilon must be in (0, 0.5)");
  }
}

std::vector<double> transition_weights(std::span<const int> y, double gamma) {
  std::vector<double> w(y.size(), 1.0);
  for (std::size_t t = 1; t < y.size(); ++t) {
    if (y[t] != y[t - 1]) w[t] = gamma;
  }
  return w;
}

double loss_cls(std::span<const double> p, std::span<const int> y,
                const LossConfig& cfg) {
  check_lengths(p.size(), y.size());
  const auto w = transition_weights(y, cfg.gamma);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t t = 0; t < p.size(); ++t) {
    const double pc = std::clamp(p[t], cfg.epsilon, 1.0 - cfg.epsilon);
    const double bce = y[t] ? -std::log(pc) : -std::log1p(-pc);
    num += w[t] * bce;
    den += w[t];
  }
  return num / den;
}

RegTerms loss_reg_terms(std::span<const double> p, std::span<const int> y) {
  check_lengths(p.size(), y.size());
  RegTerms r;
  std::size_t persist = 0;
  for (std::size_t t = 1; t < p.size(); ++t) {
    if (y[t] != y[t - 1]) continue;
    const double d = p[t] - p[t - 1];
    r.smooth += d * d;
    ++persist;
  }
  if (persist > 0) r.smooth /= static_cast<double>(persist);
  const double gap = mean(p) - mean_label(y);
  r.rate = gap * gap;
  return r;
}

double loss_reg(std::span<const double> p, std::span<const int> y) {
  const RegTerms r = loss_reg_terms(p, y);
  return r.smooth + r.rate;
}

double loss_main(const Eigen::MatrixXd& logits, std::span<const int> targets,
                 std::span<const bool> mask) {
  check_targets(logits, targets, mask);
  double total = 0.0;
  long count = 0;
  for (Eigen::Index i = 0; i < logits.cols(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    const auto col = logits.col(i);
    const double mx = col.maxCoeff();
    const double lse = mx + std::log((col.array() - mx).exp().sum());
    total += lse - col(targets[static_cast<std::size_t>(i)]);
    ++count;
  }
  if (count == 0) {
    spdlog::warn("loss_main: empty mask (all-silent sample), loss is 0");
    return 0.0;
  }
  return total / static_cast<double>(count);
}

Eigen::MatrixXd grad_main(const Eigen::MatrixXd& logits,
                          std::span<const int> targets,
                          std::span<const bool> mask) {
  check_targets(logits, targets, mask);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
  const long count = std::count(mask.begin(), mask.end(), true);
  if (count == 0) return g;
  for (Eigen::Index i = 0; i < logits.cols(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    const auto col = logits.col(i);
    const double mx = col.maxCoeff();
    Eigen::VectorXd soft = (col.array() - mx).exp();
    soft /= soft.sum();
    soft(targets[static_cast<std::size_t>(i)]) -= 1.0;
    g.col(i) = soft / static_cast<double>(count);
  }
  return g;
}

double loss_total(double main, double cls, double reg, const LossConfig& cfg) {
  return main + cfg.alpha * (cls + reg);
}

double loss_response(std::span<const double> p, std::span<const int> y,
                     const LossConfig& cfg) {
  double resp = 0.0;
  if (cfg.use_cls) resp += loss_cls(p, y, cfg);
  const RegTerms r = loss_reg_terms(p, y);
  if (cfg.use_smooth) resp += r.smooth;
  if (cfg.use_rate) resp += r.rate;
  return cfg.alpha * resp;
}

std::vector<double> grad_response_p(std::span<const double> p,
                                    std::span<const int> y,
                                    const LossConfig& cfg) {
  check_lengths(p.size(), y.size());
  const std::size_t n = p.size();
  std::vector<double> g(n, 0.0);

  if (cfg.use_cls) {
    const auto w = transition_weights(y, cfg.gamma);
    const double den = std::accumulate(w.begin(), w.end(), 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      if (p[t] <= cfg.epsilon || p[t] >= 1.0 - cfg.epsilon) continue;
      const double d = y[t] ? -1.0 / p[t] : 1.0 / (1.0 - p[t]);
      g[t] += w[t] * d / den;
    }
  }
  if (cfg.use_smooth) {
    std::size_t persist = 0;
    for (std::size_t t = 1; t < n; ++t) persist += y[t] == y[t - 1];
    for (std::size_t t = 1; t < n && persist > 0; ++t) {
      if (y[t] != y[t - 1]) continue;
      const double d = 2.0 * (p[t] - p[t - 1]) / static_cast<double>(persist);
      g[t] += d;
      g[t - 1] -= d;
    }
  }
  if (cfg.use_rate) {
    // mean(y) is a constant target.
    const double d = 2.0 * (mean(p) - mean_label(y)) / static_cast<double>(n);
    for (auto& gt : g) gt += d;
  }
  for (auto& gt : g) gt *= cfg.alpha;
  return g;
}

std::vector<double> grad_response(std::span<const double> p,
                                  std::span<const int> y,
                                  const LossConfig& cfg,
                                  std::span<const std::vector<double>> chain) {
  if (chain.size() != p.size()) {
    throw Error(ErrorCode::kShape, "chain length does not match timeline");
  }
  const auto dp = grad_response_p(p, y, cfg);
  std::vector<double> g(chain.empty() ? 0 : chain.front().size(), 0.0);
  for (std::size_t t = 0; t < chain.size(); ++t) {
    if (chain[t].size() != g.size()) {
      throw Error(ErrorCode::kShape, "ragged parameter Jacobian");
    }
    if (dp[t] == 0.0) continue;
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += dp[t] * chain[t][k];
  }
  return g;
}

}  // namespace proact::loss
