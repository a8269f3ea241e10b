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
#include <vector>

#include <Eigen/Dense>

namespace proact::loss {

struct LossConfig {
  double gamma = 5.0;     // weight at label transitions
  double alpha = 0.2;     // weight of the response loss
  double epsilon = 1e-7;  // probability clamp before logs
  // Ablation switches for the three response-loss terms.
  bool use_cls = true;
  bool use_smooth = true;
  bool use_rate = true;

  void validate() const;
};

/// w[0] = 1, w[t] = gamma where y[t] != y[t-1], else 1.
std::vector<double> transition_weights(std::span<const int> y, double gamma);

/// Transition-weighted binary cross-entropy normalized by the weight sum.
double loss_cls(std::span<const double> p, std::span<const int> y,
                const LossConfig& cfg);

/// Mean squared step over persistence positions (y[t] == y[t-1]), plus the
/// squared gap between mean(p) and mean(y).
double loss_reg(std::span<const double> p, std::span<const int> y);

/// Split form of the regularizer, used by ablations.
struct RegTerms {
  double smooth = 0.0;
  double rate = 0.0;
};
RegTerms loss_reg_terms(std::span<const double> p, std::span<const int> y);

/// Mean cross-entropy over masked positions. logits is [vocab x positions].
/// Returns 0 (and logs a warning) when the mask is empty.
double loss_main(const Eigen::MatrixXd& logits, std::span<const int> targets,
                 std::span<const bool> mask);

/// d loss_main / d logits, same shape as logits.
Eigen::MatrixXd grad_main(const Eigen::MatrixXd& logits,
                          std::span<const int> targets,
                          std::span<const bool> mask);

double loss_total(double main, double cls, double reg, const LossConfig& cfg);

/// Response loss alpha * (cls + reg) under the config's term switches.
double loss_response(std::span<const double> p, std::span<const int> y,
                     const LossConfig& cfg);

/// d loss_response / d p_t.
std::vector<double> grad_response_p(std::span<const double> p,
                                    std::span<const int> y,
                                    const LossConfig& cfg);

/// Chains d loss_response / d p through chain[t] = d p_t / d theta.
std::vector<double> grad_response(std::span<const double> p,
                                  std::span<const int> y,
                                  const LossConfig& cfg,
                                  std::span<const std::vector<double>> chain);

}  // namespace proact::loss
