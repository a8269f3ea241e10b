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

#include "proact/rope.hpp"

#include <cmath>
#include <string>

#include "proact/error.hpp"

namespace proact::rope {

RopeFreqs default_freqs(int dims, double base) {
  if (dims < 2 || dims % 2 != 0) {
    throw Error(ErrorCode::kInvalidConfig,
                "rope dimension must be even and >= 2, got " +
                    std::to_string(dims));
  }
  if (!(base > 1.0)) {
    throw Error(ErrorCode::kInvalidConfig,
                "rope base must be > 1, got " + std::to_string(base));
  }
  RopeFreqs f;
  f.dims = dims;
  f.base = base;
  f.freqs.resize(static_cast<std::size_t>(dims / 2));
  for (int m = 0; m < dims / 2; ++m) {
    f.freqs[static_cast<std::size_t>(m)] =
        std::pow(base, -2.0 * static_cast<double>(m) / dims);
  }
  return f;
}

RotationAngle angles(double position, const RopeFreqs& f) {
  RotationAngle a;
  a.position = position;
  a.theta_per_pair.reserve(f.freqs.size());
  for (double w : f.freqs) a.theta_per_pair.push_back(position * w);
  return a;
}

void rotate_inplace(std::span<double> x, double position, const RopeFreqs& f) {
  if (x.size() != static_cast<std::size_t>(f.dims)) {
    throw Error(ErrorCode::kShape, "rope input has length " +
                                       std::to_string(x.size()) +
                                       ", expected " + std::to_string(f.dims));
  }
  if (position == 0.0) return;
  for (std::size_t m = 0; m < f.freqs.size(); ++m) {
    const double theta = position * f.freqs[m];
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double x0 = x[2 * m];
    const double x1 = x[2 * m + 1];
    x[2 * m] = x0 * c - x1 * s;
    x[2 * m + 1] = x0 * s + x1 * c;
  }
}

Rotation make_rotation(double position, const RopeFreqs& f) {
  Rotation r;
  r.cos.reserve(f.freqs.size());
  r.sin.reserve(f.freqs.size());
  for (double w : f.freqs) {
    r.cos.push_back(std::cos(position * w));
    r.sin.push_back(std::sin(position * w));
  }
  return r;
}

void apply(const Rotation& r, std::span<double> x) {
  if (x.size() != 2 * r.cos.size()) {
    throw Error(ErrorCode::kShape, "rope input has length " +
                                       std::to_string(x.size()) +
                                       ", expected " +
                                       std::to_string(2 * r.cos.size()));
  }
  for (std::size_t m = 0; m < r.cos.size(); ++m) {
    const double x0 = x[2 * m];
    const double x1 = x[2 * m + 1];
    x[2 * m] = x0 * r.cos[m] - x1 * r.sin[m];
    x[2 * m + 1] = x0 * r.sin[m] + x1 * r.cos[m];
  }
}

std::vector<double> rotate(std::span<const double> x, double position,
                           const RopeFreqs& f) {
  std::vector<double> out(x.begin(), x.end());
  rotate_inplace(out, position, f);
  return out;
}

std::vector<double> shift(std::span<const double> k_rotated, double delta,
                          const RopeFreqs& f) {
  return rotate(k_rotated, -delta, f);
}

void shift_inplace(std::span<double> k_rotated, double delta,
                   const RopeFreqs& f) {
  rotate_inplace(k_rotated, -delta, f);
}

}  // namespace proact::rope
