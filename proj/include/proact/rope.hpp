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

// Rotary position embedding over interleaved channel pairs (2m, 2m+1).
//
// R(p) is block diagonal with 2x2 rotations by p * freqs[m]. Rotations
// compose additively, R(a) R(b) == R(a + b), which is what lets a cached key
// rotated at position p be moved to position p - delta by applying R(-delta)
// instead of re-encoding the token.

namespace proact::rope {

struct RopeFreqs {
  int dims = 0;
  double base = 10000.0;
  std::vector<double> freqs;  // dims / 2 entries, strictly decreasing
};

struct RotationAngle {
  double position = 0.0;
  std::vector<double> theta_per_pair;
};

inline constexpr double kDefaultBase = 10000.0;

/// freqs[m] = base^(-2m/d). Throws kInvalidConfig on odd d, d < 2 or base <= 1.
RopeFreqs default_freqs(int dims, double base = kDefaultBase);

RotationAngle angles(double position, const RopeFreqs& f);

void rotate_inplace(std::span<double> x, double position, const RopeFreqs& f);

/// cos/sin table for one position, reusable across every head of a token.
struct Rotation {
  std::vector<double> cos;
  std::vector<double> sin;
};

Rotation make_rotation(double position, const RopeFreqs& f);

void apply(const Rotation& r, std::span<double> x);

std::vector<double> rotate(std::span<const double> x, double position,
                           const RopeFreqs& f);

/// Re-bases a key that was rotated at p so it reads as rotated at p - delta.
std::vector<double> shift(std::span<const double> k_rotated, double delta,
                          const RopeFreqs& f);

void shift_inplace(std::span<double> k_rotated, double delta,
                   const RopeFreqs& f);

}  // namespace proact::rope
