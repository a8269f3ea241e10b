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

#include <filesystem>
#include <string>

#include "proact/model.hpp"
#include "proact/vocab.hpp"

// Model directory: config.json, vocab.json and weights.bin.
//
// weights.bin is "PRCTW001", a u32 tensor count, then per tensor a u32 name
// length, the name, u32 rows, u32 cols and rows*cols little-endian f64 values
// in column-major order.

namespace proact::ckpt {

struct Checkpoint {
  model::ModelConfig config;
  text::Vocab vocab;
  model::ModelWeights weights;
};

void save(const std::filesystem::path& dir, const Checkpoint& ck);
Checkpoint load(const std::filesystem::path& dir);

void write_weights(const std::filesystem::path& file,
                   const model::ModelWeights& w);
model::ModelWeights read_weights(const std::filesystem::path& file,
                                 const model::ModelConfig& cfg);

}  // namespace proact::ckpt
