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

#include "proact/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include <fmt/format.h>

#include "proact/error.hpp"

namespace proact::ckpt {

namespace {

constexpr char kMagic[8] = {'P', 'R', 'C', 'T', 'W', '0', '0', '1'};

template <typename T>
void put_le(std::ostream& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.put(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

template <typename T>
T get_le(std::istream& in) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = in.get();
    if (c == EOF) throw Error(ErrorCode::kParse, "truncated weights file");
    v |= static_cast<T>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}


// Every parameter with its name, in file order.
template <typename W, typename Fn>
void visit(W& w, Fn&& fn) {
  fn("embedding", w.embedding);
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    auto& L = w.layers[l];
    const std::string p = fmt::format("layers.{}.", l);
    fn(p + "attn_norm", L.attn_norm);
    fn(p + "wq", L.wq);
    fn(p + "wk", L.wk);
    fn(p + "wv", L.wv);
    fn(p + "wo", L.wo);
    fn(p + "bq", L.bq);
    fn(p + "bk", L.bk);
    fn(p + "bv", L.bv);
    fn(p + "mlp_norm", L.mlp_norm);
    fn(p + "w_gate", L.w_gate);
    fn(p + "w_up", L.w_up);
    fn(p + "w_down", L.w_down);
  }
  fn("final_norm", w.final_norm);
  fn("lm.weight", w.lm.weight);
  fn("lm.bias", w.lm.bias);
  fn("head.w_gate", w.head.w_gate);
  fn("head.b_gate", w.head.b_gate);
  fn("head.w_value", w.head.w_value);
  fn("head.b_value", w.head.b_value);
  fn("head.w_out", w.head.w_out);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + p.string());
  out << s;
}

}  // namespace

void write_weights(const std::filesystem::path& file,
                   const model::ModelWeights& w) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + file.string());
  out.write(kMagic, sizeof(kMagic));
  std::uint32_t count = 1;  // head.b_out
  visit(w, [&](const std::string&, const auto&) { ++count; });
  put_le<std::uint32_t>(out, count);
  auto tensor = [&](const std::string& name, const auto& m) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(m.data()[i]));
    }
  };
  visit(w, tensor);
  model::Vec b_out(1);
  b_out(0) = w.head.b_out;
  tensor("head.b_out", b_out);
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + file.string());
}

model::ModelWeights read_weights(const std::filesystem::path& file,
                                 const model::ModelConfig& cfg) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + file.string());
  char magic[sizeof(kMagic)] = {};
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + sizeof(magic), kMagic)) {
    throw Error(ErrorCode::kParse, file.string() + " is not a weights file");
  }
  const auto count = get_le<std::uint32_t>(in);
  std::map<std::string, model::Mat> tensors;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto len = get_le<std::uint32_t>(in);
    std::string name(len, '\0');
    in.read(name.data(), len);
    const auto rows = get_le<std::uint32_t>(in);
    const auto cols = get_le<std::uint32_t>(in);
    model::Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = std::bit_cast<double>(get_le<std::uint64_t>(in));
    }
    tensors[name] = std::move(m);
  }

  // Start from a correctly shaped instance and fill it.
  model::ModelWeights w = model::ModelWeights::random(cfg, 0);
  visit(w, [&](const std::string& name, auto& dst) {
    auto it = tensors.find(name);
    if (it == tensors.end()) {
      throw Error(ErrorCode::kParse, "weights file lacks " + name);
    }
    if (it->second.rows() != dst.rows() || it->second.cols() != dst.cols()) {
      throw Error(ErrorCode::kShape,
                  fmt::format("{}: file has {}x{}, config expects {}x{}", name,
                              it->second.rows(), it->second.cols(), dst.rows(),
                              dst.cols()));
    }
    std::copy_n(it->second.data(), dst.size(), dst.data());
  });
  auto b = tensors.find("head.b_out");
  if (b == tensors.end() || b->second.size() != 1) {
    throw Error(ErrorCode::kParse, "weights file lacks head.b_out");
  }
  w.head.b_out = b->second(0);
  return w;
}

void save(const std::filesystem::path& dir, const Checkpoint& ck) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string());
  spit(dir / "config.json", ck.config.to_json());
  spit(dir / "vocab.json", ck.vocab.to_json());
  write_weights(dir / "weights.bin", ck.weights);
}

Checkpoint load(const std::filesystem::path& dir) {
  Checkpoint ck;
  ck.config = model::ModelConfig::from_json(slurp(dir / "config.json"));
  ck.vocab = text::Vocab::from_json(slurp(dir / "vocab.json"));
  if (ck.config.vocab_size != ck.vocab.size()) {
    throw Error(ErrorCode::kInvalidConfig,
                fmt::format("config vocab_size {} does not match vocab.json ({})",
                            ck.config.vocab_size, ck.vocab.size()));
  }
  ck.weights = read_weights(dir / "weights.bin", ck.config);
  return ck;
}

}  // namespace proact::ckpt
