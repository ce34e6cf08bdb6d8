// Copyright 2026 The Sentigraph Authors.
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

#include "sentigraph/backbone.h"

#include <cctype>
#include <cmath>

#include "sentigraph/error.h"
#include "sentigraph/hash.h"

namespace sentigraph {
namespace {

constexpr const char *kReserved[Vocabulary::kNumReserved] = {
    "<pad>", "<unk>", "<eot>", "<nl>", "T:", "C:"};

bool IsWordByte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z') || c == '\'' || c == '-' || c >= 0x80;
}

bool AttachesLeft(const std::string &token) {
  return token.size() == 1 &&
         std::string_view(".,!?;:)]}%").find(token[0]) != std::string_view::npos;
}

bool AttachesRight(const std::string &token) {
  return token.size() == 1 &&
         std::string_view("([{").find(token[0]) != std::string_view::npos;
}

nn::Matrix Normal(int rows, int cols, double stddev, SplitMix64 &rng) {
  nn::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = stddev * rng.Normal();
  return m;
}

}  // namespace

Vocabulary::Vocabulary() {
  for (const char *t : kReserved) Add(t);
}

std::vector<std::string> Vocabulary::SplitWords(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (IsWordByte(c)) {
      word.push_back(ch);
      continue;
    }
    if (!word.empty()) {
      out.push_back(std::move(word));
      word.clear();
    }
    if (!std::isspace(c)) out.emplace_back(1, ch);
  }
  if (!word.empty()) out.push_back(std::move(word));
  return out;
}

int Vocabulary::Add(std::string_view token) {
  auto it = index_.find(std::string(token));
  if (it != index_.end()) return it->second;
  const int id = size();
  tokens_.emplace_back(token);
  index_.emplace(tokens_.back(), id);
  return id;
}

void Vocabulary::AddText(std::string_view text) {
  for (const auto &w : SplitWords(text)) Add(w);
}

int Vocabulary::Lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::Encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto &w : SplitWords(text)) ids.push_back(Lookup(w));
  return ids;
}

std::string Vocabulary::Decode(std::span<const int> ids) const {
  std::string out;
  bool glue = true;
  for (int id : ids) {
    if (id < 0 || id >= size() || IsReserved(id)) continue;
    const std::string &token = tokens_[id];
    if (!glue && !AttachesLeft(token)) out.push_back(' ');
    out += token;
    glue = AttachesRight(token);
  }
  return out;
}

nlohmann::json Vocabulary::ToJson() const { return tokens_; }

Vocabulary Vocabulary::FromJson(const nlohmann::json &doc) {
  Vocabulary vocab;
  const auto tokens = doc.get<std::vector<std::string>>();
  for (int i = 0; i < kNumReserved; ++i) {
    if (i >= static_cast<int>(tokens.size()) || tokens[i] != kReserved[i]) {
      throw Error(ErrorCode::kBadCheckpoint, "vocabulary reserved tokens differ");
    }
  }
  for (size_t i = kNumReserved; i < tokens.size(); ++i) {
    if (vocab.Add(tokens[i]) != static_cast<int>(i)) {
      throw Error(ErrorCode::kBadCheckpoint, "duplicate vocabulary token");
    }
  }
  return vocab;
}

TinyDecoder::TinyDecoder(Vocabulary vocabulary, const DecoderConfig &config,
                         uint64_t seed)
    : vocabulary_(std::move(vocabulary)), config_(config) {
  if (config_.d_model <= 0 || config_.heads <= 0 ||
      config_.d_model % config_.heads != 0 || config_.layers <= 0 ||
      config_.max_positions <= 0) {
    throw Error(ErrorCode::kBadConfig, "invalid decoder dimensions");
  }
  SplitMix64 rng(seed);
  const int d = config_.d_model;
  const int v = vocabulary_.size();
  const int ffn = d * config_.ffn_multiplier;
  const double residual_std = 0.02 / std::sqrt(2.0 * config_.layers);
  using nn::Matrix;
  using nn::Tensor;
  token_embedding_ = Tensor::Parameter(Normal(v, d, 0.02, rng));
  position_embedding_ = Tensor::Parameter(Normal(config_.max_positions, d, 0.01, rng));
  for (int l = 0; l < config_.layers; ++l) {
    Layer layer;
    layer.ln1_gain = Tensor::Parameter(Matrix::Ones(1, d));
    layer.ln1_bias = Tensor::Parameter(Matrix::Zero(1, d));
    layer.qkv = Tensor::Parameter(Normal(d, 3 * d, 0.02, rng));
    layer.qkv_bias = Tensor::Parameter(Matrix::Zero(1, 3 * d));
    layer.out = Tensor::Parameter(Normal(d, d, residual_std, rng));
    layer.out_bias = Tensor::Parameter(Matrix::Zero(1, d));
    layer.ln2_gain = Tensor::Parameter(Matrix::Ones(1, d));
    layer.ln2_bias = Tensor::Parameter(Matrix::Zero(1, d));
    layer.ffn_in = Tensor::Parameter(Normal(d, ffn, 0.02, rng));
    layer.ffn_in_bias = Tensor::Parameter(Matrix::Zero(1, ffn));
    layer.ffn_out = Tensor::Parameter(Normal(ffn, d, residual_std, rng));
    layer.ffn_out_bias = Tensor::Parameter(Matrix::Zero(1, d));
    layers_.push_back(std::move(layer));
  }
  final_gain_ = Tensor::Parameter(Matrix::Ones(1, d));
  final_bias_ = Tensor::Parameter(Matrix::Zero(1, d));
  head_ = Tensor::Parameter(Normal(d, v, 0.02, rng));
}

BackboneOutput TinyDecoder::Forward(std::span<const int> tokens,
                                    const LayerHook *hook) const {
  const int t = static_cast<int>(tokens.size());
  if (t == 0) throw Error(ErrorCode::kEmptyContext, "no tokens");
  if (t > config_.max_positions) {
    throw Error(ErrorCode::kContextTooLong,
                std::to_string(t) + " tokens exceed the " +
                    std::to_string(config_.max_positions) + "-position window");
  }
  std::vector<int> ids(tokens.begin(), tokens.end());
  std::vector<int> positions(t);
  for (int i = 0; i < t; ++i) positions[i] = i;

  const int d = config_.d_model;
  const int head_dim = d / config_.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  nn::BoolMatrix causal(t, t);
  for (int i = 0; i < t; ++i) {
    for (int j = 0; j < t; ++j) causal(i, j) = j <= i;
  }

  nn::Tensor x = nn::Add(nn::Gather(token_embedding_, ids),
                         nn::Gather(position_embedding_, positions));
  for (int l = 0; l < config_.layers; ++l) {
    const Layer &layer = layers_[l];
    const nn::Tensor h = nn::LayerNormRows(x, layer.ln1_gain, layer.ln1_bias);
    const nn::Tensor qkv = nn::AddRow(nn::MatMul(h, layer.qkv), layer.qkv_bias);
    std::vector<nn::Tensor> heads;
    for (int hd = 0; hd < config_.heads; ++hd) {
      const nn::Tensor q = nn::SliceCols(qkv, hd * head_dim, head_dim);
      const nn::Tensor k = nn::SliceCols(qkv, d + hd * head_dim, head_dim);
      const nn::Tensor v = nn::SliceCols(qkv, 2 * d + hd * head_dim, head_dim);
      const nn::Tensor scores = nn::Scale(nn::MatMul(q, nn::Transpose(k)), scale);
      heads.push_back(nn::MatMul(nn::SoftmaxRows(scores, &causal), v));
    }
    x = nn::Add(x, nn::AddRow(nn::MatMul(nn::ConcatCols(heads), layer.out),
                              layer.out_bias));
    if (hook) x = (*hook)(l, x);
    const nn::Tensor h2 = nn::LayerNormRows(x, layer.ln2_gain, layer.ln2_bias);
    const nn::Tensor inner =
        nn::Gelu(nn::AddRow(nn::MatMul(h2, layer.ffn_in), layer.ffn_in_bias));
    x = nn::Add(x, nn::AddRow(nn::MatMul(inner, layer.ffn_out),
                              layer.ffn_out_bias));
  }
  BackboneOutput out;
  out.hidden = nn::LayerNormRows(x, final_gain_, final_bias_);
  out.logits = nn::MatMul(out.hidden, head_);
  return out;
}

std::vector<std::pair<std::string, nn::Tensor>> TinyDecoder::NamedParameters()
    const {
  std::vector<std::pair<std::string, nn::Tensor>> out = {
      {"backbone.token_embedding", token_embedding_},
      {"backbone.position_embedding", position_embedding_},
  };
  for (size_t l = 0; l < layers_.size(); ++l) {
    const std::string p = "backbone.layer" + std::to_string(l) + ".";
    const Layer &layer = layers_[l];
    out.insert(out.end(), {{p + "ln1.gain", layer.ln1_gain},
                           {p + "ln1.bias", layer.ln1_bias},
                           {p + "attn.qkv", layer.qkv},
                           {p + "attn.qkv_bias", layer.qkv_bias},
                           {p + "attn.out", layer.out},
                           {p + "attn.out_bias", layer.out_bias},
                           {p + "ln2.gain", layer.ln2_gain},
                           {p + "ln2.bias", layer.ln2_bias},
                           {p + "ffn.in", layer.ffn_in},
                           {p + "ffn.in_bias", layer.ffn_in_bias},
                           {p + "ffn.out", layer.ffn_out},
                           {p + "ffn.out_bias", layer.ffn_out_bias}});
  }
  out.insert(out.end(), {{"backbone.final_ln.gain", final_gain_},
                         {"backbone.final_ln.bias", final_bias_},
                         {"backbone.head", head_}});
  return out;
}

}  // namespace sentigraph
