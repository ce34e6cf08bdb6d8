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

#ifndef SENTIGRAPH_BACKBONE_H_
#define SENTIGRAPH_BACKBONE_H_

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sentigraph/nn/tensor.h"

namespace sentigraph {

// Word-level vocabulary with a handful of reserved control tokens.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kEndOfTurn = 2;
  static constexpr int kNewline = 3;
  static constexpr int kTherapistPrompt = 4;  // "T:"
  static constexpr int kClientPrompt = 5;     // "C:"
  static constexpr int kNumReserved = 6;

  Vocabulary();

  // Splits on whitespace; punctuation other than ' and - becomes its own
  // token.
  static std::vector<std::string> SplitWords(std::string_view text);

  int Add(std::string_view token);
  void AddText(std::string_view text);
  int Lookup(std::string_view token) const;
  const std::string &Token(int id) const { return tokens_.at(id); }
  int size() const { return static_cast<int>(tokens_.size()); }
  static bool IsReserved(int id) { return id < kNumReserved; }

  std::vector<int> Encode(std::string_view text) const;
  // Joins word tokens, attaching closing punctuation to the previous word.
  // Reserved tokens are skipped.
  std::string Decode(std::span<const int> ids) const;

  nlohmann::json ToJson() const;
  static Vocabulary FromJson(const nlohmann::json &doc);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Called after the self-attention sublayer of every decoder layer with the
// residual stream; returns the (possibly modified) stream.
using LayerHook = std::function<nn::Tensor(int layer, const nn::Tensor &hidden)>;

struct BackboneOutput {
  nn::Tensor hidden;  // T x d_model, after the final layer norm
  nn::Tensor logits;  // T x |vocab|
};

// A decoder-only language model. Forward without a hook is the plain model.
class Backbone {
 public:
  virtual ~Backbone() = default;
  virtual const Vocabulary &vocabulary() const = 0;
  virtual int model_dim() const = 0;
  virtual int num_layers() const = 0;
  virtual int max_positions() const = 0;
  virtual BackboneOutput Forward(std::span<const int> tokens,
                                 const LayerHook *hook = nullptr) const = 0;
  virtual std::vector<std::pair<std::string, nn::Tensor>> NamedParameters()
      const = 0;

  std::vector<int> Tokenize(std::string_view text) const {
    return vocabulary().Encode(text);
  }
  std::string Detokenize(std::span<const int> ids) const {
    return vocabulary().Decode(ids);
  }
};

struct DecoderConfig {
  int d_model = 64;
  int layers = 2;
  int heads = 4;
  int max_positions = 256;
  int ffn_multiplier = 4;
};

// Small pre-norm GPT-style decoder used for tests and desk-scale training.
class TinyDecoder : public Backbone {
 public:
  TinyDecoder(Vocabulary vocabulary, const DecoderConfig &config,
              uint64_t seed);

  const Vocabulary &vocabulary() const override { return vocabulary_; }
  int model_dim() const override { return config_.d_model; }
  int num_layers() const override { return config_.layers; }
  int max_positions() const override { return config_.max_positions; }
  const DecoderConfig &config() const { return config_; }

  BackboneOutput Forward(std::span<const int> tokens,
                         const LayerHook *hook = nullptr) const override;
  std::vector<std::pair<std::string, nn::Tensor>> NamedParameters()
      const override;

 private:
  struct Layer {
    nn::Tensor ln1_gain, ln1_bias;
    nn::Tensor qkv, qkv_bias;
    nn::Tensor out, out_bias;
    nn::Tensor ln2_gain, ln2_bias;
    nn::Tensor ffn_in, ffn_in_bias;
    nn::Tensor ffn_out, ffn_out_bias;
  };

  Vocabulary vocabulary_;
  DecoderConfig config_;
  nn::Tensor token_embedding_;
  nn::Tensor position_embedding_;
  std::vector<Layer> layers_;
  nn::Tensor final_gain_, final_bias_;
  nn::Tensor head_;
};

}  // namespace sentigraph

#endif  // SENTIGRAPH_BACKBONE_H_
