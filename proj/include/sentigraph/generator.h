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

#ifndef SENTIGRAPH_GENERATOR_H_
#define SENTIGRAPH_GENERATOR_H_

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sentigraph/backbone.h"
#include "sentigraph/config.h"
#include "sentigraph/corpus.h"
#include "sentigraph/graph.h"
#include "sentigraph/knowledge.h"
#include "sentigraph/sentiment.h"

namespace sentigraph {

using NamedParameters = std::vector<std::pair<std::string, nn::Tensor>>;

// Cross-attention from decoder states (queries) to the fused graph memory
// (keys and values), added to the residual stream through a scalar gate.
struct KnowledgeAttentionParams {
  nn::Tensor w_q, w_k, w_v;  // d_model x d_model
  nn::Tensor gate;           // 1 x 1, kept in [0, 1]
  int heads = 1;
};

// Glorot-uniform projections and a closed (zero) gate.
KnowledgeAttentionParams InitKnowledgeAttention(int d_model, int heads,
                                                SplitMix64 &rng);

struct KnowledgeAttentionResult {
  nn::Tensor output;                 // hidden + gate * payload
  nn::Tensor payload;                // heads concatenated, T x d_model
  std::vector<nn::Matrix> weights;   // per head, T x memory rows
};

// Throws EMPTY_MEMORY when the memory has no rows.
KnowledgeAttentionResult KnowledgeAwareAttention(
    const nn::Tensor &hidden, const MemoryMatrix &memory,
    const KnowledgeAttentionParams &params);

struct AblationFlags {
  bool use_sc = true;
  bool use_sgcr = true;

  bool any() const { return use_sc || use_sgcr; }
  bool operator==(const AblationFlags &) const = default;
};

// The pluggable backends a pipeline talks to.
struct Providers {
  std::shared_ptr<const CommonsenseProvider> commonsense;
  std::shared_ptr<const SentimentClassifier> classifier;
  std::shared_ptr<const SentenceEncoder> encoder;

  // Mock commonsense provider, lexicon classifier, hash sentence encoder.
  static Providers Mock(int graph_dim);
};

// A context (and optionally a target) turned into token ids plus cached
// graph structure and frozen node features.
struct PreparedExample {
  std::string dialogue_id;
  std::vector<Utterance> context;        // labeled, after truncation
  std::vector<int> tokens;               // prompt (+ target + end of turn)
  std::vector<int> targets;              // next-token labels, -1 = ignored
  int prompt_length = 0;                 // tokens up to and including "T:"
  int target_length = 0;                 // target words + end of turn
  std::optional<SentimentLabel> target_sentiment;
  std::vector<KnowledgeBundle> knowledge;  // one per context turn
  DialogueGraph sc_graph;
  DialogueGraph sgcr_graph;
  nn::Matrix utterance_features;         // context x d_g
  nn::Matrix knowledge_features;         // context x d_g
};

// Renders "C: ... <nl> T: ... <nl> T:" (+ target + <eot>) and drops the
// oldest turns, then the oldest tokens, until the sequence fits the window.
// Throws CONTEXT_TOO_LONG when the target alone overflows. Unlabeled turns
// are labeled with the providers first.
PreparedExample PrepareExample(const GenerationExample &example,
                               const Vocabulary &vocabulary,
                               const ModelConfig &config,
                               const Providers &providers);

// Same, with no target: the sequence ends at the "T:" prompt and keeps
// room for `reserve` generated tokens, capped at a quarter of the position
// window so long decode budgets do not starve the context.
PreparedExample PreparePrompt(std::span<const Utterance> context,
                              const Vocabulary &vocabulary,
                              const ModelConfig &config,
                              const Providers &providers, int reserve = 64);

struct ModelOutput {
  nn::Tensor logits;         // every position
  nn::Tensor target_logits;  // target_length x |vocab|
  MemoryMatrix memory;       // no rows when both graphs are disabled
  std::optional<GatResult> sc;
  std::optional<GatResult> sgcr;
  nn::Tensor aux_logit;      // defined only when the auxiliary head runs
};

// Backbone plus speaker-role embeddings, the two graph attention layers,
// the memory projector and one knowledge-aware attention block per
// decoder layer (or only the top one).
class ResponseModel {
 public:
  ResponseModel(const ModelConfig &config, Vocabulary vocabulary,
                uint64_t seed);

  const ModelConfig &config() const { return config_; }
  const TinyDecoder &backbone() const { return backbone_; }
  const KnowledgeAttentionParams *attention_for_layer(int layer) const;
  const GatParams &gat_sc() const { return gat_sc_; }
  const GatParams &gat_sgcr() const { return gat_sgcr_; }

  NamedParameters Parameters() const;

  MemoryMatrix BuildMemory(const PreparedExample &example, AblationFlags flags,
                           std::optional<GatResult> *sc = nullptr,
                           std::optional<GatResult> *sgcr = nullptr) const;

  // With both flags off the hook is omitted and the output is the plain
  // backbone's.
  ModelOutput Forward(const PreparedExample &example,
                      AblationFlags flags) const;

  // Mean target-token cross-entropy, plus the weighted auxiliary sentiment
  // loss when enabled.
  nn::Tensor Loss(const PreparedExample &example, AblationFlags flags) const;

  // Projects every gate back onto [0, 1].
  void ClampGates();

  LayerHook MakeHook(const MemoryMatrix &memory) const;

 private:
  ModelConfig config_;
  TinyDecoder backbone_;
  nn::Tensor role_embeddings_;
  GatParams gat_sc_;
  GatParams gat_sgcr_;
  nn::Tensor projector_;
  std::vector<std::optional<KnowledgeAttentionParams>> attention_;
  nn::Tensor aux_weight_;
  nn::Tensor aux_bias_;
};

struct DecodeConfig {
  int max_tokens = 64;
  // 0 selects greedy decoding; otherwise nucleus sampling with this mass.
  double top_p = 0.0;
  double temperature = 1.0;
  uint64_t seed = 0;
};

// Extends `prompt` until end of turn, max_tokens, or the position limit.
// Returns only the new tokens (without the end-of-turn token).
std::vector<int> DecodeTokens(const Backbone &backbone, std::vector<int> prompt,
                              const LayerHook *hook, const DecodeConfig &config);

// Teacher-forced target loss of the plain backbone.
nn::Tensor VanillaLoss(const Backbone &backbone, const PreparedExample &example);

struct GenerationResult {
  std::string text;
  std::vector<int> tokens;
  std::vector<Utterance> context;            // as labeled and truncated
  std::vector<KnowledgeBundle> knowledge;    // behind each commonsense node
  std::vector<MemoryRowOrigin> memory_origin;
};

// Model + providers: labels the context, builds both graphs and decodes.
class ResponseGenerator {
 public:
  ResponseGenerator(std::shared_ptr<const ResponseModel> model,
                    Providers providers, AblationFlags flags);

  const ResponseModel &model() const { return *model_; }
  const Providers &providers() const { return providers_; }
  AblationFlags flags() const { return flags_; }

  PreparedExample Prepare(const GenerationExample &example) const;
  GenerationResult Generate(std::span<const Utterance> context,
                            const DecodeConfig &config = {}) const;

 private:
  std::shared_ptr<const ResponseModel> model_;
  Providers providers_;
  AblationFlags flags_;
};

}  // namespace sentigraph

#endif  // SENTIGRAPH_GENERATOR_H_
