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

#include "sentigraph/generator.h"

#include <algorithm>
#include <cmath>

#include "sentigraph/error.h"

namespace sentigraph {
namespace {

constexpr uint64_t kGraphStream = 0x6a09e667f3bcc909ULL;

nn::Matrix GlorotUniform(int rows, int cols, SplitMix64 &rng) {
  const double bound = std::sqrt(6.0 / (rows + cols));
  nn::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.Uniform(-bound, bound);
  return m;
}

std::vector<int> TurnTokens(const Utterance &u, const Vocabulary &vocab) {
  std::vector<int> ids;
  ids.push_back(u.speaker == SpeakerRole::kTherapist ? Vocabulary::kTherapistPrompt
                                                     : Vocabulary::kClientPrompt);
  const auto words = vocab.Encode(u.text);
  ids.insert(ids.end(), words.begin(), words.end());
  ids.push_back(Vocabulary::kNewline);
  return ids;
}

void LabelInPlace(Utterance &u, const Providers &providers) {
  if (u.sentiment) return;
  u.sentiment = LabelText(u.text, *providers.commonsense, *providers.classifier);
}

// Shared by training examples and generation prompts. `target_tokens` is
// empty for prompts; `reserve` is the number of positions kept free after
// the "T:" prompt.
PreparedExample Prepare(std::string dialogue_id,
                        std::span<const Utterance> context_in,
                        const std::vector<int> &target_tokens, int reserve,
                        const Vocabulary &vocab, const ModelConfig &config,
                        const Providers &providers) {
  if (context_in.empty()) throw Error(ErrorCode::kEmptyContext, "no context turns");
  const int limit = config.decoder.max_positions;
  if (1 + reserve > limit) {
    throw Error(ErrorCode::kContextTooLong,
                "target of " + std::to_string(reserve) +
                    " tokens does not fit the " + std::to_string(limit) +
                    "-position window");
  }

  std::vector<Utterance> context(context_in.begin(), context_in.end());
  std::vector<std::vector<int>> turns;
  for (const auto &u : context) turns.push_back(TurnTokens(u, vocab));
  auto context_size = [&] {
    size_t n = 0;
    for (const auto &t : turns) n += t.size();
    return static_cast<int>(n);
  };
  const int budget = limit - 1 - reserve;
  while (turns.size() > 1 && context_size() > budget) {
    turns.erase(turns.begin());
    context.erase(context.begin());
  }
  if (context_size() > budget) {
    auto &only = turns.front();
    only.erase(only.begin(), only.begin() + (context_size() - budget));
  }

  PreparedExample ex;
  ex.dialogue_id = std::move(dialogue_id);
  for (auto &u : context) LabelInPlace(u, providers);
  for (const auto &t : turns) ex.tokens.insert(ex.tokens.end(), t.begin(), t.end());
  ex.tokens.push_back(Vocabulary::kTherapistPrompt);
  ex.prompt_length = static_cast<int>(ex.tokens.size());
  ex.tokens.insert(ex.tokens.end(), target_tokens.begin(), target_tokens.end());
  ex.target_length = static_cast<int>(target_tokens.size());
  ex.targets.assign(ex.tokens.size(), -1);
  for (int i = ex.prompt_length - 1; i + 1 < static_cast<int>(ex.tokens.size()); ++i) {
    ex.targets[i] = ex.tokens[i + 1];
  }

  ExtractOptions options;
  options.k = config.top_k;
  options.allow_empty = config.allow_empty_knowledge;
  for (const auto &u : context) {
    ex.knowledge.push_back(ExtractKnowledge(u, *providers.commonsense, options));
  }
  ex.sc_graph = BuildScGraph(context);
  ex.sgcr_graph = BuildSgcrGraph(context, ex.knowledge);
  ex.utterance_features =
      EncodeUtteranceNodes(context, *providers.encoder, config.graph_dim);
  ex.knowledge_features.resize(static_cast<Eigen::Index>(context.size()),
                               config.graph_dim);
  for (size_t i = 0; i < context.size(); ++i) {
    ex.knowledge_features.row(static_cast<Eigen::Index>(i)) = EncodeKnowledgeNode(
        *context[i].sentiment, ex.knowledge[i], *providers.encoder,
        config.graph_dim);
  }
  ex.context = std::move(context);
  return ex;
}

int SampleTopP(const Eigen::RowVectorXd &logits, double top_p,
               double temperature, SplitMix64 &rng) {
  Eigen::RowVectorXd scaled = logits / std::max(temperature, 1e-8);
  const double max = scaled.maxCoeff();
  Eigen::RowVectorXd probs = (scaled.array() - max).exp();
  probs /= probs.sum();
  std::vector<int> order(probs.size());
  for (int i = 0; i < static_cast<int>(order.size()); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return probs(a) > probs(b); });
  double mass = 0.0;
  size_t keep = 0;
  while (keep < order.size() && mass < top_p) mass += probs(order[keep++]);
  double draw = rng.Uniform() * mass;
  for (size_t i = 0; i < keep; ++i) {
    draw -= probs(order[i]);
    if (draw <= 0.0) return order[i];
  }
  return order[keep - 1];
}

}  // namespace

Providers Providers::Mock(int graph_dim) {
  Providers p;
  p.commonsense = std::make_shared<MockCommonsenseProvider>();
  p.classifier = std::make_shared<LexiconClassifier>();
  p.encoder = std::make_shared<MockSentenceEncoder>(graph_dim);
  return p;
}

PreparedExample PrepareExample(const GenerationExample &example,
                               const Vocabulary &vocabulary,
                               const ModelConfig &config,
                               const Providers &providers) {
  std::vector<int> target = vocabulary.Encode(example.target.text);
  target.push_back(Vocabulary::kEndOfTurn);
  PreparedExample ex =
      Prepare(example.dialogue_id, example.context, target,
              static_cast<int>(target.size()), vocabulary, config, providers);
  Utterance labeled = example.target;
  LabelInPlace(labeled, providers);
  ex.target_sentiment = labeled.sentiment;
  return ex;
}

PreparedExample PreparePrompt(std::span<const Utterance> context,
                              const Vocabulary &vocabulary,
                              const ModelConfig &config,
                              const Providers &providers, int reserve) {
  reserve = std::clamp(reserve, 0, config.decoder.max_positions / 4);
  return Prepare("", context, {}, reserve, vocabulary, config, providers);
}

KnowledgeAttentionParams InitKnowledgeAttention(int d_model, int heads,
                                                SplitMix64 &rng) {
  if (heads < 1 || d_model % heads != 0) {
    throw Error(ErrorCode::kBadConfig, "d_model must be divisible by heads");
  }
  KnowledgeAttentionParams p;
  p.w_q = nn::Tensor::Parameter(GlorotUniform(d_model, d_model, rng));
  p.w_k = nn::Tensor::Parameter(GlorotUniform(d_model, d_model, rng));
  p.w_v = nn::Tensor::Parameter(GlorotUniform(d_model, d_model, rng));
  p.gate = nn::Tensor::Parameter(nn::Matrix::Zero(1, 1));
  p.heads = heads;
  return p;
}

KnowledgeAttentionResult KnowledgeAwareAttention(
    const nn::Tensor &hidden, const MemoryMatrix &memory,
    const KnowledgeAttentionParams &params) {
  if (memory.size() == 0 || memory.rows.rows() == 0) {
    throw Error(ErrorCode::kEmptyMemory, "knowledge attention needs memory rows");
  }
  const Eigen::Index d = hidden.cols();
  if (memory.rows.cols() != d || params.w_q.rows() != d) {
    throw Error(ErrorCode::kDimMismatch, "memory width must equal d_model");
  }
  const Eigen::Index head_dim = d / params.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  const nn::Tensor q = nn::MatMul(hidden, params.w_q);
  const nn::Tensor k = nn::MatMul(memory.rows, params.w_k);
  const nn::Tensor v = nn::MatMul(memory.rows, params.w_v);
  KnowledgeAttentionResult result;
  std::vector<nn::Tensor> heads;
  for (int h = 0; h < params.heads; ++h) {
    const nn::Tensor qh = nn::SliceCols(q, h * head_dim, head_dim);
    const nn::Tensor kh = nn::SliceCols(k, h * head_dim, head_dim);
    const nn::Tensor vh = nn::SliceCols(v, h * head_dim, head_dim);
    const nn::Tensor weights =
        nn::SoftmaxRows(nn::Scale(nn::MatMul(qh, nn::Transpose(kh)), scale));
    result.weights.push_back(weights.value());
    heads.push_back(nn::MatMul(weights, vh));
  }
  result.payload = nn::ConcatCols(heads);
  result.output = nn::GatedResidual(hidden, result.payload, params.gate);
  return result;
}

ResponseModel::ResponseModel(const ModelConfig &config, Vocabulary vocabulary,
                             uint64_t seed)
    : config_(config), backbone_(std::move(vocabulary), config.decoder, seed) {
  // A separate stream keeps the backbone initialization identical to a
  // plain TinyDecoder built with the same seed.
  SplitMix64 rng(seed ^ kGraphStream);
  const int d_g = config_.graph_dim;
  const int d_m = config_.decoder.d_model;
  nn::Matrix roles(2, d_g);
  for (Eigen::Index i = 0; i < roles.size(); ++i) {
    roles(i) = rng.Normal() / std::sqrt(static_cast<double>(d_g));
  }
  role_embeddings_ = nn::Tensor::Parameter(std::move(roles));
  gat_sc_ = InitGatParams(d_g, rng);
  gat_sgcr_ = InitGatParams(d_g, rng);
  projector_ = nn::Tensor::Parameter(GlorotUniform(d_g, d_m, rng));
  const int layers = config_.decoder.layers;
  attention_.resize(layers);
  for (int l = 0; l < layers; ++l) {
    if (config_.placement == BlockPlacement::kEveryLayer || l == layers - 1) {
      attention_[l] = InitKnowledgeAttention(d_m, config_.attention_heads, rng);
    }
  }
  aux_weight_ = nn::Tensor::Parameter(GlorotUniform(d_g, 1, rng));
  aux_bias_ = nn::Tensor::Parameter(nn::Matrix::Zero(1, 1));
}

const KnowledgeAttentionParams *ResponseModel::attention_for_layer(int layer) const {
  if (layer < 0 || layer >= static_cast<int>(attention_.size()) ||
      !attention_[layer]) {
    return nullptr;
  }
  return &*attention_[layer];
}

NamedParameters ResponseModel::Parameters() const {
  NamedParameters out = backbone_.NamedParameters();
  out.emplace_back("graph.role_embeddings", role_embeddings_);
  out.emplace_back("graph.gat_sc.weight", gat_sc_.weight);
  out.emplace_back("graph.gat_sc.score", gat_sc_.score);
  out.emplace_back("graph.gat_sgcr.weight", gat_sgcr_.weight);
  out.emplace_back("graph.gat_sgcr.score", gat_sgcr_.score);
  out.emplace_back("graph.projector", projector_);
  for (size_t l = 0; l < attention_.size(); ++l) {
    if (!attention_[l]) continue;
    const std::string p = "knowledge_attention.layer" + std::to_string(l) + ".";
    out.emplace_back(p + "w_q", attention_[l]->w_q);
    out.emplace_back(p + "w_k", attention_[l]->w_k);
    out.emplace_back(p + "w_v", attention_[l]->w_v);
    out.emplace_back(p + "gate", attention_[l]->gate);
  }
  out.emplace_back("aux.weight", aux_weight_);
  out.emplace_back("aux.bias", aux_bias_);
  return out;
}

MemoryMatrix ResponseModel::BuildMemory(const PreparedExample &example,
                                        AblationFlags flags,
                                        std::optional<GatResult> *sc,
                                        std::optional<GatResult> *sgcr) const {
  const int d_g = config_.graph_dim;
  nn::Tensor sc_rows = nn::Tensor::Constant(nn::Matrix(0, d_g));
  nn::Tensor sgcr_rows = nn::Tensor::Constant(nn::Matrix(0, d_g));
  if (flags.use_sc) {
    GatResult r = GatForward(
        example.sc_graph,
        AssembleNodeFeatures(example.sc_graph, example.utterance_features,
                             role_embeddings_),
        gat_sc_);
    sc_rows = r.hidden;
    if (sc) *sc = std::move(r);
  }
  if (flags.use_sgcr) {
    GatResult r = GatForward(
        example.sgcr_graph,
        AssembleNodeFeatures(example.sgcr_graph, example.knowledge_features,
                             role_embeddings_),
        gat_sgcr_);
    sgcr_rows = r.hidden;
    if (sgcr) *sgcr = std::move(r);
  }
  return FuseRepresentations(sc_rows, sgcr_rows, projector_);
}

LayerHook ResponseModel::MakeHook(const MemoryMatrix &memory) const {
  return [this, memory](int layer, const nn::Tensor &hidden) {
    const KnowledgeAttentionParams *params = attention_for_layer(layer);
    if (!params) return hidden;
    return KnowledgeAwareAttention(hidden, memory, *params).output;
  };
}

ModelOutput ResponseModel::Forward(const PreparedExample &example,
                                   AblationFlags flags) const {
  ModelOutput out;
  BackboneOutput result;
  if (flags.any()) {
    out.memory = BuildMemory(example, flags, &out.sc, &out.sgcr);
    const LayerHook hook = MakeHook(out.memory);
    result = backbone_.Forward(example.tokens, &hook);
  } else {
    result = backbone_.Forward(example.tokens);
  }
  out.logits = result.logits;
  if (example.target_length > 0) {
    out.target_logits = nn::SliceRows(out.logits, example.prompt_length - 1,
                                      example.target_length);
  }
  if (config_.aux_sentiment_weight > 0.0 && out.sgcr) {
    out.aux_logit = nn::AddRow(
        nn::MatMul(nn::MeanRows(out.sgcr->hidden), aux_weight_), aux_bias_);
  }
  return out;
}

nn::Tensor ResponseModel::Loss(const PreparedExample &example,
                               AblationFlags flags) const {
  ModelOutput out = Forward(example, flags);
  nn::Tensor loss = nn::CrossEntropy(out.logits, example.targets);
  if (out.aux_logit.defined() && example.target_sentiment) {
    const double label =
        *example.target_sentiment == SentimentLabel::kPositive ? 1.0 : 0.0;
    loss = nn::Add(loss, nn::Scale(nn::BinaryCrossEntropyWithLogit(out.aux_logit, label),
                                   config_.aux_sentiment_weight));
  }
  return loss;
}

void ResponseModel::ClampGates() {
  for (auto &a : attention_) {
    if (!a) continue;
    double &g = a->gate.mutable_value()(0, 0);
    g = std::clamp(g, 0.0, 1.0);
  }
}

std::vector<int> DecodeTokens(const Backbone &backbone, std::vector<int> prompt,
                              const LayerHook *hook, const DecodeConfig &config) {
  nn::NoGradGuard no_grad;
  SplitMix64 rng(config.seed);
  std::vector<int> generated;
  while (static_cast<int>(generated.size()) < config.max_tokens &&
         static_cast<int>(prompt.size()) < backbone.max_positions()) {
    const BackboneOutput out = backbone.Forward(prompt, hook);
    const Eigen::RowVectorXd last = out.logits.value().row(out.logits.rows() - 1);
    int next = 0;
    if (config.top_p > 0.0) {
      next = SampleTopP(last, config.top_p, config.temperature, rng);
    } else {
      last.maxCoeff(&next);
    }
    if (next == Vocabulary::kEndOfTurn) break;
    generated.push_back(next);
    prompt.push_back(next);
  }
  return generated;
}

nn::Tensor VanillaLoss(const Backbone &backbone, const PreparedExample &example) {
  return nn::CrossEntropy(backbone.Forward(example.tokens).logits, example.targets);
}

ResponseGenerator::ResponseGenerator(std::shared_ptr<const ResponseModel> model,
                                     Providers providers, AblationFlags flags)
    : model_(std::move(model)), providers_(std::move(providers)), flags_(flags) {}

PreparedExample ResponseGenerator::Prepare(const GenerationExample &example) const {
  return PrepareExample(example, model_->backbone().vocabulary(),
                        model_->config(), providers_);
}

GenerationResult ResponseGenerator::Generate(std::span<const Utterance> context,
                                             const DecodeConfig &config) const {
  nn::NoGradGuard no_grad;
  PreparedExample prompt =
      PreparePrompt(context, model_->backbone().vocabulary(), model_->config(),
                    providers_, config.max_tokens);
  GenerationResult result;
  std::vector<int> prefix(prompt.tokens.begin(), prompt.tokens.end());
  if (flags_.any()) {
    const MemoryMatrix memory = model_->BuildMemory(prompt, flags_);
    const LayerHook hook = model_->MakeHook(memory);
    result.tokens = DecodeTokens(model_->backbone(), prefix, &hook, config);
    result.memory_origin = memory.origin;
  } else {
    result.tokens = DecodeTokens(model_->backbone(), prefix, nullptr, config);
  }
  result.text = model_->backbone().vocabulary().Decode(result.tokens);
  result.context = std::move(prompt.context);
  result.knowledge = std::move(prompt.knowledge);
  return result;
}

}  // namespace sentigraph
