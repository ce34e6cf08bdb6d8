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

#ifndef SENTIGRAPH_GRAPH_H_
#define SENTIGRAPH_GRAPH_H_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sentigraph/corpus.h"
#include "sentigraph/hash.h"
#include "sentigraph/knowledge.h"
#include "sentigraph/nn/tensor.h"

namespace sentigraph {

enum class NodeKind { kSpeaker, kUtterance, kKnowledge };

std::string_view NodeKindName(NodeKind kind);

struct GraphNode {
  int id = 0;
  NodeKind kind = NodeKind::kUtterance;
  // Context position for utterance/knowledge nodes, -1 for speaker nodes.
  int source = -1;
  // The role of a speaker node, or the speaker of the turn behind a content
  // node.
  SpeakerRole role = SpeakerRole::kClient;
};

// Shared structure of the speaker-context graph (utterance nodes) and the
// commonsense graph (knowledge nodes). Content nodes take ids 0..t-1 in turn
// order; one speaker node per role present follows, therapist first. Edges
// are directed (src, dst): speaker -> content for every turn and
// content_t -> content_{t+1}.
struct DialogueGraph {
  std::vector<GraphNode> nodes;
  std::vector<std::pair<int, int>> edges;
  // Per-node features (nodes x d_g). Empty until encoded.
  nn::Matrix features;

  size_t num_nodes() const { return nodes.size(); }
  // Node ids of the content (utterance or knowledge) nodes, in turn order.
  std::vector<int> ContentNodes() const;
  // mask(v, u) is true when u -> v is an edge or u == v.
  nn::BoolMatrix AttentionMask() const;
  // Throws MALFORMED_INPUT when an invariant is broken.
  void Validate() const;
};

// Throws EMPTY_CONTEXT.
DialogueGraph BuildScGraph(std::span<const Utterance> context);

// Throws LENGTH_MISMATCH unless bundle i belongs to utterance i.
DialogueGraph BuildSgcrGraph(std::span<const Utterance> context,
                             std::span<const KnowledgeBundle> bundles);

// Frozen sentence encoder seam (a BERT-style model in production).
class SentenceEncoder {
 public:
  virtual ~SentenceEncoder() = default;
  virtual int dimension() const = 0;
  virtual Eigen::VectorXd Encode(std::string_view text) const = 0;
};

// Unit vector of i.i.d. normals seeded by Fnv1a64(text).
class MockSentenceEncoder : public SentenceEncoder {
 public:
  explicit MockSentenceEncoder(int dimension) : dimension_(dimension) {}
  int dimension() const override { return dimension_; }
  Eigen::VectorXd Encode(std::string_view text) const override;

 private:
  int dimension_;
};

// One row per utterance: encoder(text). Throws ENCODER_FAILURE when the
// encoder's output is not `dimension` wide or not finite.
nn::Matrix EncodeUtteranceNodes(std::span<const Utterance> context,
                                const SentenceEncoder &encoder, int dimension);

// "sentiment: <label> [SEP] i1 [SEP] i2 ..." with inferences flattened in the
// bundle's relation order.
std::string RenderKnowledgeInput(SentimentLabel sentiment,
                                 const KnowledgeBundle &bundle);

Eigen::RowVectorXd EncodeKnowledgeNode(SentimentLabel sentiment,
                                       const KnowledgeBundle &bundle,
                                       const SentenceEncoder &encoder,
                                       int dimension);

// Stacks content rows and learned speaker-role embeddings (row 0 therapist,
// row 1 client) into the node feature matrix of `graph`.
nn::Tensor AssembleNodeFeatures(const DialogueGraph &graph,
                                const nn::Matrix &content_features,
                                const nn::Tensor &role_embeddings);

// Single-head graph attention layer. For node v over N(v) u {v}:
//   e_uv = leaky(score . [W h_u || W h_v]),  alpha_uv = softmax_u(e_uv),
//   h'_v = elu(sum_u alpha_uv W h_u).
struct GatParams {
  nn::Tensor weight;  // d x d, applied as H * weight
  nn::Tensor score;   // 1 x 2d; first half scores the source node
  double leak = 0.2;

  std::vector<nn::Tensor> Parameters() const { return {weight, score}; }
};

// Glorot-uniform weight, zero score vector, leak 0.2.
GatParams InitGatParams(int dimension, SplitMix64 &rng);

struct GatResult {
  nn::Tensor hidden;      // nodes x d
  nn::Matrix attention;   // attention(v, u): weight of source u at node v
};

// `linear` skips the ELU (used to check the aggregation in isolation).
// Throws NON_FINITE_INPUT.
GatResult GatForward(const DialogueGraph &graph, const nn::Tensor &features,
                     const GatParams &params, bool linear = false);

enum class MemorySource { kSc, kSgcr };

struct MemoryRowOrigin {
  MemorySource source = MemorySource::kSc;
  int node_id = 0;
};

// Keys/values for the knowledge-aware attention: projected speaker-context
// rows first, then projected commonsense rows, each in node-id order.
struct MemoryMatrix {
  nn::Tensor rows;
  std::vector<MemoryRowOrigin> origin;

  size_t size() const { return origin.size(); }
};

// Either input may have zero rows (graph disabled). Throws DIM_MISMATCH or
// NON_FINITE_INPUT.
MemoryMatrix FuseRepresentations(const nn::Tensor &sc_out,
                                 const nn::Tensor &sgcr_out,
                                 const nn::Tensor &projector);

// Debug dump for visualization tools:
//   {"nodes": [{"id", "kind", "source", "role"}], "edges": [[src, dst]]}
nlohmann::json GraphToJson(const DialogueGraph &graph);

}  // namespace sentigraph

#endif  // SENTIGRAPH_GRAPH_H_
