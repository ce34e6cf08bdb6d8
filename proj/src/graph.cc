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

#include "sentigraph/graph.h"

#include <cmath>
#include <set>

#include "sentigraph/error.h"
#include "sentigraph/sentiment.h"

namespace sentigraph {
namespace {

DialogueGraph Wire(std::span<const Utterance> context, NodeKind content_kind) {
  DialogueGraph graph;
  const int t = static_cast<int>(context.size());
  bool has_role[2] = {false, false};
  for (int i = 0; i < t; ++i) {
    graph.nodes.push_back({i, content_kind, i, context[i].speaker});
    has_role[context[i].speaker == SpeakerRole::kTherapist ? 0 : 1] = true;
  }
  int speaker_id[2] = {-1, -1};
  const SpeakerRole roles[2] = {SpeakerRole::kTherapist, SpeakerRole::kClient};
  for (int r = 0; r < 2; ++r) {
    if (!has_role[r]) continue;
    speaker_id[r] = static_cast<int>(graph.nodes.size());
    graph.nodes.push_back({speaker_id[r], NodeKind::kSpeaker, -1, roles[r]});
  }
  for (int i = 0; i < t; ++i) {
    const int r = context[i].speaker == SpeakerRole::kTherapist ? 0 : 1;
    graph.edges.emplace_back(speaker_id[r], i);
  }
  for (int i = 0; i + 1 < t; ++i) graph.edges.emplace_back(i, i + 1);
  return graph;
}

void CheckFinite(const nn::Matrix &m, const char *what) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::kNonFiniteInput, std::string(what) + " is not finite");
  }
}

}  // namespace

std::string_view NodeKindName(NodeKind kind) {
  switch (kind) {
    case NodeKind::kSpeaker: return "speaker";
    case NodeKind::kUtterance: return "utterance";
    case NodeKind::kKnowledge: return "knowledge";
  }
  return "";
}

std::vector<int> DialogueGraph::ContentNodes() const {
  std::vector<int> ids;
  for (const auto &n : nodes) {
    if (n.kind != NodeKind::kSpeaker) ids.push_back(n.id);
  }
  return ids;
}

nn::BoolMatrix DialogueGraph::AttentionMask() const {
  const auto n = static_cast<Eigen::Index>(nodes.size());
  nn::BoolMatrix mask = nn::BoolMatrix::Constant(n, n, false);
  for (Eigen::Index v = 0; v < n; ++v) mask(v, v) = true;
  for (const auto &[src, dst] : edges) mask(dst, src) = true;
  return mask;
}

void DialogueGraph::Validate() const {
  const int n = static_cast<int>(nodes.size());
  bool has_utterance = false, has_knowledge = false;
  for (int i = 0; i < n; ++i) {
    if (nodes[i].id != i) {
      throw Error(ErrorCode::kMalformedInput, "node ids must equal positions");
    }
    has_utterance |= nodes[i].kind == NodeKind::kUtterance;
    has_knowledge |= nodes[i].kind == NodeKind::kKnowledge;
  }
  if (has_utterance && has_knowledge) {
    throw Error(ErrorCode::kMalformedInput,
                "a graph holds utterance or knowledge nodes, not both");
  }
  std::set<std::pair<int, int>> seen;
  for (const auto &e : edges) {
    if (e.first < 0 || e.first >= n || e.second < 0 || e.second >= n) {
      throw Error(ErrorCode::kMalformedInput, "edge endpoint out of range");
    }
    if (e.first == e.second) {
      throw Error(ErrorCode::kMalformedInput, "self-loop");
    }
    if (!seen.insert(e).second) {
      throw Error(ErrorCode::kMalformedInput, "duplicate edge");
    }
  }
  if (features.size() > 0) {
    if (features.rows() != n) {
      throw Error(ErrorCode::kDimMismatch, "one feature row per node");
    }
    CheckFinite(features, "node features");
  }
}

DialogueGraph BuildScGraph(std::span<const Utterance> context) {
  if (context.empty()) throw Error(ErrorCode::kEmptyContext, "no utterances");
  return Wire(context, NodeKind::kUtterance);
}

DialogueGraph BuildSgcrGraph(std::span<const Utterance> context,
                             std::span<const KnowledgeBundle> bundles) {
  if (bundles.size() != context.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(bundles.size()) + " bundles for " +
                    std::to_string(context.size()) + " utterances");
  }
  for (size_t i = 0; i < bundles.size(); ++i) {
    if (bundles[i].utterance_index != context[i].index) {
      throw Error(ErrorCode::kLengthMismatch,
                  "bundle " + std::to_string(i) + " does not match its utterance");
    }
  }
  if (context.empty()) throw Error(ErrorCode::kEmptyContext, "no utterances");
  return Wire(context, NodeKind::kKnowledge);
}

Eigen::VectorXd MockSentenceEncoder::Encode(std::string_view text) const {
  SplitMix64 rng(Fnv1a64(text));
  Eigen::VectorXd v(dimension_);
  for (int i = 0; i < dimension_; ++i) v(i) = rng.Normal();
  return v / v.norm();
}

namespace {

Eigen::VectorXd CheckedEncode(const SentenceEncoder &encoder,
                              std::string_view text, int dimension) {
  Eigen::VectorXd v;
  try {
    v = encoder.Encode(text);
  } catch (const Error &) {
    throw;
  } catch (const std::exception &e) {
    throw Error(ErrorCode::kEncoderFailure, e.what());
  }
  if (v.size() != dimension) {
    throw Error(ErrorCode::kEncoderFailure,
                "encoder emitted " + std::to_string(v.size()) +
                    " dims, expected " + std::to_string(dimension));
  }
  if (!v.allFinite()) {
    throw Error(ErrorCode::kEncoderFailure, "encoder output is not finite");
  }
  return v;
}

}  // namespace

nn::Matrix EncodeUtteranceNodes(std::span<const Utterance> context,
                                const SentenceEncoder &encoder, int dimension) {
  nn::Matrix out(static_cast<Eigen::Index>(context.size()), dimension);
  for (size_t i = 0; i < context.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) =
        CheckedEncode(encoder, context[i].text, dimension).transpose();
  }
  return out;
}

std::string RenderKnowledgeInput(SentimentLabel sentiment,
                                 const KnowledgeBundle &bundle) {
  std::string out = "sentiment: ";
  out.append(SentimentName(sentiment));
  for (const auto &entry : bundle.entries) {
    for (const auto &inference : entry.inferences) {
      out.append(kSeparator);
      out.append(inference);
    }
  }
  return out;
}

Eigen::RowVectorXd EncodeKnowledgeNode(SentimentLabel sentiment,
                                       const KnowledgeBundle &bundle,
                                       const SentenceEncoder &encoder,
                                       int dimension) {
  return CheckedEncode(encoder, RenderKnowledgeInput(sentiment, bundle),
                       dimension)
      .transpose();
}

nn::Tensor AssembleNodeFeatures(const DialogueGraph &graph,
                                const nn::Matrix &content_features,
                                const nn::Tensor &role_embeddings) {
  const auto content = graph.ContentNodes();
  if (static_cast<Eigen::Index>(content.size()) != content_features.rows()) {
    throw Error(ErrorCode::kDimMismatch, "one feature row per content node");
  }
  if (role_embeddings.rows() != 2 ||
      role_embeddings.cols() != content_features.cols()) {
    throw Error(ErrorCode::kDimMismatch, "role embeddings must be 2 x d_g");
  }
  // Content nodes precede speaker nodes, so the stack is already in id order.
  std::vector<int> roles;
  for (const auto &n : graph.nodes) {
    if (n.kind == NodeKind::kSpeaker) {
      roles.push_back(n.role == SpeakerRole::kTherapist ? 0 : 1);
    }
  }
  std::vector<nn::Tensor> parts = {nn::Tensor::Constant(content_features)};
  if (!roles.empty()) parts.push_back(nn::Gather(role_embeddings, roles));
  return nn::ConcatRows(parts, content_features.cols());
}

GatParams InitGatParams(int dimension, SplitMix64 &rng) {
  const double bound = std::sqrt(6.0 / (2.0 * dimension));
  nn::Matrix w(dimension, dimension);
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.Uniform(-bound, bound);
  GatParams params;
  params.weight = nn::Tensor::Parameter(std::move(w));
  params.score = nn::Tensor::Parameter(nn::Matrix::Zero(1, 2 * dimension));
  params.leak = 0.2;
  return params;
}

GatResult GatForward(const DialogueGraph &graph, const nn::Tensor &features,
                     const GatParams &params, bool linear) {
  const Eigen::Index n = static_cast<Eigen::Index>(graph.num_nodes());
  const Eigen::Index d = params.weight.rows();
  if (features.rows() != n || features.cols() != d) {
    throw Error(ErrorCode::kDimMismatch, "features must be nodes x d_g");
  }
  CheckFinite(features.value(), "node features");
  CheckFinite(params.weight.value(), "GAT weight");
  CheckFinite(params.score.value(), "GAT score vector");

  const nn::Tensor projected = nn::MatMul(features, params.weight);
  const nn::Tensor src_score = nn::MatMul(
      projected, nn::Transpose(nn::SliceCols(params.score, 0, d)));
  const nn::Tensor dst_score = nn::MatMul(
      projected, nn::Transpose(nn::SliceCols(params.score, d, d)));
  // logits(v, u) = a_src . W h_u + a_dst . W h_v
  const nn::Tensor logits =
      nn::LeakyRelu(nn::OuterSum(dst_score, nn::Transpose(src_score)), params.leak);
  const nn::BoolMatrix mask = graph.AttentionMask();
  const nn::Tensor alpha = nn::SoftmaxRows(logits, &mask);
  nn::Tensor aggregated = nn::MatMul(alpha, projected);
  GatResult result;
  result.attention = alpha.value();
  result.hidden = linear ? aggregated : nn::Elu(aggregated);
  return result;
}

MemoryMatrix FuseRepresentations(const nn::Tensor &sc_out,
                                 const nn::Tensor &sgcr_out,
                                 const nn::Tensor &projector) {
  const Eigen::Index d_g = projector.rows();
  if (sc_out.cols() != d_g || sgcr_out.cols() != d_g) {
    throw Error(ErrorCode::kDimMismatch,
                "graph outputs must match the projector input width");
  }
  CheckFinite(sc_out.value(), "SC representations");
  CheckFinite(sgcr_out.value(), "SGCR representations");
  MemoryMatrix memory;
  memory.rows = nn::MatMul(nn::ConcatRows({sc_out, sgcr_out}, d_g), projector);
  for (Eigen::Index i = 0; i < sc_out.rows(); ++i) {
    memory.origin.push_back({MemorySource::kSc, static_cast<int>(i)});
  }
  for (Eigen::Index i = 0; i < sgcr_out.rows(); ++i) {
    memory.origin.push_back({MemorySource::kSgcr, static_cast<int>(i)});
  }
  return memory;
}

nlohmann::json GraphToJson(const DialogueGraph &graph) {
  nlohmann::json doc;
  auto nodes = nlohmann::json::array();
  for (const auto &n : graph.nodes) {
    nodes.push_back({{"id", n.id},
                     {"kind", std::string(NodeKindName(n.kind))},
                     {"source", n.source},
                     {"role", std::string(RoleCode(n.role))}});
  }
  auto edges = nlohmann::json::array();
  for (const auto &[src, dst] : graph.edges) edges.push_back({src, dst});
  doc["nodes"] = std::move(nodes);
  doc["edges"] = std::move(edges);
  return doc;
}

}  // namespace sentigraph
