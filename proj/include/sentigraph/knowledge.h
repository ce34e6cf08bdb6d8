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

#ifndef SENTIGRAPH_KNOWLEDGE_H_
#define SENTIGRAPH_KNOWLEDGE_H_

#include <array>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sentigraph/corpus.h"

namespace sentigraph {

// The nine ATOMIC-style relations a commonsense model can be queried with.
enum class Relation {
  kXAttr,
  kXReact,
  kXWant,
  kXIntent,
  kOReact,
  kOWant,
  kXEffect,
  kXNeed,
  kOEffect,
};

std::string_view RelationName(Relation relation);
// Throws MALFORMED_INPUT on unknown names.
Relation ParseRelation(std::string_view name);
const std::array<Relation, 9> &AllRelations();

// Backend seam for a generative commonsense model. Implementations return at
// most k ranked, non-empty inferences and are deterministic for a fixed
// (text, relation, k).
class CommonsenseProvider {
 public:
  virtual ~CommonsenseProvider() = default;
  virtual std::vector<std::string> Infer(std::string_view text,
                                         Relation relation, int k) const = 0;
};

// Offline provider: exactly k strings "{relation}-inf-{i}-{h}", where h is
// the first four hex digits of Fnv1a64(text + '\x1f' + relation name).
std::vector<std::string> MockInfer(std::string_view text, Relation relation,
                                   int k);

class MockCommonsenseProvider : public CommonsenseProvider {
 public:
  std::vector<std::string> Infer(std::string_view text, Relation relation,
                                 int k) const override {
    return MockInfer(text, relation, k);
  }
};

// Serializes calls into a provider that is not safe for concurrent use.
class SerializedProvider : public CommonsenseProvider {
 public:
  explicit SerializedProvider(std::shared_ptr<const CommonsenseProvider> inner)
      : inner_(std::move(inner)) {}

  std::vector<std::string> Infer(std::string_view text, Relation relation,
                                 int k) const override {
    std::lock_guard<std::mutex> lock(mu_);
    return inner_->Infer(text, relation, k);
  }

 private:
  std::shared_ptr<const CommonsenseProvider> inner_;
  mutable std::mutex mu_;
};

// Positive turns look at the speaker's own reaction, want and intent;
// negative turns look at how others react to and what they want for the
// speaker. Order is part of the knowledge-encoder input contract.
std::vector<Relation> SelectRelations(SentimentLabel sentiment);

struct KnowledgeEntry {
  Relation relation = Relation::kXReact;
  std::vector<std::string> inferences;

  bool operator==(const KnowledgeEntry &) const = default;
};

struct KnowledgeBundle {
  int utterance_index = 0;
  SentimentLabel sentiment = SentimentLabel::kPositive;
  std::vector<KnowledgeEntry> entries;

  size_t InferenceCount() const;
  bool operator==(const KnowledgeBundle &) const = default;
};

inline constexpr int kDefaultTopK = 5;
inline constexpr std::string_view kEmptyInference = "none";

struct ExtractOptions {
  int k = kDefaultTopK;
  // Replace an empty relation with the single inference "none" instead of
  // failing with EMPTY_KNOWLEDGE.
  bool allow_empty = true;
};

// Throws UNLABELED_UTTERANCE, PROVIDER_FAILURE or EMPTY_KNOWLEDGE.
KnowledgeBundle ExtractKnowledge(const Utterance &utterance,
                                 const CommonsenseProvider &provider,
                                 const ExtractOptions &options = {});

// Calls provider.Infer and enforces its contract (<= k, no empty strings),
// wrapping foreign exceptions as PROVIDER_FAILURE.
std::vector<std::string> CheckedInfer(const CommonsenseProvider &provider,
                                      std::string_view text, Relation relation,
                                      int k);

nlohmann::json BundleToJson(const KnowledgeBundle &bundle);
KnowledgeBundle BundleFromJson(const nlohmann::json &doc);

}  // namespace sentigraph

#endif  // SENTIGRAPH_KNOWLEDGE_H_
