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

#include "sentigraph/knowledge.h"

#include "sentigraph/error.h"
#include "sentigraph/hash.h"

namespace sentigraph {

namespace {

constexpr std::array<Relation, 9> kAllRelations = {
    Relation::kXAttr,   Relation::kXReact,  Relation::kXWant,
    Relation::kXIntent, Relation::kOReact,  Relation::kOWant,
    Relation::kXEffect, Relation::kXNeed,   Relation::kOEffect,
};

}  // namespace

std::string_view RelationName(Relation relation) {
  switch (relation) {
    case Relation::kXAttr: return "xAttr";
    case Relation::kXReact: return "xReact";
    case Relation::kXWant: return "xWant";
    case Relation::kXIntent: return "xIntent";
    case Relation::kOReact: return "oReact";
    case Relation::kOWant: return "oWant";
    case Relation::kXEffect: return "xEffect";
    case Relation::kXNeed: return "xNeed";
    case Relation::kOEffect: return "oEffect";
  }
  return "";
}

Relation ParseRelation(std::string_view name) {
  for (Relation r : kAllRelations) {
    if (RelationName(r) == name) return r;
  }
  throw Error(ErrorCode::kMalformedInput,
              "unknown relation '" + std::string(name) + "'");
}

const std::array<Relation, 9> &AllRelations() { return kAllRelations; }

std::vector<std::string> MockInfer(std::string_view text, Relation relation,
                                   int k) {
  std::string key(text);
  key.push_back('\x1f');
  key.append(RelationName(relation));
  const std::string h = HexString(Fnv1a64(key)).substr(0, 4);
  std::vector<std::string> out;
  out.reserve(k > 0 ? k : 0);
  for (int i = 1; i <= k; ++i) {
    out.push_back(std::string(RelationName(relation)) + "-inf-" +
                  std::to_string(i) + "-" + h);
  }
  return out;
}

std::vector<Relation> SelectRelations(SentimentLabel sentiment) {
  if (sentiment == SentimentLabel::kPositive) {
    return {Relation::kXReact, Relation::kXWant, Relation::kXIntent};
  }
  return {Relation::kOReact, Relation::kOWant};
}

size_t KnowledgeBundle::InferenceCount() const {
  size_t n = 0;
  for (const auto &e : entries) n += e.inferences.size();
  return n;
}

std::vector<std::string> CheckedInfer(const CommonsenseProvider &provider,
                                      std::string_view text, Relation relation,
                                      int k) {
  std::vector<std::string> out;
  try {
    out = provider.Infer(text, relation, k);
  } catch (const Error &) {
    throw;
  } catch (const std::exception &e) {
    throw Error(ErrorCode::kProviderFailure, e.what());
  }
  if (out.size() > static_cast<size_t>(k)) out.resize(k);
  for (const auto &s : out) {
    if (s.empty()) {
      throw Error(ErrorCode::kProviderFailure,
                  "provider returned an empty inference for " +
                      std::string(RelationName(relation)));
    }
  }
  return out;
}

KnowledgeBundle ExtractKnowledge(const Utterance &utterance,
                                 const CommonsenseProvider &provider,
                                 const ExtractOptions &options) {
  if (!utterance.sentiment) {
    throw Error(ErrorCode::kUnlabeledUtterance,
                "utterance " + std::to_string(utterance.index) +
                    " has no sentiment label");
  }
  if (options.k < 1) throw Error(ErrorCode::kBadConfig, "k must be >= 1");

  KnowledgeBundle bundle;
  bundle.utterance_index = utterance.index;
  bundle.sentiment = *utterance.sentiment;
  size_t total = 0;
  for (Relation r : SelectRelations(*utterance.sentiment)) {
    KnowledgeEntry entry{r, CheckedInfer(provider, utterance.text, r, options.k)};
    total += entry.inferences.size();
    bundle.entries.push_back(std::move(entry));
  }
  if (total == 0 && !options.allow_empty) {
    throw Error(ErrorCode::kEmptyKnowledge,
                "no inferences for utterance " +
                    std::to_string(utterance.index));
  }
  if (options.allow_empty) {
    for (auto &entry : bundle.entries) {
      if (entry.inferences.empty()) {
        entry.inferences.emplace_back(kEmptyInference);
      }
    }
  }
  return bundle;
}

nlohmann::json BundleToJson(const KnowledgeBundle &bundle) {
  nlohmann::json doc;
  doc["utterance_index"] = bundle.utterance_index;
  doc["sentiment"] = std::string(SentimentName(bundle.sentiment));
  auto entries = nlohmann::json::array();
  for (const auto &e : bundle.entries) {
    entries.push_back({{"relation", std::string(RelationName(e.relation))},
                       {"inferences", e.inferences}});
  }
  doc["entries"] = std::move(entries);
  return doc;
}

KnowledgeBundle BundleFromJson(const nlohmann::json &doc) {
  try {
    KnowledgeBundle bundle;
    bundle.utterance_index = doc.at("utterance_index").get<int>();
    bundle.sentiment = ParseSentiment(doc.at("sentiment").get<std::string>());
    for (const auto &e : doc.at("entries")) {
      bundle.entries.push_back(
          {ParseRelation(e.at("relation").get<std::string>()),
           e.at("inferences").get<std::vector<std::string>>()});
    }
    return bundle;
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::kMalformedInput, e.what());
  }
}

}  // namespace sentigraph
