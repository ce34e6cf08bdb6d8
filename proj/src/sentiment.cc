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

#include "sentigraph/sentiment.h"

#include <algorithm>
#include <exception>
#include <thread>

#include "sentigraph/error.h"
#include "sentigraph/text.h"

namespace sentigraph {

AttributeAugmentedText RenderAugmented(std::string base,
                                       std::vector<std::string> attributes) {
  AttributeAugmentedText aug;
  aug.rendered = base;
  for (const auto &a : attributes) {
    aug.rendered.append(kSeparator);
    aug.rendered.append(a);
  }
  aug.base = std::move(base);
  aug.attributes = std::move(attributes);
  return aug;
}

AttributeAugmentedText ParseAugmented(std::string_view rendered) {
  AttributeAugmentedText aug;
  aug.rendered = std::string(rendered);
  size_t pos = rendered.find(kSeparator);
  aug.base = std::string(rendered.substr(0, pos));
  while (pos != std::string_view::npos) {
    const size_t start = pos + kSeparator.size();
    pos = rendered.find(kSeparator, start);
    aug.attributes.emplace_back(rendered.substr(
        start, pos == std::string_view::npos ? std::string_view::npos
                                             : pos - start));
  }
  return aug;
}

AttributeAugmentedText AugmentWithAttributes(
    const Utterance &utterance, const CommonsenseProvider &provider) {
  auto attributes =
      CheckedInfer(provider, utterance.text, Relation::kXAttr, kAttributeCount);
  return RenderAugmented(utterance.text, std::move(attributes));
}

LexiconClassifier::LexiconClassifier()
    : negative_cues_(DefaultNegativeCues()) {}

const std::set<std::string> &LexiconClassifier::DefaultNegativeCues() {
  static const std::set<std::string> kCues = {
      "afraid",    "alone",     "angry",      "anxiety",   "anxious",
      "ashamed",   "awful",     "bad",        "cry",       "crying",
      "depressed", "depression", "desperate", "exhausted", "fail",
      "failed",    "failing",   "failure",    "fear",      "frustrated",
      "guilty",    "hard",      "hate",       "helpless",  "hopeless",
      "hurt",      "hurts",     "lonely",     "lost",      "miserable",
      "nervous",   "overwhelmed", "pain",     "panic",     "sad",
      "scared",    "stress",    "stressed",   "struggle",  "struggling",
      "suffer",    "terrible",  "tired",      "upset",     "worried",
      "worry",     "worse",     "worst",      "worthless",
  };
  return kCues;
}

SentimentPrediction LexiconClassifier::Classify(std::string_view text) const {
  int hits = 0;
  for (const auto &token : TokenizeLowerAlnum(text)) {
    if (negative_cues_.count(token)) ++hits;
  }
  if (hits == 0) return {SentimentLabel::kPositive, 0.55};
  return {SentimentLabel::kNegative, std::min(0.99, 0.6 + 0.1 * (hits - 1))};
}

SentimentLabel ClassifySentiment(const AttributeAugmentedText &aug,
                                 const SentimentClassifier &clf) {
  if (TrimWhitespace(aug.rendered).empty()) {
    throw Error(ErrorCode::kEmptyText, "nothing to classify");
  }
  try {
    return clf.Classify(aug.rendered).label;
  } catch (const Error &) {
    throw;
  } catch (const std::exception &e) {
    throw Error(ErrorCode::kProviderFailure,
                std::string("classifier failed: ") + e.what());
  }
}

SentimentLabel LabelText(std::string_view text,
                         const CommonsenseProvider &provider,
                         const SentimentClassifier &clf) {
  Utterance u;
  u.text = std::string(text);
  return ClassifySentiment(AugmentWithAttributes(u, provider), clf);
}

std::vector<Dialogue> PseudoLabelCorpus(std::span<const Dialogue> dialogues,
                                        const CommonsenseProvider &provider,
                                        const SentimentClassifier &clf,
                                        const LabelOptions &options) {
  std::vector<Dialogue> out(dialogues.begin(), dialogues.end());
  std::vector<Utterance *> pending;
  std::vector<const std::string *> owner;
  for (auto &d : out) {
    for (auto &u : d.utterances) {
      if (!u.sentiment) {
        pending.push_back(&u);
        owner.push_back(&d.id);
      }
    }
  }

  auto label_range = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      Utterance &u = *pending[i];
      try {
        u.sentiment = ClassifySentiment(AugmentWithAttributes(u, provider), clf);
      } catch (const Error &e) {
        throw Error(e.code(), "dialogue '" + *owner[i] + "' utterance " +
                                  std::to_string(u.index) + ": " + e.detail());
      }
    }
  };

  const size_t threads = static_cast<size_t>(std::max(1, options.threads));
  if (threads == 1 || pending.size() < 2 * threads) {
    label_range(0, pending.size());
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> workers;
    const size_t chunk = (pending.size() + threads - 1) / threads;
    for (size_t t = 0; t < threads; ++t) {
      const size_t begin = std::min(pending.size(), t * chunk);
      const size_t end = std::min(pending.size(), begin + chunk);
      workers.emplace_back([&, t, begin, end] {
        try {
          label_range(begin, end);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto &e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace sentigraph
