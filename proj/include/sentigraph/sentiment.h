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

#ifndef SENTIGRAPH_SENTIMENT_H_
#define SENTIGRAPH_SENTIMENT_H_

#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sentigraph/corpus.h"
#include "sentigraph/knowledge.h"

namespace sentigraph {

inline constexpr std::string_view kSeparator = " [SEP] ";
inline constexpr int kAttributeCount = 5;

// An utterance followed by its xAttr attributes:
//   "base [SEP] a1 [SEP] ... [SEP] ak"
struct AttributeAugmentedText {
  std::string base;
  std::vector<std::string> attributes;
  std::string rendered;
};

AttributeAugmentedText RenderAugmented(std::string base,
                                       std::vector<std::string> attributes);

// Splits a rendered string back into base and attributes. Exact as long as
// no attribute contains the separator.
AttributeAugmentedText ParseAugmented(std::string_view rendered);

// Queries the top-5 xAttr inferences for the utterance text.
AttributeAugmentedText AugmentWithAttributes(
    const Utterance &utterance, const CommonsenseProvider &provider);

struct SentimentPrediction {
  SentimentLabel label = SentimentLabel::kPositive;
  double confidence = 0.0;  // in [0, 1]
};

class SentimentClassifier {
 public:
  virtual ~SentimentClassifier() = default;
  virtual SentimentPrediction Classify(std::string_view text) const = 0;
};

// Keyword stub. Any token from the negative cue list makes the text
// NEGATIVE; everything else is POSITIVE.
class LexiconClassifier : public SentimentClassifier {
 public:
  LexiconClassifier();
  explicit LexiconClassifier(std::set<std::string> negative_cues)
      : negative_cues_(std::move(negative_cues)) {}

  SentimentPrediction Classify(std::string_view text) const override;

  static const std::set<std::string> &DefaultNegativeCues();

 private:
  std::set<std::string> negative_cues_;
};

// Throws EMPTY_TEXT when the rendered text is blank.
SentimentLabel ClassifySentiment(const AttributeAugmentedText &aug,
                                 const SentimentClassifier &clf);

// Augment + classify for a single piece of text.
SentimentLabel LabelText(std::string_view text,
                         const CommonsenseProvider &provider,
                         const SentimentClassifier &clf);

struct LabelOptions {
  // Worker threads; utterances are labeled independently.
  int threads = 1;
};

// Fills every missing sentiment. Existing labels are kept, which makes the
// operation idempotent. Failures are rethrown with the dialogue id and
// utterance index prepended.
std::vector<Dialogue> PseudoLabelCorpus(std::span<const Dialogue> dialogues,
                                        const CommonsenseProvider &provider,
                                        const SentimentClassifier &clf,
                                        const LabelOptions &options = {});

}  // namespace sentigraph

#endif  // SENTIGRAPH_SENTIMENT_H_
