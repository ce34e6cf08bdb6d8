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

#include <atomic>
#include <stdexcept>

#include "doctest.h"
#include "sentigraph/hash.h"
#include "sentigraph/sentiment.h"
#include "support.h"

namespace sentigraph {
namespace {

using testing::ThrownCode;

// Returns a fixed attribute list regardless of input.
class FixedProvider : public CommonsenseProvider {
 public:
  explicit FixedProvider(std::vector<std::string> out) : out_(std::move(out)) {}
  std::vector<std::string> Infer(std::string_view, Relation, int k) const override {
    ++calls;
    std::vector<std::string> v = out_;
    if (static_cast<int>(v.size()) > k) v.resize(k);
    return v;
  }
  mutable std::atomic<int> calls{0};

 private:
  std::vector<std::string> out_;
};

class ThrowingProvider : public CommonsenseProvider {
 public:
  std::vector<std::string> Infer(std::string_view, Relation, int) const override {
    throw std::runtime_error("backend down");
  }
};

TEST_CASE("augmentation renders base and top-5 attributes") {
  FixedProvider p({"a1", "a2", "a3", "a4", "a5"});
  Utterance u{0, SpeakerRole::kClient, "I failed my exam", std::nullopt};
  auto aug = AugmentWithAttributes(u, p);
  CHECK(aug.rendered == "I failed my exam [SEP] a1 [SEP] a2 [SEP] a3 [SEP] a4 [SEP] a5");

  FixedProvider none({});
  CHECK(AugmentWithAttributes(u, none).rendered == "I failed my exam");

  FixedProvider seven({"a1", "a2", "a3", "a4", "a5", "a6", "a7"});
  auto five = AugmentWithAttributes(u, seven);
  CHECK(five.attributes.size() == 5);
  CHECK(five.attributes.back() == "a5");
}

TEST_CASE("augmented text parses back") {
  MockCommonsenseProvider mock;
  SplitMix64 rng(5);
  for (int i = 0; i < 100; ++i) {
    std::string base = testing::RandomSentence(rng, 8, 20);
    if (base.empty()) base = "x";
    Utterance u{0, SpeakerRole::kClient, base, std::nullopt};
    auto aug = AugmentWithAttributes(u, mock);
    size_t seps = 0;
    for (size_t pos = 0; (pos = aug.rendered.find(kSeparator, pos)) != std::string::npos;
         pos += kSeparator.size())
      ++seps;
    CHECK(seps == aug.attributes.size());
    auto back = ParseAugmented(aug.rendered);
    CHECK(back.base == aug.base);
    CHECK(back.attributes == aug.attributes);
  }
}

TEST_CASE("lexicon stub") {
  LexiconClassifier clf;
  CHECK(clf.Classify("I feel so helpless today").label == SentimentLabel::kNegative);
  CHECK(clf.Classify("the weather is nice").label == SentimentLabel::kPositive);
  auto p = clf.Classify("sad and lonely and tired");
  CHECK(p.confidence > clf.Classify("sad").confidence);
  CHECK(p.confidence <= 1.0);
  CHECK(ThrownCode([&] { ClassifySentiment(RenderAugmented("  ", {}), clf); }) ==
        ErrorCode::kEmptyText);
}

// Client turns from the published case-study table, with their tags.
TEST_CASE("case-study client turns") {
  MockCommonsenseProvider mock;
  LexiconClassifier clf;
  CHECK(LabelText("I guess I can probably be more productive in my school work "
                  "rather than going out to parties as much. But I feel helpless.",
                  mock, clf) == SentimentLabel::kNegative);
  CHECK(LabelText("But I feel helpless", mock, clf) == SentimentLabel::kNegative);
  CHECK(LabelText("I think sometimes cravings can go high but my self control "
                  "over my thoughts has improved so thanks to you.",
                  mock, clf) == SentimentLabel::kPositive);
  CHECK(LabelText("my self control over my thoughts has improved so thanks to you",
                  mock, clf) == SentimentLabel::kPositive);
  CHECK(LabelText("I used to, I used to like it. I remember that, but it was a "
                  "long time ago. Yet controlling is hitting hard on me.",
                  mock, clf) == SentimentLabel::kNegative);
}

std::vector<Dialogue> Unlabeled(int dialogues, int turns, uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<Dialogue> out;
  const char *words[] = {"i", "feel", "sad", "happy", "today", "work", "hard",
                         "fine", "lonely", "good", "family", "tired"};
  for (int d = 0; d < dialogues; ++d) {
    Dialogue dia;
    dia.id = "u" + std::to_string(d);
    for (int t = 0; t < turns; ++t) {
      std::string text;
      int n = 2 + rng.Below(6);
      for (int w = 0; w < n; ++w) text += std::string(w ? " " : "") + words[rng.Below(12)];
      dia.utterances.push_back({t, t % 2 ? SpeakerRole::kTherapist : SpeakerRole::kClient,
                                text, std::nullopt});
    }
    out.push_back(dia);
  }
  return out;
}

TEST_CASE("pseudo-labeling is total, order preserving and deterministic") {
  auto corpus = Unlabeled(1, 3, 1);
  MockCommonsenseProvider mock;
  LexiconClassifier clf;
  auto labeled = PseudoLabelCorpus(corpus, mock, clf);
  REQUIRE(labeled[0].utterances.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(labeled[0].utterances[i].sentiment.has_value());
    CHECK(labeled[0].utterances[i].text == corpus[0].utterances[i].text);
    CHECK(labeled[0].utterances[i].index == i);
  }
  auto big = Unlabeled(100, 10, 2);
  auto one = PseudoLabelCorpus(big, mock, clf, {1});
  auto four = PseudoLabelCorpus(big, mock, clf, {4});
  CHECK(one == four);
  CHECK(PseudoLabelCorpus(one, mock, clf) == one);
}

TEST_CASE("existing labels are kept and not recomputed") {
  auto corpus = Unlabeled(2, 4, 3);
  for (auto &d : corpus)
    for (auto &u : d.utterances) u.sentiment = SentimentLabel::kNegative;
  FixedProvider counting({"x"});
  LexiconClassifier clf;
  auto out = PseudoLabelCorpus(corpus, counting, clf);
  CHECK(out == corpus);
  CHECK(counting.calls == 0);
}

TEST_CASE("failures name the dialogue and turn") {
  auto corpus = Unlabeled(1, 2, 4);
  ThrowingProvider bad;
  LexiconClassifier clf;
  try {
    PseudoLabelCorpus(corpus, bad, clf);
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kProviderFailure);
    CHECK(std::string(e.what()).find("u0") != std::string::npos);
  }
}

}  // namespace
}  // namespace sentigraph
