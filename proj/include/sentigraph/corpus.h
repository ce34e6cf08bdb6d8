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

#ifndef SENTIGRAPH_CORPUS_H_
#define SENTIGRAPH_CORPUS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sentigraph {

enum class SpeakerRole { kTherapist, kClient };

// Binary by construction; there is no neutral class.
enum class SentimentLabel { kPositive, kNegative };

// "T" / "C".
std::string_view RoleCode(SpeakerRole role);
// Throws UNKNOWN_ROLE for anything but "T" or "C".
SpeakerRole ParseRole(std::string_view code);

// "positive" / "negative".
std::string_view SentimentName(SentimentLabel label);
// Throws MALFORMED_INPUT for anything but "positive" or "negative".
SentimentLabel ParseSentiment(std::string_view name);

struct Utterance {
  int index = 0;
  SpeakerRole speaker = SpeakerRole::kClient;
  std::string text;
  std::optional<SentimentLabel> sentiment;

  bool operator==(const Utterance &) const = default;
};

struct Dialogue {
  std::string id;
  std::vector<Utterance> utterances;
  std::map<std::string, std::string> meta;

  bool operator==(const Dialogue &) const = default;
};

// One therapist turn paired with the turns immediately before it.
struct GenerationExample {
  std::string dialogue_id;
  std::vector<Utterance> context;  // most recent last
  Utterance target;
};

enum class TranscriptFormat { kJsonV1 };

inline constexpr int kDefaultContextWindow = 8;

// Parses one JSON_V1 document:
//   {"id": str, "meta": {str: str}?,
//    "utterances": [{"speaker": "T"|"C", "text": str,
//                    "sentiment": "positive"|"negative"|null}]}
// Indices are assigned from array order.
Dialogue ParseTranscript(std::string_view raw,
                         TranscriptFormat format = TranscriptFormat::kJsonV1);

// Accepts a single document, a JSON array of documents, or a
// newline-delimited stream of documents.
std::vector<Dialogue> ParseTranscriptStream(std::string_view raw);

// Single-line JSON_V1 rendering; ParseTranscript inverts it.
std::string SerializeTranscript(const Dialogue &dialogue);

// Reads a transcript file, or every *.json / *.jsonl / *.ndjson file of a
// directory in lexicographic path order.
std::vector<Dialogue> LoadTranscripts(const std::filesystem::path &path);

// Writes one dialogue per line.
void WriteTranscripts(const std::filesystem::path &path,
                      std::span<const Dialogue> dialogues);

// Checks every Dialogue invariant, throwing MALFORMED_INPUT/EMPTY_DIALOGUE.
void ValidateDialogue(const Dialogue &dialogue);

struct CorpusSplit {
  std::vector<Dialogue> train;
  std::vector<Dialogue> validation;
  std::vector<Dialogue> test;
};

// Dialogue-level split. Dialogues are ordered by id before a seeded shuffle,
// so the result depends only on the ids, the ratios and the seed. Sizes use
// largest-remainder rounding of ratio * n.
CorpusSplit SplitCorpus(std::span<const Dialogue> dialogues,
                        const std::array<double, 3> &ratios, uint64_t seed);

// Largest-remainder allocation of n items; exposed for tests.
std::array<size_t, 3> AllocateSplitSizes(size_t n,
                                         const std::array<double, 3> &ratios);

// One example per therapist turn that has at least one preceding turn.
std::vector<GenerationExample> BuildExamples(
    const Dialogue &dialogue, int window = kDefaultContextWindow);

// Trims ASCII whitespace from both ends.
std::string_view TrimWhitespace(std::string_view text);

}  // namespace sentigraph

#endif  // SENTIGRAPH_CORPUS_H_
