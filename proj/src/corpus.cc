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

#include "sentigraph/corpus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "sentigraph/error.h"
#include "sentigraph/hash.h"

namespace sentigraph {
namespace {

using nlohmann::json;

Dialogue DialogueFromJson(const json &doc) {
  if (!doc.is_object()) {
    throw Error(ErrorCode::kMalformedInput, "transcript must be a JSON object");
  }
  Dialogue dialogue;
  auto id = doc.find("id");
  if (id == doc.end() || !id->is_string()) {
    throw Error(ErrorCode::kMalformedInput, "missing string field 'id'");
  }
  dialogue.id = id->get<std::string>();

  auto meta = doc.find("meta");
  if (meta != doc.end() && !meta->is_null()) {
    if (!meta->is_object()) {
      throw Error(ErrorCode::kMalformedInput, "'meta' must be an object");
    }
    for (const auto &[key, value] : meta->items()) {
      if (!value.is_string()) {
        throw Error(ErrorCode::kMalformedInput,
                    "meta value for '" + key + "' must be a string");
      }
      dialogue.meta[key] = value.get<std::string>();
    }
  }

  auto utterances = doc.find("utterances");
  if (utterances == doc.end() || !utterances->is_array()) {
    throw Error(ErrorCode::kMalformedInput, "missing array 'utterances'");
  }
  if (utterances->empty()) {
    throw Error(ErrorCode::kEmptyDialogue, "dialogue '" + dialogue.id +
                                               "' has no utterances");
  }
  int index = 0;
  for (const auto &turn : *utterances) {
    if (!turn.is_object()) {
      throw Error(ErrorCode::kMalformedInput, "utterance must be an object");
    }
    auto speaker = turn.find("speaker");
    auto text = turn.find("text");
    if (speaker == turn.end() || !speaker->is_string()) {
      throw Error(ErrorCode::kMalformedInput, "utterance missing 'speaker'");
    }
    if (text == turn.end() || !text->is_string()) {
      throw Error(ErrorCode::kMalformedInput, "utterance missing 'text'");
    }
    Utterance u;
    u.index = index++;
    u.speaker = ParseRole(speaker->get<std::string>());
    u.text = text->get<std::string>();
    auto sentiment = turn.find("sentiment");
    if (sentiment != turn.end() && !sentiment->is_null()) {
      if (!sentiment->is_string()) {
        throw Error(ErrorCode::kMalformedInput, "'sentiment' must be a string");
      }
      u.sentiment = ParseSentiment(sentiment->get<std::string>());
    }
    dialogue.utterances.push_back(std::move(u));
  }
  ValidateDialogue(dialogue);
  return dialogue;
}

json DialogueToJson(const Dialogue &dialogue) {
  json doc;
  doc["id"] = dialogue.id;
  if (!dialogue.meta.empty()) doc["meta"] = dialogue.meta;
  json turns = json::array();
  for (const auto &u : dialogue.utterances) {
    json turn;
    turn["speaker"] = std::string(RoleCode(u.speaker));
    turn["text"] = u.text;
    turn["sentiment"] = u.sentiment ? json(std::string(SentimentName(*u.sentiment)))
                                    : json(nullptr);
    turns.push_back(std::move(turn));
  }
  doc["utterances"] = std::move(turns);
  return doc;
}

std::string ReadFile(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kMalformedInput, "cannot read " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::string_view RoleCode(SpeakerRole role) {
  return role == SpeakerRole::kTherapist ? "T" : "C";
}

SpeakerRole ParseRole(std::string_view code) {
  if (code == "T") return SpeakerRole::kTherapist;
  if (code == "C") return SpeakerRole::kClient;
  throw Error(ErrorCode::kUnknownRole, "speaker '" + std::string(code) + "'");
}

std::string_view SentimentName(SentimentLabel label) {
  return label == SentimentLabel::kPositive ? "positive" : "negative";
}

SentimentLabel ParseSentiment(std::string_view name) {
  if (name == "positive") return SentimentLabel::kPositive;
  if (name == "negative") return SentimentLabel::kNegative;
  throw Error(ErrorCode::kMalformedInput,
              "sentiment '" + std::string(name) + "'");
}

std::string_view TrimWhitespace(std::string_view text) {
  constexpr std::string_view kSpace = " \t\n\r\f\v";
  const auto begin = text.find_first_not_of(kSpace);
  if (begin == std::string_view::npos) return {};
  const auto end = text.find_last_not_of(kSpace);
  return text.substr(begin, end - begin + 1);
}

void ValidateDialogue(const Dialogue &dialogue) {
  if (dialogue.utterances.empty()) {
    throw Error(ErrorCode::kEmptyDialogue,
                "dialogue '" + dialogue.id + "' has no utterances");
  }
  for (size_t i = 0; i < dialogue.utterances.size(); ++i) {
    const auto &u = dialogue.utterances[i];
    if (u.index != static_cast<int>(i)) {
      throw Error(ErrorCode::kMalformedInput,
                  "utterance indices must be contiguous from 0");
    }
    if (TrimWhitespace(u.text).empty()) {
      throw Error(ErrorCode::kMalformedInput,
                  "utterance " + std::to_string(i) + " of '" + dialogue.id +
                      "' has empty text");
    }
  }
}

Dialogue ParseTranscript(std::string_view raw, TranscriptFormat format) {
  (void)format;  // JSON_V1 is the only format.
  json doc;
  try {
    doc = json::parse(raw);
  } catch (const json::parse_error &e) {
    throw Error(ErrorCode::kMalformedInput, e.what());
  }
  return DialogueFromJson(doc);
}

std::vector<Dialogue> ParseTranscriptStream(std::string_view raw) {
  std::vector<Dialogue> out;
  json whole = json::parse(raw, nullptr, /*allow_exceptions=*/false);
  if (!whole.is_discarded()) {
    if (whole.is_array()) {
      for (const auto &doc : whole) out.push_back(DialogueFromJson(doc));
    } else {
      out.push_back(DialogueFromJson(whole));
    }
    return out;
  }
  size_t start = 0;
  int line_no = 0;
  while (start <= raw.size()) {
    size_t end = raw.find('\n', start);
    if (end == std::string_view::npos) end = raw.size();
    ++line_no;
    std::string_view line = TrimWhitespace(raw.substr(start, end - start));
    if (!line.empty()) {
      try {
        out.push_back(ParseTranscript(line));
      } catch (const Error &e) {
        throw Error(e.code(), "line " + std::to_string(line_no) + ": " +
                                  e.detail());
      }
    }
    start = end + 1;
  }
  return out;
}

std::string SerializeTranscript(const Dialogue &dialogue) {
  return DialogueToJson(dialogue).dump();
}

std::vector<Dialogue> LoadTranscripts(const std::filesystem::path &path) {
  namespace fs = std::filesystem;
  std::vector<Dialogue> out;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto &entry : fs::directory_iterator(path)) {
      const auto ext = entry.path().extension();
      if (entry.is_regular_file() &&
          (ext == ".json" || ext == ".jsonl" || ext == ".ndjson")) {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto &file : files) {
      auto part = ParseTranscriptStream(ReadFile(file));
      out.insert(out.end(), std::make_move_iterator(part.begin()),
                 std::make_move_iterator(part.end()));
    }
    return out;
  }
  return ParseTranscriptStream(ReadFile(path));
}

void WriteTranscripts(const std::filesystem::path &path,
                      std::span<const Dialogue> dialogues) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kMalformedInput, "cannot write " + path.string());
  }
  for (const auto &d : dialogues) out << SerializeTranscript(d) << '\n';
}

std::array<size_t, 3> AllocateSplitSizes(size_t n,
                                         const std::array<double, 3> &ratios) {
  double sum = 0.0;
  for (double r : ratios) {
    if (!std::isfinite(r) || r < 0.0) {
      throw Error(ErrorCode::kBadRatios, "ratios must be non-negative");
    }
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::kBadRatios, "ratios must sum to 1");
  }
  std::array<size_t, 3> sizes{};
  std::array<double, 3> remainder{};
  size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = ratios[i] * static_cast<double>(n);
    sizes[i] = static_cast<size_t>(std::floor(exact));
    remainder[i] = exact - std::floor(exact);
    assigned += sizes[i];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return remainder[a] > remainder[b];
  });
  for (size_t k = 0; assigned < n; ++k, ++assigned) ++sizes[order[k % 3]];
  return sizes;
}

CorpusSplit SplitCorpus(std::span<const Dialogue> dialogues,
                        const std::array<double, 3> &ratios, uint64_t seed) {
  const auto sizes = AllocateSplitSizes(dialogues.size(), ratios);
  std::vector<size_t> order(dialogues.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return dialogues[a].id < dialogues[b].id;
  });
  SplitMix64 rng(seed);
  for (size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.Below(i)]);
  }
  CorpusSplit split;
  size_t pos = 0;
  for (size_t i = 0; i < sizes[0]; ++i) split.train.push_back(dialogues[order[pos++]]);
  for (size_t i = 0; i < sizes[1]; ++i) split.validation.push_back(dialogues[order[pos++]]);
  for (size_t i = 0; i < sizes[2]; ++i) split.test.push_back(dialogues[order[pos++]]);
  return split;
}

std::vector<GenerationExample> BuildExamples(const Dialogue &dialogue,
                                             int window) {
  if (window < 1) {
    throw Error(ErrorCode::kBadConfig, "context window must be >= 1");
  }
  std::vector<GenerationExample> out;
  const auto &turns = dialogue.utterances;
  for (size_t p = 1; p < turns.size(); ++p) {
    if (turns[p].speaker != SpeakerRole::kTherapist) continue;
    const size_t begin = p > static_cast<size_t>(window) ? p - window : 0;
    GenerationExample example;
    example.dialogue_id = dialogue.id;
    example.context.assign(turns.begin() + begin, turns.begin() + p);
    example.target = turns[p];
    out.push_back(std::move(example));
  }
  return out;
}

}  // namespace sentigraph
