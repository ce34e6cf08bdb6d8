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

#ifndef SENTIGRAPH_EVAL_H_
#define SENTIGRAPH_EVAL_H_

#include <filesystem>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "sentigraph/config.h"
#include "sentigraph/generator.h"

namespace sentigraph {

struct MetricTriple {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  // f1 is the harmonic mean, 0 when precision + recall == 0.
  static MetricTriple FromPrecisionRecall(double precision, double recall);
};

// Clipped n-gram overlap on TokenizeLowerAlnum tokens. Either side without
// n-grams gives (0, 0, 0).
MetricTriple RougeN(std::string_view candidate, std::string_view reference,
                    int n);

// Longest-common-subsequence precision/recall.
MetricTriple RougeL(std::string_view candidate, std::string_view reference);

// Porter (1980) suffix-stripping stemmer for lower-case ASCII words.
std::string PorterStem(std::string_view word);

// Exact then Porter-stem matching (no synonym stage). Each stage aligns
// every unmatched candidate token, left to right, with the leftmost
// unmatched reference token it matches.
//   Fmean = 10PR / (R + 9P), penalty = 0.5 (chunks / matches)^3,
//   score = Fmean (1 - penalty).
double Meteor(std::string_view candidate, std::string_view reference);

// Token embedding seam for BERTScore.
class TokenEmbedder {
 public:
  virtual ~TokenEmbedder() = default;
  virtual std::vector<Eigen::VectorXd> Embed(
      const std::vector<std::string> &tokens) const = 0;
};

// Pseudo-random unit vector per token (non-contextual).
class HashTokenEmbedder : public TokenEmbedder {
 public:
  explicit HashTokenEmbedder(int dimension) : dimension_(dimension) {}
  std::vector<Eigen::VectorXd> Embed(
      const std::vector<std::string> &tokens) const override;

 private:
  int dimension_;
};

// One-hot vector per distinct token, indices assigned on first sight, so
// distinct tokens are exactly orthogonal. Throws EMBEDDER_FAILURE once
// more than `dimension` distinct tokens have been seen.
class OneHotTokenEmbedder : public TokenEmbedder {
 public:
  explicit OneHotTokenEmbedder(int dimension) : dimension_(dimension) {}
  std::vector<Eigen::VectorXd> Embed(
      const std::vector<std::string> &tokens) const override;

 private:
  int dimension_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::string, int> index_;
};

// Fixed lookup table (e.g. static word vectors). Unknown tokens are an
// EMBEDDER_FAILURE.
class TableTokenEmbedder : public TokenEmbedder {
 public:
  explicit TableTokenEmbedder(std::map<std::string, Eigen::VectorXd> table)
      : table_(std::move(table)) {}
  // "token v1 v2 ..." per line.
  static TableTokenEmbedder LoadText(const std::filesystem::path &path);
  std::vector<Eigen::VectorXd> Embed(
      const std::vector<std::string> &tokens) const override;

 private:
  std::map<std::string, Eigen::VectorXd> table_;
};

// Greedy cosine matching without idf weighting or baseline rescaling.
// Returns (P, R, F1) each clipped to [0, 1]; empty sides give zeros.
MetricTriple BertScoreTriple(std::string_view candidate,
                             std::string_view reference,
                             const TokenEmbedder &embedder);
double BertScore(std::string_view candidate, std::string_view reference,
                 const TokenEmbedder &embedder);

struct EvalReport {
  std::string label;
  AblationFlags flags;
  size_t count = 0;
  MetricTriple rouge1, rouge2, rouge_l;
  double bert_score = 0.0;
  double meteor = 0.0;

  bool SameScores(const EvalReport &other) const;
};

// Means of the per-pair metrics. Throws LENGTH_MISMATCH or EMPTY_RUN.
EvalReport EvaluateRun(std::span<const std::string> predictions,
                       std::span<const std::string> references,
                       const TokenEmbedder &embedder);

// Eleven metric columns; ROUGE values scaled by 100.
std::string RenderMarkdown(std::span<const EvalReport> reports);
nlohmann::json ReportToJson(const EvalReport &report);

// Newline-delimited UTF-8, one prediction or reference per line.
std::vector<std::string> ReadLines(const std::filesystem::path &path);

std::string VariantName(AblationFlags flags);

struct AblationData {
  std::vector<Dialogue> train;
  std::vector<Dialogue> test;
};

// Context/target pairs of the test dialogues.
std::vector<GenerationExample> TestExamples(std::span<const Dialogue> test,
                                            int window);

// Trains and evaluates every variant with the same seed. Throws
// DUPLICATE_VARIANT when a flag set repeats.
std::vector<EvalReport> RunAblation(std::span<const AblationFlags> variants,
                                    const AblationData &data,
                                    const RunConfig &config,
                                    const Providers &providers,
                                    const TokenEmbedder &embedder,
                                    const DecodeConfig &decode = {});

// Trains the plain backbone on the same data and evaluates it the same way.
EvalReport EvaluateVanillaBaseline(const AblationData &data,
                                   const RunConfig &config,
                                   const Providers &providers,
                                   const TokenEmbedder &embedder,
                                   const DecodeConfig &decode = {});

}  // namespace sentigraph

#endif  // SENTIGRAPH_EVAL_H_
