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

#ifndef SENTIGRAPH_REMOTE_H_
#define SENTIGRAPH_REMOTE_H_

#include <string>

#include "sentigraph/config.h"
#include "sentigraph/generator.h"

namespace sentigraph {

// JSON-over-HTTP adapters for out-of-process backends. An endpoint is
// "http://host:port" optionally followed by a path prefix. Protocol:
//
//   POST <prefix>/infer     {"text", "relation", "k"} -> {"inferences": [..]}
//   POST <prefix>/classify  {"text"}  -> {"label": "POSITIVE", "confidence"}
//   POST <prefix>/encode    {"text"}  -> {"embedding": [..]}
//
// Any transport error, non-2xx status or malformed body is reported as
// PROVIDER_FAILURE (inference, classification) or ENCODER_FAILURE.

class HttpCommonsenseProvider : public CommonsenseProvider {
 public:
  explicit HttpCommonsenseProvider(std::string endpoint, int timeout_sec = 30);
  std::vector<std::string> Infer(std::string_view text, Relation relation,
                                 int k) const override;

 private:
  std::string endpoint_;
  int timeout_sec_;
};

class HttpSentimentClassifier : public SentimentClassifier {
 public:
  explicit HttpSentimentClassifier(std::string endpoint, int timeout_sec = 30);
  SentimentPrediction Classify(std::string_view text) const override;

 private:
  std::string endpoint_;
  int timeout_sec_;
};

class HttpSentenceEncoder : public SentenceEncoder {
 public:
  HttpSentenceEncoder(std::string endpoint, int dimension,
                      int timeout_sec = 30);
  int dimension() const override { return dimension_; }
  Eigen::VectorXd Encode(std::string_view text) const override;

 private:
  std::string endpoint_;
  int dimension_;
  int timeout_sec_;
};

// Backends named by the config: provider mock|comet, classifier
// stub|encoder, encoder mock|remote. Throws BAD_CONFIG for unknown names or
// a missing endpoint.
Providers MakeProviders(const ModelConfig &config);

}  // namespace sentigraph

#endif  // SENTIGRAPH_REMOTE_H_
