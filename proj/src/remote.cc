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

#include "sentigraph/remote.h"

#include <cmath>

#include "httplib.h"
#include "json.hpp"
#include "sentigraph/error.h"

namespace sentigraph {
namespace {

using nlohmann::json;

json PostJson(const std::string &endpoint, const std::string &route,
              const json &body, int timeout_sec, ErrorCode code) {
  // Split "http://host:port/prefix" into the origin and the path prefix.
  std::string origin = endpoint, prefix;
  size_t scheme = endpoint.find("://");
  size_t slash = endpoint.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (slash != std::string::npos) {
    origin = endpoint.substr(0, slash);
    prefix = endpoint.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  }
  httplib::Client client(origin);
  if (!client.is_valid()) {
    throw Error(code, "invalid endpoint '" + endpoint + "'");
  }
  client.set_connection_timeout(timeout_sec);
  client.set_read_timeout(timeout_sec);
  auto res = client.Post(prefix + route, body.dump(), "application/json");
  if (!res) {
    throw Error(code, endpoint + route + ": " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(code, endpoint + route + ": HTTP " + std::to_string(res->status));
  }
  try {
    return json::parse(res->body);
  } catch (const json::exception &e) {
    throw Error(code, endpoint + route + ": " + e.what());
  }
}

}  // namespace

HttpCommonsenseProvider::HttpCommonsenseProvider(std::string endpoint,
                                                 int timeout_sec)
    : endpoint_(std::move(endpoint)), timeout_sec_(timeout_sec) {}

std::vector<std::string> HttpCommonsenseProvider::Infer(std::string_view text,
                                                        Relation relation,
                                                        int k) const {
  json body = {{"text", std::string(text)},
               {"relation", RelationName(relation)},
               {"k", k}};
  json doc = PostJson(endpoint_, "/infer", body, timeout_sec_,
                      ErrorCode::kProviderFailure);
  try {
    return doc.at("inferences").get<std::vector<std::string>>();
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kProviderFailure,
                std::string("bad inference response: ") + e.what());
  }
}

HttpSentimentClassifier::HttpSentimentClassifier(std::string endpoint,
                                                 int timeout_sec)
    : endpoint_(std::move(endpoint)), timeout_sec_(timeout_sec) {}

SentimentPrediction HttpSentimentClassifier::Classify(
    std::string_view text) const {
  json doc = PostJson(endpoint_, "/classify", {{"text", std::string(text)}},
                      timeout_sec_, ErrorCode::kProviderFailure);
  try {
    SentimentPrediction p;
    p.label = ParseSentiment(doc.at("label").get<std::string>());
    p.confidence = doc.value("confidence", 1.0);
    return p;
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kProviderFailure,
                std::string("bad classifier response: ") + e.what());
  } catch (const Error &e) {
    throw Error(ErrorCode::kProviderFailure,
                std::string("bad classifier response: ") + e.what());
  }
}

HttpSentenceEncoder::HttpSentenceEncoder(std::string endpoint, int dimension,
                                         int timeout_sec)
    : endpoint_(std::move(endpoint)),
      dimension_(dimension),
      timeout_sec_(timeout_sec) {}

Eigen::VectorXd HttpSentenceEncoder::Encode(std::string_view text) const {
  json doc = PostJson(endpoint_, "/encode", {{"text", std::string(text)}},
                      timeout_sec_, ErrorCode::kEncoderFailure);
  std::vector<double> values;
  try {
    values = doc.at("embedding").get<std::vector<double>>();
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kEncoderFailure,
                std::string("bad encoder response: ") + e.what());
  }
  if (static_cast<int>(values.size()) != dimension_) {
    throw Error(ErrorCode::kEncoderFailure,
                "encoder returned " + std::to_string(values.size()) +
                    " values, expected " + std::to_string(dimension_));
  }
  return Eigen::Map<Eigen::VectorXd>(values.data(), dimension_);
}

Providers MakeProviders(const ModelConfig &config) {
  auto need = [](const std::string &endpoint, const std::string &what) {
    if (endpoint.empty()) {
      throw Error(ErrorCode::kBadConfig, what + " needs an endpoint");
    }
  };
  Providers p = Providers::Mock(config.graph_dim);
  if (config.provider == "comet") {
    need(config.provider_endpoint, "provider comet");
    p.commonsense =
        std::make_shared<HttpCommonsenseProvider>(config.provider_endpoint);
  } else if (config.provider != "mock") {
    throw Error(ErrorCode::kBadConfig, "unknown provider " + config.provider);
  }
  if (config.classifier == "encoder") {
    need(config.classifier_endpoint, "classifier encoder");
    p.classifier =
        std::make_shared<HttpSentimentClassifier>(config.classifier_endpoint);
  } else if (config.classifier != "stub") {
    throw Error(ErrorCode::kBadConfig,
                "unknown classifier " + config.classifier);
  }
  if (config.encoder == "remote") {
    need(config.encoder_endpoint, "encoder remote");
    p.encoder = std::make_shared<HttpSentenceEncoder>(config.encoder_endpoint,
                                                      config.graph_dim);
  } else if (config.encoder != "mock") {
    throw Error(ErrorCode::kBadConfig, "unknown encoder " + config.encoder);
  }
  return p;
}

}  // namespace sentigraph
