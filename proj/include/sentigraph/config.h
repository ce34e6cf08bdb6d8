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

#ifndef SENTIGRAPH_CONFIG_H_
#define SENTIGRAPH_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "json.hpp"
#include "sentigraph/backbone.h"

namespace sentigraph {

enum class BlockPlacement { kEveryLayer, kTopLayer };

struct ModelConfig {
  DecoderConfig decoder;
  int graph_dim = 256;
  int attention_heads = 4;
  BlockPlacement placement = BlockPlacement::kEveryLayer;
  int window = 8;
  int top_k = 5;
  bool allow_empty_knowledge = true;
  double aux_sentiment_weight = 0.0;
  // Backends: "mock"/"comet", "stub"/"encoder", "mock"/"remote".
  std::string provider = "mock";
  std::string classifier = "stub";
  std::string encoder = "mock";
  std::string provider_endpoint;
  std::string classifier_endpoint;
  std::string encoder_endpoint;
};

struct TrainConfig {
  double learning_rate = 2e-6;
  int batch_size = 8;
  int epochs = 20;
  uint64_t seed = 0;
  bool use_sc = true;
  bool use_sgcr = true;
  // 0 means epochs * ceil(examples / batch_size).
  int max_steps = 0;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  // Keys not consumed by the model or trainer (e.g. ablation settings).
  std::map<std::string, std::string> extra;
};

// Flat "key = value" text, '#' starts a comment. Keys are the TrainConfig
// field names plus the model keys documented in the README. Throws
// BAD_CONFIG on malformed lines, bad values or invalid combinations.
RunConfig ParseRunConfig(std::string_view text);
RunConfig LoadRunConfig(const std::filesystem::path &path);
void ValidateTrainConfig(const TrainConfig &config);

nlohmann::json ToJson(const ModelConfig &config);
nlohmann::json ToJson(const TrainConfig &config);
ModelConfig ModelConfigFromJson(const nlohmann::json &doc);
TrainConfig TrainConfigFromJson(const nlohmann::json &doc);

}  // namespace sentigraph

#endif  // SENTIGRAPH_CONFIG_H_
