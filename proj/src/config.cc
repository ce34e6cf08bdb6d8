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

#include "sentigraph/config.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sentigraph/corpus.h"
#include "sentigraph/error.h"

namespace sentigraph {
namespace {

int ParseInt(const std::string &key, const std::string &value) {
  int out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(ErrorCode::kBadConfig, key + ": expected an integer");
  }
  return out;
}

double ParseDouble(const std::string &key, const std::string &value) {
  try {
    size_t used = 0;
    const double out = std::stod(value, &used);
    if (used != value.size() || !std::isfinite(out)) throw std::invalid_argument("");
    return out;
  } catch (const std::exception &) {
    throw Error(ErrorCode::kBadConfig, key + ": expected a number");
  }
}

uint64_t ParseSeed(const std::string &key, const std::string &value) {
  uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(ErrorCode::kBadConfig, key + ": expected an unsigned integer");
  }
  return out;
}

bool ParseBool(const std::string &key, const std::string &value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw Error(ErrorCode::kBadConfig, key + ": expected true or false");
}

}  // namespace

void ValidateTrainConfig(const TrainConfig &c) {
  if (c.learning_rate < 0.0 || !std::isfinite(c.learning_rate)) {
    throw Error(ErrorCode::kBadConfig, "learning_rate must be >= 0");
  }
  if (c.batch_size < 1) throw Error(ErrorCode::kBadConfig, "batch_size must be >= 1");
  if (c.epochs < 1) throw Error(ErrorCode::kBadConfig, "epochs must be >= 1");
  if (c.max_steps < 0) throw Error(ErrorCode::kBadConfig, "max_steps must be >= 0");
}

RunConfig ParseRunConfig(std::string_view text) {
  RunConfig config;
  ModelConfig &m = config.model;
  TrainConfig &t = config.train;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string_view trimmed = TrimWhitespace(line);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kBadConfig,
                  "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(TrimWhitespace(trimmed.substr(0, eq)));
    const std::string value(TrimWhitespace(trimmed.substr(eq + 1)));
    if (key == "learning_rate") t.learning_rate = ParseDouble(key, value);
    else if (key == "batch_size") t.batch_size = ParseInt(key, value);
    else if (key == "epochs") t.epochs = ParseInt(key, value);
    else if (key == "seed") t.seed = ParseSeed(key, value);
    else if (key == "use_sc") t.use_sc = ParseBool(key, value);
    else if (key == "use_sgcr") t.use_sgcr = ParseBool(key, value);
    else if (key == "max_steps") t.max_steps = ParseInt(key, value);
    else if (key == "d_model") m.decoder.d_model = ParseInt(key, value);
    else if (key == "layers") m.decoder.layers = ParseInt(key, value);
    else if (key == "heads") m.decoder.heads = ParseInt(key, value);
    else if (key == "max_positions") m.decoder.max_positions = ParseInt(key, value);
    else if (key == "graph_dim") m.graph_dim = ParseInt(key, value);
    else if (key == "attention_heads") m.attention_heads = ParseInt(key, value);
    else if (key == "block_placement") {
      if (value == "every_layer") m.placement = BlockPlacement::kEveryLayer;
      else if (value == "top_layer") m.placement = BlockPlacement::kTopLayer;
      else throw Error(ErrorCode::kBadConfig, "block_placement: every_layer|top_layer");
    } else if (key == "window") m.window = ParseInt(key, value);
    else if (key == "k") m.top_k = ParseInt(key, value);
    else if (key == "knowledge.allow_empty") m.allow_empty_knowledge = ParseBool(key, value);
    else if (key == "loss.aux_sentiment_weight") m.aux_sentiment_weight = ParseDouble(key, value);
    else if (key == "provider") m.provider = value;
    else if (key == "classifier") m.classifier = value;
    else if (key == "encoder") m.encoder = value;
    else if (key == "provider_endpoint") m.provider_endpoint = value;
    else if (key == "classifier_endpoint") m.classifier_endpoint = value;
    else if (key == "encoder_endpoint") m.encoder_endpoint = value;
    else config.extra[key] = value;
  }
  ValidateTrainConfig(t);
  if (m.window < 1) throw Error(ErrorCode::kBadConfig, "window must be >= 1");
  if (m.top_k < 1) throw Error(ErrorCode::kBadConfig, "k must be >= 1");
  if (m.graph_dim < 1) throw Error(ErrorCode::kBadConfig, "graph_dim must be >= 1");
  if (m.attention_heads < 1 || m.decoder.d_model % m.attention_heads != 0) {
    throw Error(ErrorCode::kBadConfig, "d_model must be divisible by attention_heads");
  }
  if (m.aux_sentiment_weight < 0.0) {
    throw Error(ErrorCode::kBadConfig, "loss.aux_sentiment_weight must be >= 0");
  }
  return config;
}

RunConfig LoadRunConfig(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kBadConfig, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseRunConfig(buf.str());
}

nlohmann::json ToJson(const ModelConfig &c) {
  return {{"d_model", c.decoder.d_model},
          {"layers", c.decoder.layers},
          {"heads", c.decoder.heads},
          {"max_positions", c.decoder.max_positions},
          {"ffn_multiplier", c.decoder.ffn_multiplier},
          {"graph_dim", c.graph_dim},
          {"attention_heads", c.attention_heads},
          {"block_placement",
           c.placement == BlockPlacement::kEveryLayer ? "every_layer" : "top_layer"},
          {"window", c.window},
          {"k", c.top_k},
          {"knowledge.allow_empty", c.allow_empty_knowledge},
          {"loss.aux_sentiment_weight", c.aux_sentiment_weight},
          {"provider", c.provider},
          {"classifier", c.classifier},
          {"encoder", c.encoder},
          {"provider_endpoint", c.provider_endpoint},
          {"classifier_endpoint", c.classifier_endpoint},
          {"encoder_endpoint", c.encoder_endpoint}};
}

nlohmann::json ToJson(const TrainConfig &c) {
  return {{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
          {"epochs", c.epochs},               {"seed", c.seed},
          {"use_sc", c.use_sc},               {"use_sgcr", c.use_sgcr},
          {"max_steps", c.max_steps}};
}

ModelConfig ModelConfigFromJson(const nlohmann::json &doc) {
  try {
    ModelConfig c;
    c.decoder.d_model = doc.at("d_model");
    c.decoder.layers = doc.at("layers");
    c.decoder.heads = doc.at("heads");
    c.decoder.max_positions = doc.at("max_positions");
    c.decoder.ffn_multiplier = doc.at("ffn_multiplier");
    c.graph_dim = doc.at("graph_dim");
    c.attention_heads = doc.at("attention_heads");
    c.placement = doc.at("block_placement") == "top_layer"
                      ? BlockPlacement::kTopLayer
                      : BlockPlacement::kEveryLayer;
    c.window = doc.at("window");
    c.top_k = doc.at("k");
    c.allow_empty_knowledge = doc.at("knowledge.allow_empty");
    c.aux_sentiment_weight = doc.at("loss.aux_sentiment_weight");
    c.provider = doc.at("provider");
    c.classifier = doc.at("classifier");
    c.encoder = doc.at("encoder");
    c.provider_endpoint = doc.at("provider_endpoint");
    c.classifier_endpoint = doc.at("classifier_endpoint");
    c.encoder_endpoint = doc.at("encoder_endpoint");
    return c;
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::kBadCheckpoint, std::string("model config: ") + e.what());
  }
}

TrainConfig TrainConfigFromJson(const nlohmann::json &doc) {
  try {
    TrainConfig c;
    c.learning_rate = doc.at("learning_rate");
    c.batch_size = doc.at("batch_size");
    c.epochs = doc.at("epochs");
    c.seed = doc.at("seed");
    c.use_sc = doc.at("use_sc");
    c.use_sgcr = doc.at("use_sgcr");
    c.max_steps = doc.at("max_steps");
    return c;
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::kBadCheckpoint, std::string("train config: ") + e.what());
  }
}

}  // namespace sentigraph
